"""Wrappers that turn solvers for the derived problems back into null-vector
solvers.

Both wrappers are stateless combinators: all persistent memory belongs to the
inner algorithm, so the wrapped algorithm runs under exactly the inner bit
budget.  The equation-insertion position of the regression wrapper is a pure
function of shared randomness, re-derived at every step instead of stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateOutput, ValidationError
from .streaming import OnePassAlgorithm, SharedRandomness


@dataclass(frozen=True)
class ReductionConfig:
    """Constants shared by the two reductions.

    norm_floor guards the regression wrapper's normalization: an inner output
    shorter than this cannot have met its loss guarantee, so normalizing it
    would fabricate a meaningless answer.
    """

    c4: float
    cf: float
    norm_floor: float | None = None

    def __post_init__(self):
        if self.c4 <= 0 or self.cf <= 0:
            raise ValidationError("c4 and cf must be positive")
        if self.norm_floor is None:
            object.__setattr__(self, "norm_floor", self.cf / 2.0)
        if self.norm_floor <= 0:
            raise ValidationError("norm_floor must be positive")

    @classmethod
    def from_constants(cls, consts) -> "ReductionConfig":
        return cls(c4=consts.c4, cf=consts.cf)


class AnvViaLsp(OnePassAlgorithm):
    """Feed each stream vector as a +/- labeled pair shifted along e1.

    Inner step indices are 2i-1 and 2i for outer step i, so a resumed run
    (protocol party 2) continues the inner numbering consistently.
    """

    def __init__(self, lsp_alg: OnePassAlgorithm, cfg: ReductionConfig):
        self.inner = lsp_alg
        self.cfg = cfg

    def update(self, i, sample, state, shared):
        theta = np.asarray(sample, dtype=float)
        d = theta.shape[0]
        shift = np.zeros(d)
        shift[0] = self.cfg.c4 / math.sqrt(d)
        state = self.inner.update(2 * i - 1, (theta + shift, 1.0), state, shared)
        state = self.inner.update(2 * i, (theta - shift, -1.0), state, shared)
        return state

    def finalize(self, state, shared):
        w = np.asarray(self.inner.finalize(state, shared), dtype=float)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise DegenerateOutput("inner separator returned the zero vector")
        return w / norm


def anv_via_lsp(lsp_alg: OnePassAlgorithm, cfg: ReductionConfig) -> OnePassAlgorithm:
    return AnvViaLsp(lsp_alg, cfg)


class AnvViaLr(OnePassAlgorithm):
    """Feed the stream as homogeneous equations plus one pinned equation.

    Every stream vector theta_k becomes the equation theta_k^T w = 0; the
    equation e1^T w = cf is inserted after position p, with p uniform in
    {0, ..., d-1} derived from shared randomness (never stored).  The inner
    index of theta_k is k for k <= p and k+1 afterwards; the pinned equation
    sits at p+1.
    """

    def __init__(self, lr_alg: OnePassAlgorithm, cfg: ReductionConfig, seed: int = 0):
        self.inner = lr_alg
        self.cfg = cfg
        self.seed = int(seed)

    def _position(self, d: int, shared: SharedRandomness) -> int:
        u = shared.generator("anv-via-lr", self.seed).random()
        return min(int(u * d), d - 1)

    def _pinned(self, d: int):
        e1 = np.zeros(d)
        e1[0] = 1.0
        return (e1, self.cfg.cf)

    def update(self, i, sample, state, shared):
        theta = np.asarray(sample, dtype=float)
        d = theta.shape[0]
        p = self._position(d, shared)
        if p == 0 and i == 1:
            state = self.inner.update(1, self._pinned(d), state, shared)
        inner_i = i if i <= p else i + 1
        state = self.inner.update(inner_i, (theta, 0.0), state, shared)
        if p == i:
            state = self.inner.update(p + 1, self._pinned(d), state, shared)
        return state

    def finalize(self, state, shared):
        w = np.asarray(self.inner.finalize(state, shared), dtype=float)
        norm = np.linalg.norm(w)
        if norm < self.cfg.norm_floor:
            raise DegenerateOutput(
                "inner solver norm %.3g below floor %.3g" % (norm, self.cfg.norm_floor)
            )
        return w / norm


def anv_via_lr(lr_alg: OnePassAlgorithm, cfg: ReductionConfig, seed: int = 0) -> OnePassAlgorithm:
    return AnvViaLr(lr_alg, cfg, seed)
