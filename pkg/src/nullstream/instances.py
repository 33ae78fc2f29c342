"""Problem instance generators and evaluators.

Three families share one geometric core: a stream of vectors whose kernel
direction is the planted witness.

* approximate-null-vector (ANV): given the vectors themselves, output a unit
  vector nearly orthogonal to all of them;
* labeled pairs: each vector is split into a +/- pair shifted along the first
  axis, and any separator of the pairs is automatically a good ANV output;
* linear equations: the vectors become homogeneous equations with a single
  inhomogeneous first-axis equation hidden at a random position.

Conditioned instances demand the witness have a first coordinate of at least
cf.  That event is realized by exact rejection sampling; given the kernel, the
vectors are not uniform on the orthogonal subsphere (the conditional law
carries a determinant weight), so direct construction would silently bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .errors import (
    AcceptanceTooRare,
    DegenerateInput,
    DimensionMismatch,
    NotUnit,
    RankDeficient,
    ValidationError,
)
from .linalg import (
    kernel_vector,
    sample_grassmannian,
    sample_uniform_sphere,
    sample_uniform_subsphere,
    Subspace,
)

GAUSSIAN_RAW = "gaussian-raw"
SPHERE_CONDITIONED = "sphere-conditioned"

WITNESS_RESIDUAL_TOL = 1e-9
UNIT_TOL = 1e-10
DEFAULT_MAX_ATTEMPTS = 20000


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class AnvInstance:
    variant: str
    d: int
    vectors: np.ndarray
    witness: np.ndarray
    cf: float | None = None

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        w = np.asarray(self.witness, dtype=float)
        if self.variant not in (GAUSSIAN_RAW, SPHERE_CONDITIONED):
            raise ValidationError("unknown variant %r" % (self.variant,))
        if v.shape != (self.d - 1, self.d) or w.shape != (self.d,):
            raise DimensionMismatch("vectors must be (d-1) x d with a d-vector witness")
        if abs(np.linalg.norm(w) - 1.0) > UNIT_TOL:
            raise NotUnit("witness must be unit")
        if np.abs(v @ w).max() > WITNESS_RESIDUAL_TOL:
            raise DegenerateInput("witness is not orthogonal to the vectors")
        if self.variant == SPHERE_CONDITIONED:
            if self.cf is None:
                raise ValidationError("conditioned instances carry cf")
            norms = np.linalg.norm(v, axis=1)
            if np.abs(norms - 1.0).max() > UNIT_TOL:
                raise NotUnit("conditioned vectors must be unit")
            if w[0] < self.cf:
                raise ValidationError("witness first coordinate below cf")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "witness", w)


@dataclass(frozen=True, eq=False)
class LspDataset:
    """Labeled points with a witness separating them at the claimed margin."""

    xs: np.ndarray
    ys: np.ndarray
    witness: np.ndarray
    margin: float

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        w = np.asarray(self.witness, dtype=float)
        if xs.ndim != 2 or ys.shape != (xs.shape[0],) or w.shape != (xs.shape[1],):
            raise DimensionMismatch("points, labels and witness shapes disagree")
        if not np.all(np.isin(ys, (-1.0, 1.0))):
            raise ValidationError("labels must be +/-1")
        if self.margin <= 0:
            raise ValidationError("margin must be positive")
        norms = np.linalg.norm(xs, axis=1)
        if np.any(norms == 0):
            raise DegenerateInput("zero data point")
        if np.min((xs @ w) * ys / norms) < self.margin - 1e-12:
            raise ValidationError("witness does not achieve the claimed margin")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "witness", w)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]

    def points(self):
        return list(zip(self.xs, self.ys))


@dataclass(frozen=True, eq=False)
class LrInstance:
    """Rows of norm <= 1, targets of total norm <= 1, and a small solution."""

    a: np.ndarray
    b: np.ndarray
    witness: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        w = np.asarray(self.witness, dtype=float)
        if a.ndim != 2 or b.shape != (a.shape[0],) or w.shape != (a.shape[1],):
            raise DimensionMismatch("matrix, target and witness shapes disagree")
        if np.linalg.norm(a, axis=1).max() > 1 + 1e-12:
            raise ValidationError("row norms must be at most 1")
        if np.linalg.norm(b) > 1 + 1e-12:
            raise ValidationError("target norm must be at most 1")
        if np.linalg.norm(w) > 1 + 1e-12:
            raise ValidationError("witness norm must be at most 1")
        if np.linalg.norm(a @ w - b) > 1e-10:
            raise ValidationError("witness does not solve the system")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "witness", w)

    @property
    def d(self) -> int:
        return self.a.shape[1]


def gen_anv_gaussian(d: int, seed) -> AnvInstance:
    if d < 2:
        raise ValidationError("need d >= 2")
    rng = _as_rng(seed)
    for _ in range(2):
        vectors = rng.standard_normal((d - 1, d))
        try:
            w = kernel_vector(vectors)
        except RankDeficient:
            continue
        return AnvInstance(variant=GAUSSIAN_RAW, d=d, vectors=vectors, witness=w)
    raise RankDeficient("Gaussian draw was rank deficient twice in a row")


def first_coord_tail(d: int, cf: float) -> float:
    """P(first coordinate of a uniform unit vector >= cf), integrated exactly.

    The marginal density is proportional to (1-t^2)^((d-3)/2); substituting
    t = sin(phi) gives a smooth cos^(d-2) integrand for adaptive quadrature
    even at d = 2 where the raw density blows up at the endpoints.
    """
    if d < 2 or not (0.0 <= cf < 1.0):
        raise ValidationError("need d >= 2 and 0 <= cf < 1")

    def integrand(phi):
        return math.cos(phi) ** (d - 2)

    num, _ = scipy.integrate.quad(integrand, math.asin(cf), math.pi / 2)
    den, _ = scipy.integrate.quad(integrand, -math.pi / 2, math.pi / 2)
    return num / den


def _conditioned_attempt(d: int, cf: float, rng: np.random.Generator):
    """One rejection attempt: vectors, a sign-symmetrized kernel, accept flag.

    The kernel direction of uniform vectors is uniform on the sphere once its
    sign is randomized, so the acceptance probability is exactly the one-sided
    tail reported by first_coord_tail.
    """
    g = rng.standard_normal((d - 1, d))
    thetas = g / np.linalg.norm(g, axis=1, keepdims=True)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    try:
        w = sign * kernel_vector(thetas)
    except RankDeficient:
        return thetas, None, False
    return thetas, w, bool(w[0] >= cf)


def gen_anv_conditioned(
    d: int, cf: float, seed, max_attempts: int = DEFAULT_MAX_ATTEMPTS
) -> AnvInstance:
    if d < 2:
        raise ValidationError("need d >= 2")
    if not (0.0 < cf < 1.0):
        raise ValidationError("cf must lie in (0, 1)")
    rng = _as_rng(seed)
    for _ in range(max_attempts):
        thetas, w, ok = _conditioned_attempt(d, cf, rng)
        if ok:
            return AnvInstance(
                variant=SPHERE_CONDITIONED, d=d, vectors=thetas, witness=w, cf=cf
            )
    tail = first_coord_tail(d, cf)
    raise AcceptanceTooRare(
        "no acceptance in %d attempts; exact tail estimate %.3e at d=%d cf=%g"
        % (max_attempts, tail, d, cf),
        tail_estimate=tail,
    )


def conditioned_acceptance_stats(d: int, cf: float, attempts: int, seed) -> tuple[int, int]:
    """(accepted, attempts) over a fixed number of rejection attempts."""
    rng = _as_rng(seed)
    accepted = 0
    for _ in range(attempts):
        _, _, ok = _conditioned_attempt(d, cf, rng)
        accepted += int(ok)
    return accepted, attempts


def anv_loss(inst: AnvInstance, w) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape != (inst.d,):
        raise DimensionMismatch("predictor has wrong dimension")
    if abs(np.linalg.norm(w) - 1.0) > 1e-6:
        raise NotUnit("anv_loss expects a unit predictor")
    sq = float(np.sum((inst.vectors @ w) ** 2))
    if inst.variant == GAUSSIAN_RAW:
        return sq / inst.d
    return sq


def gen_lsp_from_anv(inst: AnvInstance, c4: float) -> LspDataset:
    """Split each conditioned vector into a +/- pair shifted along e1.

    The witness is orthogonal to every vector, so its score on either point of
    pair i is exactly (first witness coordinate) * c4 / sqrt(d); any separator
    of the pairs must in turn have small squared scores on the vectors.
    """
    if inst.variant != SPHERE_CONDITIONED:
        raise ValidationError("labeled-pair reduction needs a conditioned instance")
    if c4 <= 0:
        raise ValidationError("c4 must be positive")
    d = inst.d
    shift = np.zeros(d)
    shift[0] = c4 / math.sqrt(d)
    xs = np.empty((2 * (d - 1), d))
    ys = np.empty(2 * (d - 1))
    xs[0::2] = inst.vectors + shift
    xs[1::2] = inst.vectors - shift
    ys[0::2] = 1.0
    ys[1::2] = -1.0
    margin = inst.cf * c4 / math.sqrt(d) / np.linalg.norm(xs, axis=1).max()
    return LspDataset(xs=xs, ys=ys, witness=inst.witness, margin=margin)


def gen_lsp_margin(d: int, m: int, gamma: float, seed) -> LspDataset:
    """Unit points at exact margin gamma from a random witness hyperplane.

    Each point is y*gamma*w + sqrt(1-gamma^2)*z with z a uniform unit vector
    orthogonal to the witness w, so margin_of(w, ds) == gamma exactly and the
    dataset is as hard as its stated margin allows.
    """
    if d < 2 or m < 1:
        raise ValidationError("need d >= 2 and m >= 1")
    if not 0 < gamma < 1:
        raise ValidationError("gamma must lie in (0, 1)")
    rng = _as_rng(seed)
    w = sample_uniform_sphere(d, rng)
    g = rng.standard_normal((m, d))
    g -= np.outer(g @ w, w)
    z = g / np.linalg.norm(g, axis=1, keepdims=True)
    ys = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    xs = gamma * np.outer(ys, w) + math.sqrt(1.0 - gamma * gamma) * z
    return LspDataset(xs=xs, ys=ys, witness=w, margin=gamma)


def sample_dv(s: Subspace, c: float, seed) -> tuple[np.ndarray, float]:
    """One labeled draw: uniform point of the subsphere of s, shifted by
    +/- (c/4) e1 / sqrt(d) with the matching label."""
    if c <= 0:
        raise ValidationError("c must be positive")
    rng = _as_rng(seed)
    x = sample_uniform_subsphere(s, rng)
    y = 1.0 if rng.random() < 0.5 else -1.0
    x = x.copy()
    x[0] += y * (c / 4.0) / math.sqrt(s.ambient_dim)
    return x, y


def gen_lsp_hard(
    d: int,
    m: int,
    cf: float,
    c: float,
    seed,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> tuple[LspDataset, Subspace, Subspace]:
    """The two-subspace family: a conditioned pair (V, U) of dimensions d/2
    and d/2-1, with m labeled draws around V followed by m around U."""
    if d < 4 or d % 2:
        raise ValidationError("need even d >= 4")
    if m < d:
        raise ValidationError("need m >= d")
    if not (0.0 < cf < 1.0):
        raise ValidationError("cf must lie in (0, 1)")
    rng = _as_rng(seed)
    for _ in range(max_attempts):
        v = sample_grassmannian(d // 2, d, rng)
        u = sample_grassmannian(d // 2 - 1, d, rng)
        stacked = np.vstack([v.basis, u.basis])
        sign = 1.0 if rng.random() < 0.5 else -1.0
        try:
            w = sign * kernel_vector(stacked)
        except RankDeficient:
            continue
        if w[0] < cf:
            continue
        draws = [sample_dv(v, c, rng) for _ in range(m)] + [
            sample_dv(u, c, rng) for _ in range(m)
        ]
        xs = np.array([x for x, _ in draws])
        ys = np.array([y for _, y in draws])
        margin = float(np.min((xs @ w) * ys / np.linalg.norm(xs, axis=1)))
        return LspDataset(xs=xs, ys=ys, witness=w, margin=margin), v, u
    tail = first_coord_tail(d, cf)
    raise AcceptanceTooRare(
        "no acceptance in %d attempts; exact tail estimate %.3e at d=%d cf=%g"
        % (max_attempts, tail, d, cf),
        tail_estimate=tail,
    )


def gen_lr_from_anv(inst: AnvInstance, seed) -> LrInstance:
    """Equations theta_i . w = 0 with the inhomogeneous equation e1 . w = cf
    hidden at a uniformly random row."""
    if inst.variant != SPHERE_CONDITIONED:
        raise ValidationError("equation reduction needs a conditioned instance")
    d = inst.d
    if inst.witness[0] < inst.cf:
        raise ValidationError("witness first coordinate below cf")
    rng = _as_rng(seed)
    pos = int(rng.integers(0, d))
    a = np.insert(inst.vectors, pos, np.eye(d)[0], axis=0)
    b = np.zeros(d)
    b[pos] = inst.cf
    witness = inst.cf * inst.witness / inst.witness[0]
    return LrInstance(a=a, b=b, witness=witness)


def lr_loss(inst: LrInstance, w) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape != (inst.d,):
        raise DimensionMismatch("predictor has wrong dimension")
    r = inst.a @ w - inst.b
    return float(r @ r)


def margin_of(w, ds: LspDataset) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape != (ds.d,):
        raise DimensionMismatch("separator has wrong dimension")
    return float(np.min((ds.xs @ w) * ds.ys / np.linalg.norm(ds.xs, axis=1)))


def classification_error(w, ds: LspDataset) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape != (ds.d,):
        raise DimensionMismatch("separator has wrong dimension")
    return float(np.mean((ds.xs @ w) * ds.ys <= 0))
