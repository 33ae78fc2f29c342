"""Dense subspace and spectral primitives.

Subspaces are stored as orthonormal row bases.  Everything here is a pure
function of its arguments (randomness enters through an explicit numpy
Generator), dense, and O(d^3) at worst; the testbed targets d up to ~2048.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateInput,
    DimensionMismatch,
    EmptyList,
    OverlapDetected,
    RankDeficient,
    ZeroDimensional,
)

ORTHO_TOL = 1e-10
RANK_REL_TOL = 1e-10
SIGN_SCAN_TOL = 1e-12


@dataclass(frozen=True)
class Subspace:
    """A k-dimensional subspace of R^d, held as a k x d orthonormal row basis."""

    ambient_dim: int
    dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.shape != (self.dim, self.ambient_dim):
            raise DimensionMismatch(
                "basis shape %s does not match (dim=%d, ambient_dim=%d)"
                % (b.shape, self.dim, self.ambient_dim)
            )
        if not (0 <= self.dim <= self.ambient_dim):
            raise DimensionMismatch("need 0 <= dim <= ambient_dim")
        if self.dim > 0:
            gram = b @ b.T
            if np.abs(gram - np.eye(self.dim)).max() > ORTHO_TOL:
                raise DegenerateInput("basis rows are not orthonormal to 1e-10")
        object.__setattr__(self, "basis", b)


@dataclass(frozen=True)
class Spectrum:
    """Singular values, nonincreasing, one per column of the source matrix."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise DimensionMismatch("spectrum must be a flat list")
        if v.size and (np.any(v < 0) or np.any(np.diff(v) > 0)):
            raise DegenerateInput("singular values must be nonnegative and nonincreasing")
        object.__setattr__(self, "values", v)

    @property
    def max(self) -> float:
        return float(self.values[0])

    @property
    def min(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class EigCertificate:
    """Smallest eigenvalue of a symmetric PSD matrix plus the eigenvector
    achieving it.  The witness makes "for every unit v" claims checkable
    without enumerating a net: v*Mv >= lambda_min for all unit v.
    """

    lambda_min: float
    witness: np.ndarray

    def residual(self, matrix: np.ndarray) -> float:
        """|w^T M w - lambda_min| for the certified matrix."""
        q = float(self.witness @ np.asarray(matrix, dtype=float) @ self.witness)
        return abs(q - self.lambda_min)


def _as_matrix(vectors) -> np.ndarray:
    m = np.asarray(vectors, dtype=float)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise DimensionMismatch("expected a list of vectors")
    return m


def orthonormalize(vectors) -> Subspace:
    """Span of the given vectors as a Subspace.

    Rank is detected by Householder QR with column pivoting: diagonal entries
    of R below 1e-10 relative to the largest are treated as zero.
    """
    m = _as_matrix(vectors)
    n, d = m.shape
    if n > d:
        raise DimensionMismatch("more vectors (%d) than ambient dimension (%d)" % (n, d))
    q, r, _ = scipy.linalg.qr(m.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] <= 0.0:
        raise DegenerateInput("all input vectors are numerically zero")
    rank = int(np.sum(diag > RANK_REL_TOL * diag[0]))
    return Subspace(ambient_dim=d, dim=rank, basis=q[:, :rank].T)


def project(s: Subspace, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (s.ambient_dim,):
        raise DimensionMismatch("vector length %s, ambient %d" % (v.shape, s.ambient_dim))
    if s.dim == 0:
        return np.zeros_like(v)
    return s.basis.T @ (s.basis @ v)


def complement(s: Subspace) -> Subspace:
    """The orthogonal complement (dim d - k)."""
    d, k = s.ambient_dim, s.dim
    if k == 0:
        return Subspace(ambient_dim=d, dim=d, basis=np.eye(d))
    if k == d:
        return Subspace(ambient_dim=d, dim=0, basis=np.zeros((0, d)))
    q, _ = scipy.linalg.qr(s.basis.T, mode="full")
    return Subspace(ambient_dim=d, dim=d - k, basis=q[:, k:].T)


def direct_sum(u: Subspace, v: Subspace) -> Subspace:
    if u.ambient_dim != v.ambient_dim:
        raise DimensionMismatch("ambient dimensions differ")
    if u.dim == 0:
        return v
    if v.dim == 0:
        return u
    stacked = np.vstack([u.basis, v.basis])
    out = orthonormalize(stacked)
    if out.dim < u.dim + v.dim:
        raise OverlapDetected(
            "subspaces overlap: rank %d < %d + %d" % (out.dim, u.dim, v.dim)
        )
    return out


def kernel_vector(vectors) -> np.ndarray:
    """The unit vector orthogonal to d-1 independent vectors in R^d.

    Sign convention: the first coordinate exceeding 1e-12 in absolute value is
    made positive, so repeated runs agree exactly.
    """
    m = _as_matrix(vectors)
    n, d = m.shape
    if n != d - 1:
        raise DimensionMismatch("need d-1 vectors in R^d, got %d in R^%d" % (n, d))
    _, svals, vt = np.linalg.svd(m, full_matrices=True)
    if svals[-1] <= RANK_REL_TOL * svals[0]:
        raise RankDeficient(
            "input rank < d-1 (sigma_min/sigma_max = %.3e)" % (svals[-1] / svals[0])
        )
    w = vt[-1]
    for x in w:
        if abs(x) > SIGN_SCAN_TOL:
            if x < 0:
                w = -w
            break
    return w


def principal_angles(u: Subspace, v: Subspace) -> np.ndarray:
    """Principal angles between equal-dimensional subspaces, largest first.

    arccos of the singular values of B_u B_v^T, clamped into [0,1] before the
    arccos so roundoff cannot produce NaN.
    """
    if u.ambient_dim != v.ambient_dim:
        raise DimensionMismatch("ambient dimensions differ")
    if u.dim != v.dim:
        raise DimensionMismatch("principal angles need equal dims (%d vs %d)" % (u.dim, v.dim))
    if u.dim == 0:
        return np.zeros(0)
    cosines = np.linalg.svd(u.basis @ v.basis.T, compute_uv=False)
    cosines = np.clip(cosines, 0.0, 1.0)
    return np.arccos(cosines)[::-1]


def chordal_distance(u: Subspace, v: Subspace) -> float:
    """sqrt(sum sin^2 theta_i) over the principal angles.

    The sines are taken as the singular values of B_u (I - P_v), which equals
    sin of the principal angles for equal-dim subspaces but stays accurate for
    tiny angles where arccos near 1 loses half the significant digits.
    """
    if u.ambient_dim != v.ambient_dim:
        raise DimensionMismatch("ambient dimensions differ")
    if u.dim != v.dim:
        raise DimensionMismatch("chordal distance needs equal dims (%d vs %d)" % (u.dim, v.dim))
    if u.dim == 0:
        return 0.0
    resid = u.basis - (u.basis @ v.basis.T) @ v.basis
    sines = np.clip(np.linalg.svd(resid, compute_uv=False), 0.0, 1.0)
    return float(np.sqrt(np.sum(sines**2)))


def singular_values(m) -> Spectrum:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch("expected a matrix")
    vals = np.linalg.svd(m, compute_uv=False)
    ncols = m.shape[1]
    if vals.size < ncols:
        vals = np.concatenate([vals, np.zeros(ncols - vals.size)])
    return Spectrum(values=vals)


def min_eig_projector_sum(subspaces) -> EigCertificate:
    """Certificate for lambda_min of sum_i P_i over the given subspaces.

    Since min over unit v of sum_i ||Proj_i(v)||^2 equals this eigenvalue, a
    strictly positive lambda_min certifies that no direction is simultaneously
    near-orthogonal to every subspace in the list.
    """
    subspaces = list(subspaces)
    if not subspaces:
        raise EmptyList("need at least one subspace")
    d = subspaces[0].ambient_dim
    m = np.zeros((d, d))
    for s in subspaces:
        if s.ambient_dim != d:
            raise DimensionMismatch("mixed ambient dimensions")
        if s.dim:
            m += s.basis.T @ s.basis
    evals, evecs = np.linalg.eigh(m)
    lam = max(float(evals[0]), 0.0)
    w = evecs[:, 0]
    return EigCertificate(lambda_min=lam, witness=w / np.linalg.norm(w))


def sample_uniform_sphere(d: int, rng: np.random.Generator) -> np.ndarray:
    if d < 1:
        raise ZeroDimensional("sphere needs d >= 1")
    while True:
        g = rng.standard_normal(d)
        n = np.linalg.norm(g)
        if n > 0:
            return g / n


def sample_uniform_subsphere(s: Subspace, rng: np.random.Generator) -> np.ndarray:
    if s.dim < 1:
        raise ZeroDimensional("subsphere needs dim >= 1")
    while True:
        g = rng.standard_normal(s.dim)
        n = np.linalg.norm(g)
        if n > 0:
            return s.basis.T @ (g / n)


def sample_grassmannian(k: int, d: int, rng: np.random.Generator) -> Subspace:
    """Uniform (rotation-invariant) random k-dimensional subspace of R^d."""
    if not (1 <= k <= d):
        raise DimensionMismatch("need 1 <= k <= d")
    for _ in range(16):
        g = rng.standard_normal((k, d))
        try:
            s = orthonormalize(g)
        except DegenerateInput:
            continue
        if s.dim == k:
            return s
    raise RankDeficient("could not draw a rank-%d Gaussian matrix" % k)
