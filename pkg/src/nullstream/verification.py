"""Numerical certificates for the geometric facts behind the lower bounds.

Every "for all unit v" claim is certified through an eigenvalue reduction
(smallest eigenvalue of a projector sum, or generalized eigenvalues of a
pencil restricted to a row space), never through sampling over v, so a pass
is exact up to the eigensolver.  Monte-Carlo enters only where the claims
themselves are probabilistic (violation frequencies, sampling distributions).

Each certifier returns a LemmaReport; per-trial rows ride along for CSV
export and make pass_fraction auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.stats

from .config import DEFAULTS
from .errors import ValidationError
from .instances import first_coord_tail
from .linalg import (
    Subspace,
    chordal_distance,
    complement,
    min_eig_projector_sum,
    orthonormalize,
    sample_grassmannian,
)

COMORTH_TOL = 1e-8
PASS_CONSISTENCY_TOL = 1e-12
CDF_GRID_POINTS = 200_001


@dataclass(frozen=True)
class LemmaReport:
    lemma_id: str
    d: int
    trials: int
    pass_fraction: float
    statistics: dict
    seed: int
    trial_rows: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not 0.0 <= self.pass_fraction <= 1.0:
            raise ValidationError("pass_fraction must lie in [0, 1]")
        rows = [r for r in self.trial_rows if "passed" in r]
        if rows:
            recomputed = sum(1.0 for r in rows if r["passed"]) / len(rows)
            if abs(recomputed - self.pass_fraction) > PASS_CONSISTENCY_TOL:
                raise ValidationError(
                    "pass_fraction %.17g disagrees with trial rows (%.17g)"
                    % (self.pass_fraction, recomputed)
                )


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng((int(seed), int(trial)))


def _fraction(rows) -> float:
    return sum(1.0 for r in rows if r["passed"]) / len(rows) if rows else 0.0


# ---------------------------------------------------------------------------
# joint-solution certificate


def certify_no_joint_sol(
    d: int,
    delta_threshold: float,
    trials: int,
    seed: int,
    c_emp: float = DEFAULTS.verify.joint_c_emp,
) -> LemmaReport:
    """Certify that far-apart subspace triples leave no small-projection unit
    vector: lambda_min(P_V1 + P_V2 + P_U) >= 3 c_emp^2 forces the largest of
    the three projection norms to at least c_emp for every unit v.

    Trials whose (V1, V2) pair lands closer than delta_threshold * d/2 in
    squared chordal distance are skipped: the claim's hypothesis is not met.
    A probe statistic (smallest projection onto V2 of a random low-dimensional
    subspace of V1-perp) is reported but not asserted.
    """
    if d % 2 or d < 8:
        raise ValidationError("need even d >= 8")
    rows = []
    threshold = 3.0 * c_emp * c_emp
    probe_dim = max(1, d // 16)
    for t in range(trials):
        rng = _trial_rng(seed, t)
        v1 = sample_grassmannian(d // 2, d, rng)
        v2 = sample_grassmannian(d // 2, d, rng)
        u = sample_grassmannian(d // 2 - 1, d, rng)
        dist2 = chordal_distance(v1, v2) ** 2
        if dist2 < delta_threshold * d / 2.0:
            rows.append({"trial": t, "skipped": True, "dist2": dist2})
            continue
        cert = min_eig_projector_sum([v1, v2, u])
        perp = complement(v1)
        coeff = orthonormalize(rng.standard_normal((probe_dim, perp.dim)))
        probe_basis = coeff.basis @ perp.basis
        probe = float(np.linalg.svd(v2.basis @ probe_basis.T, compute_uv=False).min())
        rows.append(
            {
                "trial": t,
                "skipped": False,
                "dist2": dist2,
                "lambda_min": cert.lambda_min,
                "probe_min_proj": probe,
                "passed": bool(cert.lambda_min >= threshold),
            }
        )
    counted = [r for r in rows if not r["skipped"]]
    stats = {
        "counted": float(len(counted)),
        "skipped": float(len(rows) - len(counted)),
        "threshold": threshold,
        "delta_threshold": float(delta_threshold),
        "c_emp": float(c_emp),
    }
    if counted:
        stats["min_lambda_min"] = min(r["lambda_min"] for r in counted)
        stats["mean_lambda_min"] = float(np.mean([r["lambda_min"] for r in counted]))
        stats["probe_min"] = min(r["probe_min_proj"] for r in counted)
        stats["probe_mean"] = float(np.mean([r["probe_min_proj"] for r in counted]))
    return LemmaReport(
        lemma_id="no-joint-sol",
        d=d,
        trials=trials,
        pass_fraction=_fraction(counted),
        statistics=stats,
        seed=seed,
        trial_rows=tuple(rows),
    )


def joint_sol_lambda_min(subspaces) -> float:
    """Exact smallest eigenvalue of the projector sum; 0 iff some unit vector
    escapes every subspace in the list."""
    return min_eig_projector_sum(subspaces).lambda_min


# ---------------------------------------------------------------------------
# quadratic-form sandwich certificate


def sandwich_bounds(t: float, kmax: float = 0.5) -> tuple[float, float]:
    s = (1.0 + t) * math.sqrt(kmax)
    if s >= 1.0:
        raise ValidationError("(1+t) sqrt(kmax) must be < 1 for a finite upper bound")
    return (1.0 + s) ** -2, (1.0 - s) ** -2


def sandwich_extremes(g: np.ndarray, rows_v: int) -> tuple[float, float]:
    """Extremal ratios of ||P_V v||^2 + ||P_U v||^2 over ||G v||^2 on the row
    space of G, where V spans the first rows_v rows and U the rest.

    Both forms vanish on the kernel of G, so the pencil is reduced to an
    orthonormal row-space basis before the generalized eigensolve.
    """
    g = np.asarray(g, dtype=float)
    v = orthonormalize(g[:rows_v])
    u = orthonormalize(g[rows_v:])
    rowspace = orthonormalize(g)
    vb = v.basis @ rowspace.basis.T
    ub = u.basis @ rowspace.basis.T
    gb = g @ rowspace.basis.T
    a = vb.T @ vb + ub.T @ ub
    b = gb.T @ gb
    eigs = scipy.linalg.eigh(a, b, eigvals_only=True)
    return float(eigs[0]), float(eigs[-1])


def certify_sandwich(d: int, t: float, trials: int, seed: int) -> LemmaReport:
    """Certify the two-sided comparison between the projector-sum form and the
    Gram form of a Gaussian matrix with independent N(0, 1/d) entries."""
    if d % 2 or d < 8:
        raise ValidationError("need even d >= 8")
    k1 = 0.5
    k2 = 0.5 - 1.0 / d
    lower, upper = sandwich_bounds(t, max(k1, k2))
    rows = []
    for trial in range(trials):
        rng = _trial_rng(seed, trial)
        g = rng.standard_normal((d - 1, d)) / math.sqrt(d)
        rho_min, rho_max = sandwich_extremes(g, d // 2)
        rows.append(
            {
                "trial": trial,
                "rho_min": rho_min,
                "rho_max": rho_max,
                "passed": bool(lower <= rho_min and rho_max <= upper),
            }
        )
    stats = {
        "lower": lower,
        "upper": upper,
        "t": float(t),
        "min_rho": min(r["rho_min"] for r in rows) if rows else float("nan"),
        "max_rho": max(r["rho_max"] for r in rows) if rows else float("nan"),
    }
    return LemmaReport(
        lemma_id="sandwich",
        d=d,
        trials=trials,
        pass_fraction=_fraction(rows),
        statistics=stats,
        seed=seed,
        trial_rows=tuple(rows),
    )


# ---------------------------------------------------------------------------
# singular-value concentration


def singular_value_experiment(
    N: int,
    d: int,
    t: float,
    trials: int,
    seed: int,
    envelope: tuple[float, float] = (
        DEFAULTS.verify.sigma_envelope_lo,
        DEFAULTS.verify.sigma_envelope_hi,
    ),
) -> LemmaReport:
    """Frequency of the sqrt(N) +- sqrt(d) +- t singular-value sandwich for
    standard Gaussian matrices, plus mid-spectrum quantile ratios."""
    if N < d:
        raise ValidationError("need N >= d")
    lo = math.sqrt(N) - math.sqrt(d) - t
    hi = math.sqrt(N) + math.sqrt(d) + t
    taus = (0.5, 0.75, 0.9)
    rows = []
    for trial in range(trials):
        rng = _trial_rng(seed, trial)
        s = np.linalg.svd(rng.standard_normal((N, d)), compute_uv=False)
        row = {
            "trial": trial,
            "sigma_min": float(s[-1]),
            "sigma_max": float(s[0]),
            "passed": bool(lo <= s[-1] and s[0] <= hi),
        }
        for tau in taus:
            idx = math.ceil(tau * d) - 1
            row["ratio_%d" % int(100 * tau)] = float(s[idx] / ((1 - tau) * math.sqrt(d)))
        rows.append(row)
    prob_bound = 2.0 * math.exp(-t * t / 2.0)
    sigma_bin = math.sqrt(prob_bound * (1 - prob_bound) / trials) if trials else 0.0
    stats = {
        "lower": lo,
        "upper": hi,
        "t": float(t),
        "violation_rate": 1.0 - _fraction(rows),
        "prob_bound": prob_bound,
        "sigma_binomial": sigma_bin,
    }
    e_lo, e_hi = envelope
    for tau in taus:
        key = "ratio_%d" % int(100 * tau)
        vals = np.array([r[key] for r in rows])
        stats["median_" + key] = float(np.median(vals))
        stats["envelope_frac_" + key] = float(np.mean((e_lo <= vals) & (vals <= e_hi)))
    return LemmaReport(
        lemma_id="singular-values",
        d=d,
        trials=trials,
        pass_fraction=_fraction(rows),
        statistics=stats,
        seed=seed,
        trial_rows=tuple(rows),
    )


# ---------------------------------------------------------------------------
# sphere marginals and concentration


def first_coord_cdf_grid(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Numerically integrated CDF of the first coordinate of a uniform unit
    vector, on a dense grid; the quadrature-based independent oracle."""
    xs = np.linspace(-1.0, 1.0, CDF_GRID_POINTS)
    pdf = np.power(np.clip(1.0 - xs * xs, 0.0, None), (d - 3) / 2.0)
    steps = np.diff(xs) * 0.5 * (pdf[1:] + pdf[:-1])
    cdf = np.concatenate([[0.0], np.cumsum(steps)])
    cdf /= cdf[-1]
    return xs, cdf


def _ks_statistic(sample: np.ndarray, cdf_at: np.ndarray) -> float:
    n = sample.shape[0]
    i = np.arange(1, n + 1)
    return float(np.maximum(np.abs(cdf_at - i / n), np.abs(cdf_at - (i - 1) / n)).max())


def sphere_marginal_tests(
    d: int,
    samples: int,
    c_f: float,
    seed: int,
    ks_normal_max: float = DEFAULTS.verify.ks_normal_max,
    ks_exact_max: float = DEFAULTS.verify.ks_exact_max,
) -> LemmaReport:
    """Empirical law of the first sphere coordinate against two references:
    the exact integrated marginal and the N(0,1) limit of sqrt(d) times it."""
    if d < 4:
        raise ValidationError("need d >= 4")
    rng = np.random.default_rng((int(seed), 0))
    g = rng.standard_normal((samples, d))
    coords = g[:, 0] / np.linalg.norm(g, axis=1)
    coords.sort()
    xs, cdf = first_coord_cdf_grid(d)
    ks_exact = _ks_statistic(coords, np.interp(coords, xs, cdf))
    ks_normal = float(scipy.stats.kstest(math.sqrt(d) * coords, "norm").statistic)
    exact_tail = first_coord_tail(d, c_f)
    emp_tail = float(np.mean(coords >= c_f))
    alpha = -math.log(exact_tail) / d if exact_tail > 0 else float("inf")
    passed = ks_exact <= ks_exact_max and ks_normal <= ks_normal_max
    stats = {
        "ks_exact": ks_exact,
        "ks_normal": ks_normal,
        "ks_exact_max": float(ks_exact_max),
        "ks_normal_max": float(ks_normal_max),
        "emp_tail": emp_tail,
        "exact_tail": exact_tail,
        "alpha": alpha,
        "samples": float(samples),
    }
    return LemmaReport(
        lemma_id="sphere-marginal",
        d=d,
        trials=1,
        pass_fraction=1.0 if passed else 0.0,
        statistics=stats,
        seed=seed,
        trial_rows=({"trial": 0, "passed": passed, "ks_exact": ks_exact, "ks_normal": ks_normal},),
    )


def sphere_concentration_test(
    d: int,
    trials: int,
    seed: int,
    std_cap: float = DEFAULTS.verify.std_cap,
) -> LemmaReport:
    """Concentration of the 1-Lipschitz function y -> ||proj of y onto a fixed
    half-dimensional subspace||: its std over uniform y shrinks like 1/sqrt(d)."""
    if d % 2 or d < 4:
        raise ValidationError("need even d >= 4")
    u2 = sample_grassmannian(d // 2, d, np.random.default_rng((int(seed), 0)))
    rng = np.random.default_rng((int(seed), 1))
    g = rng.standard_normal((trials, d))
    ys = g / np.linalg.norm(g, axis=1, keepdims=True)
    f = np.linalg.norm(ys @ u2.basis.T, axis=1)
    std = float(np.std(f))
    mean = float(np.mean(f))
    passed = std <= std_cap / math.sqrt(d)
    stats = {
        "std": std,
        "mean": mean,
        "std_cap": float(std_cap),
        "cap_value": std_cap / math.sqrt(d),
        "mean_reference": math.sqrt(0.5),
    }
    return LemmaReport(
        lemma_id="sphere-concentration",
        d=d,
        trials=trials,
        pass_fraction=1.0 if passed else 0.0,
        statistics=stats,
        seed=seed,
        trial_rows=({"trial": 0, "passed": passed, "std": std},),
    )


# ---------------------------------------------------------------------------
# packing probe and complement symmetry


def greedy_packing(
    k: int, d: int, radius: float, candidate_budget: int, seed: int
) -> tuple[list[Subspace], LemmaReport]:
    """Greedy chordal-distance packing probe on a small Grassmannian.

    Distances against the retained set use the Frobenius identity
    chordal^2 = k - ||B_b A_b^T||_F^2, which avoids per-pair SVDs.
    """
    if not 1 <= k <= d:
        raise ValidationError("need 1 <= k <= d")
    if d > 24:
        raise ValidationError("packing probe is capped at d <= 24")
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    rng = np.random.default_rng((int(seed), 0))
    kept: list[Subspace] = []
    stack = np.zeros((0, k, d))
    rows = []
    for trial in range(candidate_budget):
        cand = sample_grassmannian(k, d, rng)
        if stack.shape[0]:
            cross = stack @ cand.basis.T
            dist = np.sqrt(np.clip(k - (cross**2).sum(axis=(1, 2)), 0.0, None))
            ok = bool(np.all(dist >= radius))
        else:
            ok = True
        if ok:
            kept.append(cand)
            stack = np.concatenate([stack, cand.basis[None]], axis=0)
        rows.append({"trial": trial, "kept": ok})
    report = LemmaReport(
        lemma_id="sep-packing",
        d=d,
        trials=candidate_budget,
        pass_fraction=1.0,
        statistics={"retained": float(len(kept)), "radius": float(radius), "k": float(k)},
        seed=seed,
        trial_rows=tuple(rows),
    )
    return kept, report


def comorth_check(d: int, trials: int, seed: int) -> LemmaReport:
    """Chordal distance is invariant under taking orthogonal complements."""
    if d < 3:
        raise ValidationError("need d >= 3")
    rows = []
    for trial in range(trials):
        rng = _trial_rng(seed, trial)
        k = int(rng.integers(1, d))
        u = sample_grassmannian(k, d, rng)
        v = sample_grassmannian(k, d, rng)
        dev = abs(chordal_distance(u, v) - chordal_distance(complement(u), complement(v)))
        rows.append({"trial": trial, "deviation": dev, "passed": bool(dev <= COMORTH_TOL)})
    stats = {
        "max_deviation": max(r["deviation"] for r in rows) if rows else 0.0,
        "tolerance": COMORTH_TOL,
    }
    return LemmaReport(
        lemma_id="comorth",
        d=d,
        trials=trials,
        pass_fraction=_fraction(rows),
        statistics=stats,
        seed=seed,
        trial_rows=tuple(rows),
    )
