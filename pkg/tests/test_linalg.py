import numpy as np
import pytest
import scipy.linalg
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from nullstream import linalg
from nullstream.errors import (
    DegenerateInput,
    DimensionMismatch,
    EmptyList,
    OverlapDetected,
    RankDeficient,
    ZeroDimensional,
)

ATOL = 1e-10


def test_orthonormalize_already_orthonormal():
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    s = linalg.orthonormalize([e1, e2])
    assert s.dim == 2
    assert_allclose(linalg.project(s, np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 0.0], atol=ATOL)


def test_orthonormalize_rank_deficient_input():
    e1 = np.array([1.0, 0.0, 0.0])
    s = linalg.orthonormalize([e1, 2 * e1])
    assert s.dim == 1
    assert_allclose(np.abs(s.basis[0]), e1, atol=ATOL)


def test_orthonormalize_gaussian_rank_matches_svd_rank():
    # oracle: independent SVD rank count
    rng = np.random.default_rng(7)
    for _ in range(20):
        m = rng.standard_normal((5, 10))
        s = linalg.orthonormalize(m)
        assert s.dim == np.linalg.matrix_rank(m)
        # span check: every input row is reproduced by projection
        for row in m:
            assert_allclose(s.basis.T @ (s.basis @ row), row, atol=1e-9)


def test_orthonormalize_rejects_zero_input():
    with pytest.raises(DegenerateInput):
        linalg.orthonormalize(np.zeros((3, 6)))


def test_project_trivial_cases():
    s = linalg.orthonormalize([np.array([1.0, 0.0])])
    assert_allclose(linalg.project(s, np.array([3.0, 4.0])), [3.0, 0.0], atol=ATOL)
    full = linalg.orthonormalize(np.eye(5))
    v = np.arange(5.0)
    assert_allclose(linalg.project(full, v), v, atol=ATOL)


def test_project_dimension_mismatch():
    s = linalg.orthonormalize([np.array([1.0, 0.0])])
    with pytest.raises(DimensionMismatch):
        linalg.project(s, np.zeros(3))


def test_complement_small():
    s = linalg.orthonormalize([np.array([1.0, 0.0])])
    c = linalg.complement(s)
    assert c.dim == 1
    assert_allclose(np.abs(c.basis[0]), [0.0, 1.0], atol=ATOL)


def test_complement_involution_and_orthogonality():
    rng = np.random.default_rng(3)
    s = linalg.sample_grassmannian(3, 8, rng)
    c = linalg.complement(s)
    assert c.dim == 5
    assert np.abs(c.basis @ s.basis.T).max() < 1e-10
    cc = linalg.complement(c)
    assert linalg.chordal_distance(cc, s) < 1e-8


def test_complement_edge_dims():
    full = linalg.orthonormalize(np.eye(4))
    c = linalg.complement(full)
    assert c.dim == 0
    assert linalg.complement(c).dim == 4


def test_direct_sum_plane():
    u = linalg.orthonormalize([np.array([1.0, 0.0, 0.0])])
    v = linalg.orthonormalize([np.array([0.0, 1.0, 0.0])])
    s = linalg.direct_sum(u, v)
    assert s.dim == 2
    assert np.linalg.norm(linalg.project(s, np.array([0.0, 0.0, 1.0]))) < ATOL


def test_direct_sum_generic_dimension():
    rng = np.random.default_rng(11)
    d = 16
    for _ in range(10):
        v = linalg.sample_grassmannian(d // 2, d, rng)
        u = linalg.sample_grassmannian(d // 2 - 1, d, rng)
        assert linalg.direct_sum(v, u).dim == d - 1


def test_direct_sum_overlap():
    u = linalg.orthonormalize([np.array([1.0, 0.0, 0.0])])
    with pytest.raises(OverlapDetected):
        linalg.direct_sum(u, u)


def test_kernel_vector_axis_cases():
    e = np.eye(3)
    assert_allclose(linalg.kernel_vector(e[:2]), e[2], atol=ATOL)
    assert_allclose(linalg.kernel_vector(e[1:]), e[0], atol=ATOL)


def test_kernel_vector_gaussian_residuals():
    # oracle: scipy null_space on the same matrix
    rng = np.random.default_rng(5)
    d = 20
    m = rng.standard_normal((d - 1, d))
    w = linalg.kernel_vector(m)
    assert abs(np.linalg.norm(w) - 1.0) < 1e-10
    assert np.abs(m @ w).max() < 1e-10
    ns = scipy.linalg.null_space(m)[:, 0]
    assert_allclose(np.abs(w @ ns), 1.0, atol=1e-9)


def test_kernel_vector_sign_convention():
    rng = np.random.default_rng(9)
    for _ in range(20):
        m = rng.standard_normal((7, 8))
        w = linalg.kernel_vector(m)
        lead = w[np.abs(w) > 1e-12][0]
        assert lead > 0


def test_kernel_vector_rank_deficient():
    m = np.zeros((3, 4))
    m[0, 0] = m[1, 1] = 1.0
    m[2] = m[0]
    with pytest.raises(RankDeficient):
        linalg.kernel_vector(m)


def test_principal_angles_identical_and_orthogonal():
    u = linalg.orthonormalize([np.array([1.0, 0.0])])
    v = linalg.orthonormalize([np.array([0.0, 1.0])])
    assert_allclose(linalg.principal_angles(u, u), [0.0], atol=ATOL)
    assert_allclose(linalg.principal_angles(u, v), [np.pi / 2], atol=ATOL)


def test_principal_angle_matches_planted_rotation():
    alpha = 0.3
    u = linalg.orthonormalize([np.array([1.0, 0.0, 0.0])])
    v = linalg.orthonormalize([np.array([np.cos(alpha), np.sin(alpha), 0.0])])
    assert_allclose(linalg.principal_angles(u, v), [alpha], atol=1e-12)


def test_principal_angles_ordering_largest_first():
    rng = np.random.default_rng(2)
    u = linalg.sample_grassmannian(4, 12, rng)
    v = linalg.sample_grassmannian(4, 12, rng)
    ang = linalg.principal_angles(u, v)
    assert np.all(np.diff(ang) <= 1e-15)


def test_principal_angles_dim_mismatch():
    u = linalg.orthonormalize([np.array([1.0, 0.0, 0.0])])
    v = linalg.orthonormalize(np.eye(3)[:2])
    with pytest.raises(DimensionMismatch):
        linalg.principal_angles(u, v)


def test_chordal_distance_small_cases():
    e = np.eye(3)
    u = linalg.orthonormalize([e[0]])
    v = linalg.orthonormalize([e[1]])
    assert linalg.chordal_distance(u, u) == 0.0
    assert_allclose(linalg.chordal_distance(u, v), 1.0, atol=ATOL)


@pytest.mark.parametrize("d", [8, 16, 32])
def test_chordal_complement_symmetry(d):
    rng = np.random.default_rng(100 + d)
    for _ in range(100):
        u = linalg.sample_grassmannian(d // 2, d, rng)
        v = linalg.sample_grassmannian(d // 2, d, rng)
        lhs = linalg.chordal_distance(u, v)
        rhs = linalg.chordal_distance(linalg.complement(u), linalg.complement(v))
        assert abs(lhs - rhs) <= 1e-8


def test_chordal_triangle_inequality():
    rng = np.random.default_rng(21)
    for _ in range(50):
        d = int(rng.integers(4, 21))
        k = int(rng.integers(1, d // 2 + 1))
        a = linalg.sample_grassmannian(k, d, rng)
        b = linalg.sample_grassmannian(k, d, rng)
        c = linalg.sample_grassmannian(k, d, rng)
        assert linalg.chordal_distance(a, c) <= (
            linalg.chordal_distance(a, b) + linalg.chordal_distance(b, c) + 1e-9
        )


def test_singular_values_diagonal():
    assert_allclose(linalg.singular_values(np.eye(3)).values, [1, 1, 1], atol=ATOL)
    assert_allclose(linalg.singular_values(np.diag([3.0, 2.0])).values, [3, 2], atol=ATOL)


def test_singular_values_frobenius_identity():
    rng = np.random.default_rng(13)
    m = rng.standard_normal((8, 5))
    s = linalg.singular_values(m)
    assert_allclose(np.sum(s.values**2), np.sum(m**2), atol=1e-10)


def test_singular_values_transpose_agreement():
    rng = np.random.default_rng(17)
    m = rng.standard_normal((6, 9))
    a = linalg.singular_values(m).values
    b = linalg.singular_values(m.T).values
    nz_a = a[a > 1e-12]
    nz_b = b[b > 1e-12]
    assert_allclose(nz_a, nz_b, atol=1e-10)


def test_singular_value_decomposition_consistency():
    # ||M sum(lambda_i v_i)||^2 = sum(lambda_i^2 sigma_i^2) for right singular
    # vectors v_i, checked against numpy's SVD factors.
    rng = np.random.default_rng(19)
    m = rng.standard_normal((9, 6))
    _, svals, vt = np.linalg.svd(m, full_matrices=False)
    lam = rng.standard_normal(svals.size)
    v = vt.T @ lam
    lhs = np.linalg.norm(m @ v) ** 2
    rhs = np.sum(lam**2 * svals**2)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, rhs)


def test_min_eig_projector_sum_singleton_is_zero():
    rng = np.random.default_rng(23)
    s = linalg.sample_grassmannian(3, 7, rng)
    cert = linalg.min_eig_projector_sum([s])
    assert cert.lambda_min <= 1e-10
    # witness lies in the complement
    assert np.linalg.norm(linalg.project(s, cert.witness)) < 1e-6


def test_min_eig_projector_sum_identity():
    e = np.eye(2)
    cert = linalg.min_eig_projector_sum(
        [linalg.orthonormalize([e[0]]), linalg.orthonormalize([e[1]])]
    )
    assert_allclose(cert.lambda_min, 1.0, atol=1e-12)


def test_min_eig_projector_sum_kernel_witness():
    # V + U has dim d-1, so the sum of the two projectors annihilates exactly
    # the kernel direction of the stacked bases; oracle is kernel_vector.
    rng = np.random.default_rng(29)
    d = 32
    v = linalg.sample_grassmannian(d // 2, d, rng)
    u = linalg.sample_grassmannian(d // 2 - 1, d, rng)
    cert = linalg.min_eig_projector_sum([v, u])
    assert cert.lambda_min <= 1e-10
    ker = linalg.kernel_vector(np.vstack([v.basis, u.basis]))
    assert_allclose(abs(cert.witness @ ker), 1.0, atol=1e-6)


def test_min_eig_projector_sum_certificate_residual():
    rng = np.random.default_rng(31)
    subs = [linalg.sample_grassmannian(5, 12, rng) for _ in range(3)]
    cert = linalg.min_eig_projector_sum(subs)
    m = np.zeros((12, 12))
    for s in subs:
        m += s.basis.T @ s.basis
    assert cert.residual(m) <= 1e-8 * max(1.0, cert.lambda_min)
    assert abs(np.linalg.norm(cert.witness) - 1.0) <= 1e-10


def test_min_eig_projector_sum_empty():
    with pytest.raises(EmptyList):
        linalg.min_eig_projector_sum([])


def test_sample_sphere_d1_signs():
    rng = np.random.default_rng(37)
    vals = [linalg.sample_uniform_sphere(1, rng)[0] for _ in range(200)]
    assert set(np.sign(vals)) == {-1.0, 1.0}
    assert all(abs(abs(v) - 1.0) < 1e-12 for v in vals)


def test_sample_sphere_coordinate_means():
    rng = np.random.default_rng(41)
    samples = np.array([linalg.sample_uniform_sphere(16, rng) for _ in range(10**5)])
    assert np.abs(samples.mean(axis=0)).max() < 0.02


def test_sample_subsphere_stays_in_span():
    rng = np.random.default_rng(43)
    s = linalg.orthonormalize(np.eye(4)[:2])
    for _ in range(50):
        x = linalg.sample_uniform_subsphere(s, rng)
        assert abs(np.linalg.norm(x) - 1.0) < 1e-12
        assert x[2] == 0.0 and x[3] == 0.0
    with pytest.raises(ZeroDimensional):
        linalg.sample_uniform_subsphere(linalg.complement(linalg.orthonormalize(np.eye(3))), rng)


def test_sample_grassmannian_full_space():
    rng = np.random.default_rng(47)
    s = linalg.sample_grassmannian(4, 4, rng)
    assert linalg.chordal_distance(s, linalg.orthonormalize(np.eye(4))) < 1e-8


def test_sample_grassmannian_mean_squared_chordal():
    # E sum sin^2(theta_i) = k(d-k)/d for independent uniform pairs
    rng = np.random.default_rng(53)
    d = 40
    vals = []
    for _ in range(200):
        u = linalg.sample_grassmannian(d // 2, d, rng)
        v = linalg.sample_grassmannian(d // 2, d, rng)
        vals.append(linalg.chordal_distance(u, v) ** 2)
    mean = np.mean(vals)
    assert abs(mean - d / 4) < 0.1 * (d / 4)


def test_sample_grassmannian_line_angle_uniform():
    # angle between a uniform line in R^2 and e1 is uniform on [0, pi/2]
    rng = np.random.default_rng(59)
    e1 = linalg.orthonormalize([np.array([1.0, 0.0])])
    angles = [
        linalg.principal_angles(linalg.sample_grassmannian(1, 2, rng), e1)[0]
        for _ in range(2000)
    ]
    stat = scipy.stats.kstest(angles, scipy.stats.uniform(loc=0.0, scale=np.pi / 2).cdf).statistic
    assert stat < 0.05


@settings(deadline=None, max_examples=60)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 24))
def test_projection_idempotent_and_pythagoras(seed, d):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, d + 1))
    s = linalg.sample_grassmannian(k, d, rng)
    v = rng.standard_normal(d)
    p = linalg.project(s, v)
    assert_allclose(linalg.project(s, p), p, atol=1e-10)
    q = linalg.project(linalg.complement(s), v)
    assert abs(np.dot(p, p) + np.dot(q, q) - np.dot(v, v)) <= 1e-9
    assert np.linalg.norm(p) <= np.linalg.norm(v) + 1e-12
