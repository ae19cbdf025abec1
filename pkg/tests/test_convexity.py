import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bisr import _numpy_kernels as nk
from bisr.bivariate import BivariatePenalty, K_matrix
from bisr.convexity import (Q, EigenPair, TridiagBound, bound_feasible, certified_params,
                            fit_tridiag_bound, is_certified, max_params_bivariate,
                            params_from_tridiag, separable_limit, verify_nonconvexity)
from bisr.errors import ConvexityError, DomainError
from bisr.experiments import PRESETS
from bisr.linop import freq_response_sq, matrix


def theta_hessian(x, a1, a2, fam):
    """Dense Hessian of Theta, assembled pair by pair."""
    n = len(x)
    xp = np.concatenate(([0.0], x, [0.0]))
    h11, h12, h22 = nk.S_hess(xp[:-1], xp[1:], a1, a2, fam)
    out = np.zeros((n, n))
    for k in range(n + 1):  # pair (x_{k-1}, x_k) in 0-based padded indexing
        i, j = k - 1, k
        if i >= 0:
            out[i, i] += 0.5 * h11[k]
        if j < n:
            out[j, j] += 0.5 * h22[k]
        if i >= 0 and j < n:
            out[i, j] += 0.5 * h12[k]
            out[j, i] += 0.5 * h12[k]
    return out


@given(st.floats(0, 1), st.floats(0, 1))
def test_eigen_reconstruction(g1, g2):
    e = EigenPair(g1, g2)
    assert np.max(np.abs(Q @ e.Gamma @ Q.T - e.K())) <= 1e-15
    assert EigenPair.from_matrix(e.K()).gamma1 == pytest.approx(g1, abs=1e-15)


def test_eigen_rejects_negative():
    with pytest.raises(DomainError):
        EigenPair(-0.1, 1.0)
    with pytest.raises(DomainError):
        EigenPair.from_matrix([[1.0, 0.2], [0.3, 1.0]])


def test_max_params_examples():
    p = max_params_bivariate(EigenPair(1.5, 0.3), 15.0)
    assert (p.a1, p.a2) == pytest.approx((0.1, 0.02), rel=1e-15)
    p = max_params_bivariate(EigenPair(0.0, 0.0), 3.0)
    assert (p.a1, p.a2) == (0.0, 0.0)
    p = max_params_bivariate(EigenPair(0.76, 0.0), 1.0)
    assert (p.a1, p.a2) == (0.76, 0.0)
    with pytest.raises(DomainError):
        max_params_bivariate(EigenPair(1, 1), 0.0)


def test_params_from_tridiag_examples():
    p = params_from_tridiag(TridiagBound(0.4, 0.1), 1.0)
    assert (p.a1, p.a2) == pytest.approx((0.6, 0.2), rel=1e-14)
    p = params_from_tridiag(TridiagBound(0.38, 0.19), 1.0)
    assert (p.a1, p.a2) == (0.76, 0.0)
    p = params_from_tridiag(TridiagBound(0.7, 0.0), 1.0)
    assert p.a1 == p.a2 == 0.7
    with pytest.raises(ConvexityError):
        params_from_tridiag(TridiagBound(0.3, 0.2), 1.0)


def test_separable_limit_examples():
    assert separable_limit(EigenPair(0.6, 0.2), 1.0) == 0.2
    assert separable_limit(EigenPair(0.76, 0.0), 2.0) == 0.0
    assert separable_limit(EigenPair(1.5, 0.3), 15.0) == pytest.approx(0.02, rel=1e-15)
    with pytest.raises(DomainError):
        separable_limit(EigenPair(1, 1), -1.0)


def test_fit_examples():
    p = fit_tridiag_bound([1.0])
    assert p.p0 == pytest.approx(1.0, rel=1e-8) and p.p1 == 0.0
    p = fit_tridiag_bound([0.5, 0.5])
    assert p.p0 == 2 * p.p1 and p.at_pi == 0.0
    assert p.p0 == pytest.approx(0.5, rel=1e-8)  # |H|^2 = (1 + cos w) / 2
    p = fit_tridiag_bound([1.0, 2.0, 1.0])  # double zero at pi: only P = 0 fits
    assert p.degenerate and p.p0 == p.p1 == 0.0
    with pytest.raises(DomainError):
        fit_tridiag_bound([1.0], grid_size=100)


def test_presets_reproduce_published_bounds():
    p = fit_tridiag_bound(PRESETS["example1_like"])
    assert p.at_zero == pytest.approx(0.6, rel=1e-6)
    assert p.at_pi == pytest.approx(0.2, rel=1e-6)
    assert bound_feasible(PRESETS["example1_like"], p)
    p = fit_tridiag_bound(PRESETS["example2_null"])
    assert p.at_zero == pytest.approx(0.76, rel=1e-6)
    assert p.at_pi == 0.0
    w = np.linspace(0, np.pi, 100001)
    assert freq_response_sq(PRESETS["example1_like"], w).min() == pytest.approx(0.26, rel=1e-9)


@settings(max_examples=40)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=8).filter(
    lambda t: max(abs(v) for v in t) > 1e-2))
def test_fit_is_feasible_on_finer_grid(taps):
    p = fit_tridiag_bound(taps)
    assert p.p0 >= 2 * abs(p.p1)
    assert bound_feasible(taps, p)


def test_certificate_helpers():
    h = PRESETS["example1_like"]
    lam = 2.0
    top = certified_params(h, lam)
    assert is_certified(h, lam, top)
    assert not is_certified(h, lam, top.scaled(1.01))
    assert is_certified(h, lam, top.scaled(0.0))


@pytest.mark.parametrize("fam", ["rational", "log", "atan"])
def test_witness_examples(fam):
    eig, lam = EigenPair(1.5, 0.3), 15.0
    top = max_params_bivariate(eig, lam)
    assert verify_nonconvexity(BivariatePenalty(fam, top.scaled(0.9)), eig, lam) is None
    w = verify_nonconvexity(BivariatePenalty(fam, top.scaled(1.1)), eig, lam)
    assert w is not None and w.curvature < 0
    assert verify_nonconvexity(BivariatePenalty.make(fam, 0, 0), eig, lam) is None


@pytest.mark.parametrize("fam", ["rational", "log", "atan"])
def test_separable_limitation(fam):
    eig, lam = EigenPair(1.5, 0.3), 15.0
    a = separable_limit(eig, lam)
    w = verify_nonconvexity(BivariatePenalty.make(fam, 1.05 * a, 1.05 * a), eig, lam)
    assert w is not None
    # the most negative curvature is along the minimal eigenvector through 0
    assert abs(np.dot(w.direction, Q[:, 1])) == pytest.approx(1.0, abs=1e-6)
    assert verify_nonconvexity(BivariatePenalty.make(fam, 0.95 * a, 0.95 * a), eig, lam) is None


@settings(max_examples=25)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=6).filter(
    lambda t: max(abs(v) for v in t) > 1e-2), st.floats(0.1, 10),
    st.sampled_from(["rational", "log", "atan"]))
def test_maximal_tridiag_params_have_no_witness(taps, lam, fam):
    p = fit_tridiag_bound(taps)
    eig = EigenPair(p.at_zero, p.at_pi)
    params = params_from_tridiag(p, lam).scaled(1 - 1e-6)
    assert verify_nonconvexity(BivariatePenalty(fam, params), eig, lam, samples=2000) is None


@pytest.mark.parametrize("name", ["example1_like", "example2_null"])
@pytest.mark.parametrize("fam", [0, 1, 2])
def test_full_objective_hessian_is_psd(name, fam):
    h = PRESETS[name]
    lam = 3.0
    params = certified_params(h, lam)
    rng = np.random.default_rng(fam)
    n = 30
    H = matrix(h, n)
    HtH = H.T @ H
    for scale in (0.0, 0.3, 3.0, 30.0):
        x = scale * rng.normal(size=n) / max(params.alpha, 1e-12)
        Ht = HtH + lam * theta_hessian(x, params.a1, params.a2, fam)
        assert np.linalg.eigvalsh(Ht)[0] >= -1e-9
    # and the uncertified 10% excess loses convexity at the origin
    big = params.scaled(1.1)
    Ht = HtH + lam * theta_hessian(np.zeros(n), big.a1, big.a2, fam)
    assert np.linalg.eigvalsh(Ht)[0] < 0


def test_theta_hessian_at_zero_is_minus_tridiag():
    a1, a2 = 0.6, 0.2
    T = theta_hessian(np.zeros(5), a1, a2, 2)
    alpha, off = 0.5 * (a1 + a2), 0.25 * (a1 - a2)
    assert np.allclose(np.diag(T), -alpha)
    assert np.allclose(np.diag(T, 1), -off)
    assert math.isclose(K_matrix(a1, a2)[0, 1], 2 * off)
