import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from bisr import _numpy_kernels as nk
from bisr.bivariate import BivariatePenalty, S_value
from bisr.convexity import certified_params
from bisr.diagnostics import objective_value, optimality_report
from bisr.errors import ConvexityError, DomainError, SolverFailure
from bisr.experiments import PRESETS, ExperimentSpec, lambda_rule, make_trial
from bisr.linop import apply, apply_adjoint, max_eig_upper_bound
from bisr.solver import (Algorithm, Objective, SolverConfig, majorizer_value, soft_threshold,
                         solve, solve_fbs, solve_mm, step_size, theta_grad, theta_value)

FAMS = ("rational", "log", "atan")


def make_obj(h, y, lam, fam="atan", frac=1.0, **kw):
    params = certified_params(h, lam).scaled(frac)
    return Objective(h, y, lam, BivariatePenalty(fam, params), **kw)


def example1(sigma=4.0, trial=0, fam="atan"):
    h = PRESETS["example1_like"]
    spec = ExperimentSpec(sigmas=(sigma,))
    x, y = make_trial(spec, h, sigma, trial)
    return make_obj(h, y, lambda_rule(h, sigma), fam), x


def ista(h, y, lam, iters, lin=None):
    """Plain proximal gradient on 1/2||y - Hx||^2 + lin.x + lam||x||_1."""
    mu = 1.0 / max_eig_upper_bound(h)
    x = np.zeros(len(y) - len(h) + 1)
    lin = np.zeros_like(x) if lin is None else lin
    for _ in range(iters):
        x = nk.soft(x + mu * (apply_adjoint(h, y - apply(h, x)) - lin), mu * lam)
    return x


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------

def test_objective_enforces_certificate():
    h = PRESETS["example1_like"]
    y = np.ones(20)
    with pytest.raises(ConvexityError):
        make_obj(h, y, 2.0, frac=1.05)
    obj = make_obj(h, y, 2.0, frac=1.05, unsafe=True)
    assert not obj.certified
    assert make_obj(h, y, 2.0).certified
    assert obj.N == 16


def test_objective_validation():
    h = [1.0, 0.5]
    with pytest.raises(DomainError):
        Objective(h, [1.0], 1.0, BivariatePenalty.make("log", 0, 0))
    with pytest.raises(DomainError):
        Objective(h, [1.0, 2.0, np.nan], 1.0, BivariatePenalty.make("log", 0, 0))
    with pytest.raises(DomainError):
        Objective(h, [1.0, 2.0, 3.0], 0.0, BivariatePenalty.make("log", 0, 0))
    obj = Objective(h, [1.0, 2.0, 3.0], 1.0, BivariatePenalty.make("log", 0, 0))
    with pytest.raises(DomainError):
        theta_value(obj, np.zeros(3))


def test_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(mu_factor=2.0)
    with pytest.raises(DomainError):
        SolverConfig(stop_rel_tol=0.0)
    with pytest.raises(DomainError):
        SolverConfig(algorithm="admm")
    assert SolverConfig(algorithm="MM").algorithm is Algorithm.MM


# --------------------------------------------------------------------------
# Theta, soft threshold
# --------------------------------------------------------------------------

def test_theta_examples(rng):
    h = [1.0]
    y = rng.normal(size=3)
    zero = Objective(h, y, 1.0, BivariatePenalty.make("atan", 0, 0))
    assert theta_value(zero, rng.normal(size=3)) == 0.0
    assert np.array_equal(theta_grad(zero, rng.normal(size=3)), np.zeros(3))
    obj = Objective(h, y, 1.0, BivariatePenalty.make("atan", 0.6, 0.2))
    assert theta_value(obj, np.zeros(3)) == 0.0
    assert np.array_equal(theta_grad(obj, np.zeros(3)), np.zeros(3))
    x = rng.normal(size=3)
    bp = obj.penalty
    ref = 0.5 * (S_value(bp, 0, x[0]) + S_value(bp, x[0], x[1]) + S_value(bp, x[1], x[2])
                 + S_value(bp, x[2], 0))
    assert theta_value(obj, x) == pytest.approx(ref, rel=1e-14)


@pytest.mark.parametrize("fam", FAMS)
def test_theta_grad_finite_difference(fam, rng):
    obj = Objective([1.0], np.zeros(10), 1.0, BivariatePenalty.make(fam, 0.9, 0.3))
    x = rng.normal(0, 3, 10)
    g = theta_grad(obj, x)
    h = 1e-6
    fd = np.array([(theta_value(obj, x + h * e) - theta_value(obj, x - h * e)) / (2 * h)
                   for e in np.eye(10)])
    assert np.max(np.abs(g - fd)) <= 1e-5


def test_soft_threshold_examples():
    assert soft_threshold(5.0, 2.0) == 3.0
    assert soft_threshold(-1.5, 2.0) == 0.0
    assert soft_threshold(-7.25, 0.0) == -7.25
    with pytest.raises(DomainError):
        soft_threshold(1.0, -1.0)


@given(st.floats(-1e6, 1e6), st.floats(0, 1e6))
def test_soft_threshold_properties(t, T):
    v = soft_threshold(t, T)
    assert soft_threshold(-t, T) == -v
    assert abs(v) == pytest.approx(abs(t) - min(abs(t), T), abs=1e-9 * max(1.0, abs(t)))


# --------------------------------------------------------------------------
# solvers
# --------------------------------------------------------------------------

@pytest.mark.parametrize("alg", ["fbs", "mm"])
def test_zero_data_gives_zero(alg):
    obj = make_obj(PRESETS["example1_like"], np.zeros(30), 1.0)
    res = solve(obj, SolverConfig(algorithm=alg))
    assert np.array_equal(res.x_hat, np.zeros(obj.N))
    assert res.iterations == 1 and res.converged
    assert res.objective == 0.0


def test_l1_case_matches_ista(rng):
    h = rng.normal(size=4)
    y = apply(h, rng.normal(size=40) * (rng.random(40) < 0.2)) + 0.1 * rng.normal(size=43)
    lam = 0.5
    obj = Objective(h, y, lam, BivariatePenalty.make("atan", 0, 0))
    res = solve_fbs(obj, SolverConfig(stop_rel_tol=1e-12, max_iter=200000))
    ref = ista(h, y, lam, 200000)
    assert np.max(np.abs(res.x_hat - ref)) <= 1e-6


def test_mm_l1_case_is_exact_after_one_outer_step(rng):
    h = [1.0, 0.6, -0.2]
    y = rng.normal(0, 3, 32)
    obj = Objective(h, y, 1.0, BivariatePenalty.make("log", 0, 0))
    fbs = solve_fbs(obj, SolverConfig(stop_rel_tol=1e-12, max_iter=100000))
    mm = solve_mm(obj, SolverConfig(algorithm="mm", stop_rel_tol=1e-10, inner_iter=100000,
                                    inner_rel_tol=1e-13))
    assert mm.iterations <= 2
    assert np.max(np.abs(mm.x_hat - fbs.x_hat)) <= 1e-5
    assert mm.objective_trace[1] == pytest.approx(fbs.objective, rel=1e-10)


@pytest.mark.parametrize("fam", FAMS)
def test_example1_default_config_certifies(fam):
    obj, _ = example1(fam=fam)
    res = solve_fbs(obj)
    assert res.converged
    assert res.optimality_max_violation <= 1e-3
    assert np.all(np.diff(res.objective_trace) <= 1e-10)


@pytest.mark.parametrize("fam", FAMS)
def test_mm_agrees_with_fbs_on_example1(fam):
    obj, _ = example1(fam=fam, trial=3)
    cfg = SolverConfig(stop_rel_tol=1e-9, max_iter=100000)
    f = solve_fbs(obj, cfg)
    m = solve_mm(obj, dataclasses.replace(cfg, algorithm="mm"))
    assert m.objective == pytest.approx(f.objective, rel=1e-6)
    assert np.all(np.diff(m.objective_trace) <= 1e-10)


def _coordinate_descent(obj, sweeps=300):
    x = np.zeros(obj.N)
    for _ in range(sweeps):
        for i in range(obj.N):
            def f(t):
                z = x.copy()
                z[i] = t
                return objective_value(obj, z)
            r = minimize_scalar(f, bounds=(x[i] - 50, x[i] + 50), method="bounded",
                                options={"xatol": 1e-12})
            x[i] = r.x if r.fun < f(0.0) else 0.0
    return x


@pytest.mark.parametrize("fam", FAMS)
def test_small_instance_matches_coordinate_descent(fam, rng):
    h = [1.0, -0.4]  # |H|^2 >= 0.36 > 0: strictly convex objective
    y = rng.normal(0, 3, 9)
    obj = make_obj(h, y, 1.5, fam, frac=0.999)
    res = solve_fbs(obj, SolverConfig(stop_rel_tol=1e-12, max_iter=200000))
    ref = _coordinate_descent(obj)
    assert np.max(np.abs(res.x_hat - ref)) <= 1e-4


def test_fixed_point_satisfies_certificate():
    obj, _ = example1(trial=5)
    res = solve_fbs(obj, SolverConfig(stop_rel_tol=1e-14, max_iter=500000))
    x = res.x_hat
    mu = step_size(obj)
    p = obj.penalty
    g = apply_adjoint(obj.h.h, obj.y - apply(obj.h.h, x)) - obj.lam * nk.theta_grad(x, p.a1, p.a2, p.code)
    step = nk.soft(x + mu * g, mu * obj.lam)
    assert np.max(np.abs(step - x)) <= 1e-10 * np.max(np.abs(x))
    assert optimality_report(obj, x).max_violation <= 1e-8


def test_divergence_raises_with_trace():
    obj, _ = example1()
    cfg = SolverConfig()
    object.__setattr__(cfg, "mu_factor", 4.5)  # bypass validation to force a blow-up
    with pytest.raises(SolverFailure) as err:
        solve_fbs(obj, cfg)
    tr = err.value.trace
    assert tr is not None and tr[-1] > tr[-2]


def test_iteration_cap_reports_not_converged():
    obj, _ = example1()
    res = solve_fbs(obj, SolverConfig(max_iter=2))
    assert res.iterations == 2 and not res.converged
    assert len(res.objective_trace) == 3


@settings(max_examples=30)
@given(st.sampled_from(FAMS), st.integers(0, 2 ** 31), st.floats(0.5, 10))
def test_majorizer_bounds_objective(fam, seed, scale):
    rng = np.random.default_rng(seed)
    h = PRESETS["example2_null"]
    y = rng.normal(0, 5, 24)
    obj = make_obj(h, y, 2.0, fam)
    x = scale * rng.normal(size=obj.N) / obj.penalty.params.alpha
    v = scale * rng.normal(size=obj.N) / obj.penalty.params.alpha
    fx = objective_value(obj, x)
    assert majorizer_value(obj, x, v) >= fx - 1e-10 * max(1.0, abs(fx))
    assert majorizer_value(obj, v, v) == pytest.approx(objective_value(obj, v), rel=1e-12)


@settings(max_examples=15)
@given(st.sampled_from(FAMS), st.sampled_from(["fbs", "mm"]), st.integers(0, 1000),
       st.sampled_from(list(PRESETS)))
def test_traces_are_monotone(fam, alg, trial, preset):
    h = PRESETS[preset]
    x, y = make_trial(ExperimentSpec(), h, 4.0, trial)
    obj = make_obj(h, y, lambda_rule(h, 4.0), fam)
    res = solve(obj, SolverConfig(algorithm=alg, stop_rel_tol=1e-6))
    assert np.all(np.diff(res.objective_trace) <= 1e-10)
