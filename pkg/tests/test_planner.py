import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinetic_langevin.errors import PlanningError, UsageError
from kinetic_langevin.planner import (
    ProblemSpec,
    initial_distance_bound,
    kinetic_energy_bound,
    plan,
    plan_epochs,
    plan_fixed,
    plan_stochastic,
    plan_summary,
    recursion_bound,
)

SPEC = ProblemSpec(d=10, m=1.0, L=2.0, D2=1.0, epsilon=0.1)



@st.composite
def problem_specs(draw, sigma2=False):
    m = draw(st.floats(0.1, 10.0))
    kappa = draw(st.floats(1.0, 50.0))
    return ProblemSpec(
        d=draw(st.integers(1, 10_000)),
        m=m,
        L=m * kappa,
        D2=draw(st.floats(0.0, 100.0)),
        epsilon=draw(st.floats(1e-3, 0.5)),
        sigma2=draw(st.floats(1e-3, 10.0)) if sigma2 else 0.0,
    )


def test_plan_fixed_example():
    p = plan_fixed(SPEC)
    # 40-digit evaluation: δ = 1.44957377200848e-4, n = ceil(54350.69) = 54351
    assert p.delta == pytest.approx(1.44957377200848e-4, rel=1e-12)
    assert p.n == 54351
    assert p.mode == "exact"


def test_plan_fixed_epsilon_scaling():
    n1 = plan_fixed(SPEC).n
    n2 = plan_fixed(ProblemSpec(10, 1.0, 2.0, 1.0, 0.2)).n
    assert 2 * 0.8 < n1 / n2 < 2 * 1.2


def test_plan_fixed_sqrt_d_scaling():
    a = plan_fixed(ProblemSpec(10_000, 1.0, 1.0, 0.0, 0.1)).n
    b = plan_fixed(ProblemSpec(2_500, 1.0, 1.0, 0.0, 0.1)).n
    assert 1.8 <= a / b <= 2.4


def test_plan_fixed_refuses_large_step():
    with pytest.raises(PlanningError):
        plan_fixed(ProblemSpec(1, 1.0, 1.0, 0.0, 200.0))


def test_plan_fixed_requires_exact_gradients():
    with pytest.raises(UsageError):
        plan_fixed(ProblemSpec(10, 1.0, 2.0, 1.0, 0.1, sigma2=1.0))


def test_plan_stochastic_example():
    p = plan_stochastic(ProblemSpec(10, 1.0, 2.0, 1.0, 0.1, sigma2=1.0))
    first = 0.05 * math.sqrt(5 / 5271552)
    second = 0.01 * 4 / 28800
    assert first == pytest.approx(4.8695155729607e-5, rel=1e-12)
    assert p.delta == pytest.approx(second, rel=1e-14)
    assert p.n == math.ceil((2 / second) * math.log(3960))
    assert p.n == 11928959
    assert p.mode == "stochastic"


def test_plan_stochastic_small_noise_uses_first_branch():
    spec = ProblemSpec(10, 1.0, 2.0, 1.0, 0.1, sigma2=1e-12)
    assert plan_stochastic(spec).delta == pytest.approx(0.05 * math.sqrt(5 / (479232 * 11)), rel=1e-14)


def test_plan_routes_on_noise():
    assert plan(SPEC).mode == "exact"
    assert plan(ProblemSpec(10, 1.0, 2.0, 1.0, 0.1, sigma2=0.5)).mode == "stochastic"
    with pytest.raises(UsageError):
        plan_stochastic(SPEC)


def test_plan_epochs_example():
    s = plan_epochs(SPEC)
    assert s.epsilon0 == math.nextafter(33.0, math.inf)
    assert s.num_epochs == 9 == math.ceil(math.log2(330))
    assert s.epochs[0][0] == pytest.approx(33 / (208 * 2 * math.sqrt(11)), rel=1e-14)
    assert s.epochs[0][0] == pytest.approx(0.023919, rel=1e-4)
    assert s.epochs[0][1] == 232
    assert s.total_steps == 232 * (2**9 - 1)
    assert s.within_bound


def test_plan_epochs_quarter_epsilon_gives_two_epochs():
    eps0 = plan_epochs(SPEC).epsilon0
    s = plan_epochs(ProblemSpec(10, 1.0, 2.0, 1.0, eps0 / 4))
    assert s.num_epochs == 2


@given(problem_specs())
def test_epoch_schedule_invariants(spec):
    try:
        s = plan_epochs(spec)
    except PlanningError:
        return
    for (d0, n0), (d1, n1) in zip(s.epochs, s.epochs[1:]):
        assert d1 == d0 / 2 and n1 == 2 * n0
    n1 = s.epochs[0][1]
    assert s.total_steps == n1 * (2**s.num_epochs - 1)
    assert s.num_epochs == max(math.ceil(math.log(s.epsilon0 / spec.epsilon) / math.log(2)), 1)
    assert s.epsilon0 > 3 * spec.scale
    # Rounding n₁ up adds at most one step per unit of 2^ℓ - 1 on top of the bound.
    assert s.total_steps <= s.total_steps_bound + (2**s.num_epochs - 1)


def test_epoch_bound_can_be_exceeded_by_rounding_alone():
    # 3X/ε = 4096 exactly; the ulp nudge on ε₀ adds a 13th epoch.
    s = plan_epochs(ProblemSpec(28, 1.0, 1.0, 100.0, 0.09375))
    assert s.num_epochs == 13
    assert not s.within_bound
    assert s.total_steps <= s.total_steps_bound + 2**13 - 1


@given(problem_specs())
def test_plan_fixed_invariants(spec):
    try:
        p = plan_fixed(spec)
    except PlanningError:
        return
    assert 0 < p.delta < 1 and p.n >= 1
    assert plan_fixed(spec) == p


@given(problem_specs(sigma2=True))
def test_plan_stochastic_is_no_larger_than_noise_free_branch(spec):
    p = plan_stochastic(spec)
    assert p.delta <= (spec.epsilon / spec.kappa) * math.sqrt(5 / (479232 * spec.scale)) * (1 + 1e-15)
    assert p.n >= 1


def test_bounds():
    assert kinetic_energy_bound(SPEC) == 286
    assert kinetic_energy_bound(ProblemSpec(1, 1.0, 1.0, 0.0)) == 26
    assert initial_distance_bound(SPEC) == 33
    assert initial_distance_bound(ProblemSpec(1, 1.0, 1.0, 0.0)) == 3
    es = [kinetic_energy_bound(ProblemSpec(d, 1.0, 1.0)) for d in range(1, 20)]
    assert all(a < b for a, b in zip(es, es[1:]))


@given(problem_specs())
def test_initial_distance_dominates_variance_term(spec):
    assert initial_distance_bound(spec) >= spec.d / spec.m


@pytest.mark.parametrize("kwargs", [dict(d=0, m=1, L=1), dict(d=1, m=0, L=1), dict(d=1, m=2, L=1),
                                    dict(d=1, m=1, L=1, D2=-1), dict(d=1, m=1, L=1, epsilon=0),
                                    dict(d=1, m=1, L=1, sigma2=-1), dict(d=1.5, m=1, L=1)])
def test_problem_spec_validation(kwargs):
    with pytest.raises(UsageError):
        ProblemSpec(**kwargs)


def test_recursion_bound_examples():
    assert recursion_bound(0.5, 0.0, 0.0, 3.0, 4) == 3.0 * 0.5**4
    assert recursion_bound(0.5, 0.0, 1.0, 3.0, 10_000) == pytest.approx(2.0)
    with pytest.raises(UsageError):
        recursion_bound(1.0, 1.0, 1.0, 1.0, 1)
    with pytest.raises(UsageError):
        recursion_bound(0.5, -1.0, 1.0, 1.0, 1)


@given(st.floats(0.0, 0.999), st.floats(0.0, 10.0), st.floats(0.0, 10.0), st.floats(0.0, 100.0))
def test_recursion_bound_dominates_brute_force(A, B, C, x0):
    x = x0
    for k in range(60):
        assert x <= recursion_bound(A, B, C, x0, k) * (1 + 1e-12) + 1e-12
        x = math.sqrt((A * x + C) ** 2 + B**2)


def test_plan_summary_fields():
    s = plan_summary(SPEC)
    assert s["kappa"] == 2 and s["scale"] == 11 and s["kinetic_energy_bound"] == 286
    assert s["plan"]["n"] == 54351
    assert plan_summary(SPEC, "epochs")["plan"]["num_epochs"] == 9


def test_planner_is_deterministic():
    assert plan_epochs(SPEC) == plan_epochs(SPEC)
    np.testing.assert_equal(plan_summary(SPEC), plan_summary(SPEC))
