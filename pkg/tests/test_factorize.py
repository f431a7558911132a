import numpy as np
import pytest

from spinfact.factorize import (SemisimpleCost, build_problem, factorize, fock_product, fock_target,
                                independent_cost, result_from_json, solve_semisimple)


@pytest.fixture(scope="module")
def s2_problem():
    return build_problem("s2_iiab", 0.0)


@pytest.fixture(scope="module")
def singlet_problem():
    return build_problem("s4_singlet", 0.0)


def test_theta_zero_is_trivial(s2_problem):
    r = factorize("s2_iiab", 0.0, problem=s2_problem)
    assert r.converged and np.all(r.semisimple_params == 0)
    assert r.fock_residual == 0.0


@pytest.mark.parametrize("theta", [0.7, -2.1, np.pi])
def test_s2_factorization(s2_problem, theta):
    r = factorize("s2_iiab", theta, problem=s2_problem)
    assert r.converged
    assert r.cost_residual < 1e-10 and r.fock_residual < 1e-6


def test_independent_cost_agrees(s2_problem):
    r = factorize("s2_iiab", 1.3, problem=s2_problem)
    assert independent_cost(r.problem, r.semisimple_params) < 1e-10


def test_analytic_gradient_matches_finite_differences(singlet_problem):
    from dataclasses import replace

    p = replace(singlet_problem, theta=0.9)
    cost = SemisimpleCost(p, p.target())
    rng = np.random.default_rng(3)
    t = rng.normal(size=p.n_factors)
    f, g = cost.value_grad(t)
    h = 1e-6
    fd = np.array([(cost.value(t + h * e) - cost.value(t - h * e)) / (2 * h) for e in np.eye(len(t))])
    assert np.abs(g - fd).max() < 1e-6 * max(1.0, np.abs(g).max())
    J = cost.jacobian(t)
    assert np.abs(2 * J.T @ cost.residual(t) - g).max() < 1e-10


def test_singlet_factorization_hard_angle(singlet_problem):
    # continuation stalls near this angle; a global restart recovers it
    r = factorize("s4_singlet", 0.85, problem=singlet_problem)
    assert r.converged and r.restarts >= 1
    assert r.fock_residual < 1e-6


def test_fock_product_matches_target(singlet_problem):
    r = factorize("s4_singlet", -1.2, problem=singlet_problem)
    U = fock_product(r.problem, r.central_factors, r.semisimple_params)
    assert np.abs(U - fock_target(r.problem)).max() < 1e-10


def test_json_round_trip(s2_problem):
    r = factorize("s2_iiab", 0.4, problem=s2_problem)
    back = result_from_json(r.to_json(), s2_problem)
    assert np.array_equal(back.semisimple_params, r.semisimple_params)
    assert back.central_factors == r.central_factors


def test_restarts_are_seeded(singlet_problem):
    from dataclasses import replace

    p = replace(singlet_problem, theta=0.85)
    a = solve_semisimple(p, seed=5, attempt=2)
    b = solve_semisimple(p, seed=5, attempt=2)
    assert np.array_equal(a.t, b.t)
