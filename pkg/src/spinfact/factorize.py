"""Exact factorization of exp(theta * sum_i c_i A_i) into ordered exponentials.

The symmetrized generator splits into a central part, exponentiated
directly, and a semisimple part. The semisimple unitary is matched by a
product of single-element exponentials in the adjoint representation.
Work is done in a basis adapted to the simple ideals, where every ad matrix
is block diagonal, so all products are batched small matrix products.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as so
import scipy.sparse as sp

from . import lie
from .families import Family, canonical_family, load_family
from .linalg import AdExp, batched_ad_exp, expm, rotation_exp

log = logging.getLogger(__name__)

COST_TOL = 1e-10
FOCK_TOL = 1e-6


class FactorizationError(RuntimeError):
    """Structural problem that prevents setting up a factorization."""


@dataclass
class FactorizationProblem:
    """Everything needed to solve one factorization.

    Attributes:
        family: family key.
        model: the Lie algebra in appendix mode.
        c: elementary coefficients.
        theta: rotation angle in radians.
        Z: central elements, one per elementary generator (coordinates, K x m).
        S: semisimple remainders S_i = Z_i - A_i (coordinates, K x m).
        d: coefficients of each S_i over the factor basis (K x n_factors).
        factor_order: listed indices (0-based) of the semisimple factors.
        blocks: orthonormal coordinate rows of each simple ideal.
        X: ad matrices of the factors, per block (n_factors, n_blocks, k, k).
        powers: X, X^2, X^3, X^4 stacked as (n_factors, 4, n_blocks, k, k).
    """

    family: str
    model: lie.LieAlgebraModel
    c: np.ndarray
    theta: float
    Z: np.ndarray
    S: np.ndarray
    d: np.ndarray
    factor_order: list[int]
    blocks: list[np.ndarray]
    X: np.ndarray
    powers: np.ndarray
    closed_form: bool

    @property
    def n_factors(self) -> int:
        return len(self.factor_order)

    def block_ad(self, coeffs: np.ndarray) -> np.ndarray:
        """ad of a coordinate vector in block form (n_blocks, k, k)."""
        return _block_ad(self.model, self.blocks, coeffs)

    def target(self, theta: float | None = None) -> np.ndarray:
        """Adjoint target exp(-theta sum_i c_i ad S_i) per block."""
        theta = self.theta if theta is None else theta
        y = self.block_ad(-theta * (self.c @ self.S))
        return np.stack([expm(b) for b in y])

    def linear_guess(self, theta: float | None = None) -> np.ndarray:
        theta = self.theta if theta is None else theta
        return -theta * (self.c @ self.d)


def _block_ad(model, blocks, coeffs):
    ad = model.ad(coeffs)
    k = max(b.shape[0] for b in blocks)
    out = np.zeros((len(blocks), k, k))
    for r, P in enumerate(blocks):
        out[r, : P.shape[0], : P.shape[0]] = P @ ad @ P.T
    return out


def center_combos(model: lie.LieAlgebraModel, n_elem: int) -> np.ndarray:
    """For each elementary A_i, the central element with unit weight on A_i.

    The center is parametrized so that its coordinates on the elementary
    generators form the identity; this fixes each Z_i uniquely.

    Raises:
        FactorizationError: if the elementary coordinates of the center are singular.
    """
    C = model.center()
    X = model.coords_of_listed()[:n_elem]  # elementary generators are basis elements
    block = C @ X.T  # (k, K): weight of center vector on each elementary coordinate
    if C.shape[0] != n_elem or abs(np.linalg.det(block)) < 1e-10:
        raise FactorizationError("center does not resolve the elementary generators")
    return np.linalg.solve(block, C)


def build_problem(family: str | Family, theta: float, model: lie.LieAlgebraModel | None = None) -> FactorizationProblem:
    """Set up the central split and the block adjoint representation."""
    fam = family if isinstance(family, Family) else load_family(family)
    model = model or lie.from_family(fam)
    K = fam.n_elementary
    Z = center_combos(model, K)
    E = model.coords_of_listed()[:K]
    S = Z - E
    D = model.derived()
    leak = np.abs(S - (S @ D.T) @ D).max()
    if leak > 1e-10:
        raise FactorizationError(f"Z_i - A_i is not in the semisimple span (residual {leak:.2e})")
    order = list(range(K, model.n_listed))
    F = model.coords_of_listed()[order]
    d = np.linalg.lstsq(F.T, S.T, rcond=None)[0].T
    if np.abs(d @ F - S).max() > 1e-10:
        raise FactorizationError("semisimple remainder is not spanned by the factor basis")
    blocks = [I.vectors for I in model.ideals()]
    X = np.stack([_block_ad(model, blocks, f) for f in F])
    full = [model.ad(f) for f in F]
    for r, P in enumerate(blocks):
        for f_ad in full[:5]:
            off = f_ad @ P.T - P.T @ (P @ f_ad @ P.T)
            if np.abs(off).max() > 1e-9:
                raise FactorizationError("factor ad matrices are not block diagonal")
    x2 = X @ X
    x3 = x2 @ X
    x4 = x2 @ x2
    powers = np.stack([X, x2, x3, x4], axis=1)
    check = x4 @ X + 5 * x3 + 4 * X
    closed = bool(np.abs(check).max() < 1e-9)
    return FactorizationProblem(fam.name, model, fam.coefficients, float(theta), Z, S, d, order,
                                blocks, X, powers, closed)


class SemisimpleCost:
    """||T - prod_s exp(t_s X_s)||_F^2 with analytic derivatives."""

    def __init__(self, problem: FactorizationProblem, target: np.ndarray):
        self.p = problem
        self.T = target
        self.nfev = 0

    def factors(self, t: np.ndarray) -> np.ndarray:
        p = self.p
        if p.closed_form:
            c1 = (8 * np.sin(t) - np.sin(2 * t)) / 6
            c2 = (16 * (1 - np.cos(t)) - (1 - np.cos(2 * t))) / 12
            c3 = (2 * np.sin(t) - np.sin(2 * t)) / 6
            c4 = (4 * (1 - np.cos(t)) - (1 - np.cos(2 * t))) / 12
            coef = np.stack([c1, c2, c3, c4], axis=1)
            E = np.einsum("sq,sqbij->sbij", coef, p.powers)
            k = E.shape[-1]
            E[..., range(k), range(k)] += 1.0
            return E
        return np.stack([np.stack([expm(ts * x) for x in xs]) for ts, xs in zip(t, p.X)])

    def _sweep(self, t):
        E = self.factors(t)
        n = len(E)
        left = np.empty_like(E)  # left[s] = E_0 ... E_{s-1}
        acc = np.broadcast_to(np.eye(E.shape[-1]), E.shape[1:]).copy()
        for s in range(n):
            left[s] = acc
            acc = acc @ E[s]
        return E, left, acc

    def value(self, t: np.ndarray) -> float:
        self.nfev += 1
        _, _, U = self._sweep(t)
        return float(np.sum((U - self.T) ** 2))

    def value_grad(self, t: np.ndarray) -> tuple[float, np.ndarray]:
        self.nfev += 1
        E, left, U = self._sweep(t)
        W = U - self.T
        g = np.empty(len(t))
        # right[s] = E_s ... E_{n-1}; dU/dt_s = left[s] X_s right[s]
        Q = np.swapaxes(W, -1, -2)  # Q = right[s+1] W^T, starts at W^T
        for s in range(len(t) - 1, -1, -1):
            Q = E[s] @ Q
            B = Q @ left[s]
            g[s] = 2.0 * np.einsum("bij,bji->", self.p.X[s], B)
        return float(np.sum(W ** 2)), g

    def residual(self, t: np.ndarray) -> np.ndarray:
        _, _, U = self._sweep(t)
        return (U - self.T).ravel()

    def jacobian(self, t: np.ndarray) -> np.ndarray:
        E, left, U = self._sweep(t)
        J = np.empty((U.size, len(t)))
        R = np.broadcast_to(np.eye(E.shape[-1]), E.shape[1:]).copy()
        for s in range(len(t) - 1, -1, -1):
            R = E[s] @ R
            J[:, s] = (left[s] @ self.p.X[s] @ R).ravel()
        return J


@dataclass
class SolveInfo:
    t: np.ndarray
    cost: float
    iterations: int
    converged: bool


def _local_solve(cost: SemisimpleCost, t0: np.ndarray, maxiter: int, tol: float) -> SolveInfo:
    """BFGS from t0, then a Levenberg-Marquardt polish on the residual."""
    res = so.minimize(cost.value_grad, t0, jac=True, method="BFGS",
                      options={"gtol": 1e-12, "maxiter": maxiter})
    t, it = res.x, int(res.nit)
    f = float(res.fun)
    if f < 1e-4 and cost.residual(t).size >= len(t):
        lm = so.least_squares(cost.residual, t, jac=cost.jacobian, method="lm",
                              xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200 * len(t))
        f2 = float(2 * lm.cost)
        if f2 <= f:
            t, f = lm.x, f2
            it += int(lm.nfev)
    return SolveInfo(t, f, it, f < tol)


def solve_semisimple(problem: FactorizationProblem, *, seed: int = 0, max_restarts: int = 8,
                     maxiter: int = 2000, tol: float = COST_TOL, attempt: int = 0,
                     step: float = 0.25) -> SolveInfo:
    """Minimize the adjoint Frobenius cost over the factor angles.

    Attempt 0 follows theta from 0 to its target in steps of at most
    ``step`` radians, warm starting each stage; the product then stays on
    the branch continuously connected to the identity. Attempt 1 starts
    from the first-order guess plus seeded uniform noise of width
    0.3 (1 + |theta|); later attempts draw every angle uniformly from
    [-pi, pi] to leave local basins.
    """
    theta = problem.theta
    if theta == 0.0:
        return SolveInfo(np.zeros(problem.n_factors), 0.0, 0, True)
    it_total = 0
    if attempt == 0:
        n = max(1, int(np.ceil(abs(theta) / step)))
        t = np.zeros(problem.n_factors)
        prev = 0.0
        for th in np.linspace(0.0, theta, n + 1)[1:]:
            t = t + problem.linear_guess(th) - problem.linear_guess(prev)
            info = _local_solve(SemisimpleCost(problem, problem.target(th)), t, maxiter, tol)
            t, prev = info.t, th
            it_total += info.iterations
        return SolveInfo(t, info.cost, it_total, info.converged)
    rng = np.random.default_rng([seed, attempt])
    if attempt == 1:
        width = 0.3 * (1 + abs(theta))
        t0 = problem.linear_guess() + rng.uniform(-width / 2, width / 2, problem.n_factors)
    else:
        t0 = rng.uniform(-np.pi, np.pi, problem.n_factors)
    info = _local_solve(SemisimpleCost(problem, problem.target()), t0, maxiter, tol)
    return info


def independent_cost(problem: FactorizationProblem, t: np.ndarray, theta: float | None = None) -> float:
    """Re-evaluate the cost with dense Pade exponentials on the stacked block basis."""
    theta = problem.theta if theta is None else theta
    B = np.vstack(problem.blocks)
    Bp = np.linalg.pinv(B)
    F = problem.model.coords_of_listed()[problem.factor_order]
    rep = lambda v: B @ problem.model.ad(v) @ Bp
    U = np.eye(B.shape[0])
    for ts, f in zip(t, F):
        U = U @ expm(ts * rep(f))
    T = expm(rep(-theta * (problem.c @ problem.S)))
    return float(np.sum((U - T) ** 2))


@dataclass
class FactorizationResult:
    """Ordered factors and certificates of one factorization.

    Attributes:
        central_factors: (center index, angle theta * c_i) pairs.
        semisimple_params: angles t_s in factor order.
        cost_residual: final adjoint Frobenius cost.
        fock_residual: Frobenius distance of the Fock product from the target.
    """

    family: str
    theta: float
    central_factors: list[tuple[int, float]]
    factor_order: list[int]
    semisimple_params: np.ndarray
    cost_residual: float
    fock_residual: float
    iterations: int
    restarts: int
    converged: bool
    seed: int
    elapsed: float = 0.0
    problem: FactorizationProblem | None = field(default=None, repr=False)

    def factors(self) -> list[tuple[str, int, float]]:
        """All factors in product order as (kind, index, angle)."""
        out = [("central", i, a) for i, a in self.central_factors]
        out += [("semisimple", s, float(t)) for s, t in zip(self.factor_order, self.semisimple_params)]
        return out

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "theta": self.theta,
            "central": [{"z_index": int(i), "angle": float(a)} for i, a in self.central_factors],
            "semisimple": [{"basis_index": int(s), "t": float(t)}
                           for s, t in zip(self.factor_order, self.semisimple_params)],
            "cost_residual": self.cost_residual,
            "fock_residual": self.fock_residual,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "converged": self.converged,
            "seed": self.seed,
            "elapsed_s": self.elapsed,
        }


def result_from_json(d: dict, problem: FactorizationProblem | None = None) -> FactorizationResult:
    """Rebuild a result written by :meth:`FactorizationResult.to_json`."""
    family = canonical_family(d["family"])
    theta = float(d["theta"])
    problem = problem or build_problem(family, theta)
    if problem.theta != theta:
        problem = FactorizationProblem(**{**problem.__dict__, "theta": theta})
    order = [int(e["basis_index"]) for e in d["semisimple"]]
    if order != list(problem.factor_order):
        raise ValueError("factor order in the file does not match the family's factor basis")
    return FactorizationResult(
        family, theta, [(int(e["z_index"]), float(e["angle"])) for e in d["central"]], order,
        np.array([float(e["t"]) for e in d["semisimple"]]), float(d["cost_residual"]),
        float(d["fock_residual"]), int(d.get("iterations", 0)), int(d.get("restarts", 0)),
        bool(d["converged"]), int(d.get("seed", 0)), float(d.get("elapsed_s", 0.0)), problem)


def central_matrices(problem: FactorizationProblem) -> list[sp.csr_matrix]:
    return [problem.model.element(z) for z in problem.Z]


def factor_matrices(problem: FactorizationProblem) -> list[sp.csr_matrix]:
    return [problem.model.listed_element(s) for s in problem.factor_order]


def symmetrized_matrix(problem: FactorizationProblem) -> sp.csr_matrix:
    E = problem.model.coords_of_listed()[: len(problem.c)]
    return problem.model.element(problem.c @ E)


def fock_product(problem: FactorizationProblem, central: list[tuple[int, float]], t: np.ndarray) -> np.ndarray:
    """Dense Fock-space product of all factors in order."""
    dim = problem.model.orbitals.dim
    U = np.eye(dim)
    zs = central_matrices(problem)
    for i, a in central:
        U = np.asarray(U @ rotation_exp(zs[i], a))
    for a, ts in zip(factor_matrices(problem), t):
        U = np.asarray(U @ rotation_exp(a, ts))
    return U


def fock_target(problem: FactorizationProblem, theta: float | None = None) -> np.ndarray:
    theta = problem.theta if theta is None else theta
    return expm(theta * symmetrized_matrix(problem).toarray())


def factorize(family: str, theta: float, *, seed: int = 0, max_restarts: int = 8, maxiter: int = 2000,
              tol: float = COST_TOL, fock_tol: float = FOCK_TOL,
              problem: FactorizationProblem | None = None) -> FactorizationResult:
    """Factorize exp(theta * G_SA) for one family and certify it in Fock space."""
    t0 = time.perf_counter()
    family = canonical_family(family)
    problem = problem or build_problem(family, theta)
    if problem.theta != theta:
        problem = FactorizationProblem(**{**problem.__dict__, "theta": float(theta)})
    central = [(i, float(theta * c)) for i, c in enumerate(problem.c)]
    target = fock_target(problem)
    best = None
    iters = 0
    for attempt in range(max_restarts + 1):
        info = solve_semisimple(problem, seed=seed, maxiter=maxiter, tol=tol, attempt=attempt)
        iters += info.iterations
        fres = float(np.linalg.norm(fock_product(problem, central, info.t) - target))
        cand = (info.cost < tol and fres < fock_tol, -info.cost, info, fres)
        if best is None or (cand[0], -cand[3]) > (best[0], -best[3]):
            best = cand
        if cand[0]:
            break
        log.info("%s theta=%.3f attempt %d: cost %.2e fock %.2e", family, theta, attempt, info.cost, fres)
    ok, _, info, fres = best
    return FactorizationResult(family, float(theta), central, list(problem.factor_order), info.t,
                               float(info.cost), fres, iters, attempt, bool(ok), seed,
                               time.perf_counter() - t0, problem)


THETA_GRID = tuple(np.linspace(-np.pi, np.pi, 9))
