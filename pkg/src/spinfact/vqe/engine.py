"""Exact state-vector adaptive VQE with energy-gradient operator selection."""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.sparse.linalg import expm_multiply

from .hamiltonian import s2_operator, sector_indices
from .pools import OperatorPool

log = logging.getLogger(__name__)

GRAD_TOL = 1e-5


def apply_exp_generator(state: np.ndarray, a: sp.spmatrix, theta: float) -> np.ndarray:
    """exp(theta A) state for sparse anti-Hermitian A by the truncated-Taylor action method."""
    state = np.asarray(state)
    if theta == 0:
        return state.copy()
    return expm_multiply(theta * sp.csr_matrix(a), state)


def _sector_dense(m: sp.spmatrix, idx: np.ndarray) -> np.ndarray:
    return sp.csr_matrix(m)[idx][:, idx].toarray()


def _sector_basis(n_spatial: int, n_electrons: int, ms2: int, S: float | None):
    idx = sector_indices(n_spatial, n_electrons, ms2)
    if not len(idx):
        raise ValueError(f"empty sector N={n_electrons}, 2Sz={ms2}")
    if S is None:
        return idx, None
    s2 = _sector_dense(s2_operator(n_spatial), idx)
    w, v = np.linalg.eigh(s2)
    keep = np.abs(w - S * (S + 1)) < 1e-6
    if not keep.any():
        raise ValueError(f"empty sector N={n_electrons}, 2Sz={ms2}, S={S}")
    return idx, v[:, keep]


def exact_ground(H: sp.spmatrix, n_spatial: int, sector) -> float:
    """Lowest eigenvalue of H restricted to (N, 2Sz) or (N, 2Sz, S).

    ``sector`` holds the electron number, twice the spin projection and
    optionally the total spin S.
    """
    n_el, ms2 = int(sector[0]), int(sector[1])
    S = float(sector[2]) if len(sector) > 2 else None
    idx, proj = _sector_basis(n_spatial, n_el, ms2, S)
    h = _sector_dense(H, idx)
    if proj is not None:
        h = proj.T @ h @ proj
    return float(np.linalg.eigvalsh((h + h.T) / 2)[0])


@dataclass
class VqeIteration:
    selected: int
    label: str
    params: list[float]
    energy: float
    s2: float
    max_grad: float
    optimizer_ok: bool = True


@dataclass
class VqeRun:
    """Trajectory of one adaptive VQE run.

    ``iterations[k].max_grad`` is the pool gradient that triggered selection
    ``k``; ``final_max_grad`` is the gradient at the returned state.
    """

    pool: str
    iterations: list[VqeIteration]
    converged: bool
    reference_energy: float
    reference_s2: float
    final_max_grad: float
    exact_energy: float | None = None
    exact_energy_ms_sector: float | None = None
    message: str = ""
    elapsed: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def energies(self) -> list[float]:
        return [self.reference_energy] + [it.energy for it in self.iterations]

    @property
    def s2_values(self) -> list[float]:
        return [self.reference_s2] + [it.s2 for it in self.iterations]

    @property
    def final_energy(self) -> float:
        return self.energies[-1]

    @property
    def n_parameters(self) -> int:
        return len(self.iterations)

    @property
    def n_distinct_operators(self) -> int:
        return len({it.selected for it in self.iterations})

    @property
    def spin_drift(self) -> float:
        return float(max(abs(s - self.reference_s2) for s in self.s2_values))

    @property
    def error(self) -> float | None:
        return None if self.exact_energy is None else self.final_energy - self.exact_energy

    def to_json(self) -> dict:
        return {
            "pool": self.pool,
            "converged": self.converged,
            "message": self.message,
            "reference_energy": self.reference_energy,
            "reference_s2": self.reference_s2,
            "final_energy": self.final_energy,
            "final_max_grad": self.final_max_grad,
            "exact_energy": self.exact_energy,
            "exact_energy_ms_sector": self.exact_energy_ms_sector,
            "energy_error": self.error,
            "n_parameters": self.n_parameters,
            "n_distinct_operators": self.n_distinct_operators,
            "spin_drift": self.spin_drift,
            "elapsed_s": self.elapsed,
            "metadata": self.metadata,
            "iterations": [
                {"iteration": k + 1, "selected": it.selected, "label": it.label, "params": it.params,
                 "energy": it.energy, "s2": it.s2, "max_grad": it.max_grad, "optimizer_ok": it.optimizer_ok}
                for k, it in enumerate(self.iterations)
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy", "s2", "max_grad"])
        w.writerow([0, repr(self.reference_energy), repr(self.reference_s2), ""])
        for k, it in enumerate(self.iterations, 1):
            w.writerow([k, repr(it.energy), repr(it.s2), repr(it.max_grad)])
        w.writerow(["final", repr(self.final_energy), repr(self.s2_values[-1]), repr(self.final_max_grad)])
        return buf.getvalue()


class SectorAnsatz:
    """Product ansatz exp(t_n A_n) ... exp(t_1 A_1) |ref> inside one (N, Sz) sector.

    Each pool operator restricted to the sector is real antisymmetric, so
    iA is Hermitian; its eigendecomposition is computed once and every
    exponential is then exact to machine precision.
    """

    def __init__(self, H: sp.spmatrix, pool: OperatorPool, ref: np.ndarray, idx: np.ndarray):
        self.idx = idx
        self.H = _sector_dense(H, idx)
        self.S2 = _sector_dense(s2_operator(pool.n_spatial), idx)
        self.ref = np.asarray(ref, dtype=complex)[idx]
        if abs(np.linalg.norm(self.ref) - 1) > 1e-10:
            raise ValueError("reference is not normalized inside the (N, Sz) sector")
        self.A = np.array([_sector_dense(m, idx) for m in pool.matrices])
        self._eig: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _exp(self, k: int, t: float) -> np.ndarray:
        if k not in self._eig:
            w, v = np.linalg.eigh(1j * self.A[k])
            self._eig[k] = (w, v)
        w, v = self._eig[k]
        return (v * np.exp(-1j * t * w)) @ v.conj().T

    def states(self, ops, t):
        out = [self.ref]
        for k, tk in zip(ops, t):
            out.append(self._exp(k, tk) @ out[-1])
        return out

    def energy_grad(self, ops, t):
        st = self.states(ops, t)
        psi = st[-1]
        lam = self.H @ psi
        e = float(np.real(np.vdot(psi, lam)))
        g = np.zeros(len(ops))
        for pos in range(len(ops) - 1, -1, -1):
            k = ops[pos]
            # derivative of exp(tA) is A exp(tA); lam is the back-propagated H psi
            g[pos] = 2 * np.real(np.vdot(lam, self.A[k] @ st[pos + 1]))
            lam = self._exp(k, -t[pos]) @ lam
        return e, g

    def pool_gradients(self, psi):
        hpsi = self.H @ psi
        return 2 * np.real(np.einsum("i,kij,j->k", hpsi.conj(), self.A, psi))

    def s2(self, psi) -> float:
        return float(np.real(np.vdot(psi, self.S2 @ psi)))

    def energy(self, psi) -> float:
        return float(np.real(np.vdot(psi, self.H @ psi)))


def adapt_vqe(H: sp.spmatrix, pool: OperatorPool, reference: np.ndarray, *, n_electrons: int,
              ms2: int = 0, grad_tol: float = GRAD_TOL, max_iters: int = 200,
              exact_sector: tuple | None = None, maxiter_inner: int = 2000) -> VqeRun:
    """Adaptive VQE: grow the ansatz by the largest |<psi|[H, A_k]|psi>| until below ``grad_tol``.

    All parameters are re-optimized by BFGS after each addition, warm-started
    from the previous optimum with the new angle at zero. Ties in gradient
    magnitude go to the lowest pool index.
    """
    t0 = time.perf_counter()
    idx = sector_indices(pool.n_spatial, n_electrons, ms2)
    ref = np.asarray(reference)
    if np.linalg.norm(np.delete(ref, idx)) > 1e-10:
        raise ValueError("reference has weight outside the (N, Sz) sector")
    model = SectorAnsatz(H, pool, ref, idx)
    psi = model.ref
    e_ref, s2_ref = model.energy(psi), model.s2(psi)
    ops: list[int] = []
    t = np.zeros(0)
    iters: list[VqeIteration] = []
    converged = False
    message = "max_iters reached"
    grads = model.pool_gradients(psi)
    energy = e_ref
    for _ in range(max_iters):
        gmax = float(np.abs(grads).max()) if len(grads) else 0.0
        if gmax < grad_tol:
            converged, message = True, "gradient below tolerance"
            break
        k = int(np.argmax(np.abs(grads)))
        ops.append(k)
        t0_params = np.append(t, 0.0)
        res = minimize(lambda x: model.energy_grad(ops, x), t0_params, jac=True, method="BFGS",
                       options={"gtol": 1e-10, "maxiter": maxiter_inner})
        e_new = float(res.fun)
        ok = bool(np.all(np.isfinite(res.x))) and e_new <= energy + 1e-12
        if not ok:
            iters.append(VqeIteration(k, pool.labels[k], [float(x) for x in t0_params], energy,
                                      model.s2(psi), gmax, False))
            message = f"inner optimizer failed: {res.message}"
            break
        t = res.x
        energy = e_new
        psi = model.states(ops, t)[-1]
        iters.append(VqeIteration(k, pool.labels[k], [float(x) for x in t], energy, model.s2(psi), gmax,
                                  bool(res.success)))
        grads = model.pool_gradients(psi)
        log.debug("iter %d op %s E=%.10f", len(iters), pool.labels[k], energy)
    final_grad = float(np.abs(grads).max()) if len(grads) else 0.0
    exact = ms_exact = None
    if exact_sector is not None:
        exact = exact_ground(H, pool.n_spatial, exact_sector)
        ms_exact = exact_ground(H, pool.n_spatial, exact_sector[:2])
    return VqeRun(pool.kind, iters, converged, e_ref, s2_ref, final_grad, exact, ms_exact, message,
                  time.perf_counter() - t0,
                  {"occupied": list(pool.occupied), "virtual": list(pool.virtual), "pool_size": len(pool),
                   "grad_tol": grad_tol, **pool.metadata})
