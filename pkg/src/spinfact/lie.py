"""Commutator closures, structure constants, centers, derived algebras and ideals.

Algebra elements are real sparse anti-symmetric matrices. Linear algebra on
them is done on coordinate vectors over the union of their sparsity patterns,
which for the algebras here is a few hundred to a few thousand entries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp

from .dsl import GeneratorSpec, build_generator, format_spec
from .families import Family, load_family
from .fock import OrbitalSet

log = logging.getLogger(__name__)

INDEP_TOL = 1e-8
NULL_TOL = 1e-9


class StructureError(RuntimeError):
    """An algebraic invariant failed (non-closure, bad seed, ...)."""


def bracket(x: sp.spmatrix, y: sp.spmatrix) -> sp.csr_matrix:
    c = (x @ y - y @ x).tocsr()
    c.eliminate_zeros()
    return c


def hs_inner(x: sp.spmatrix, y: sp.spmatrix) -> float:
    """Hilbert-Schmidt inner product Re tr(X^T Y) / dim."""
    return float(x.multiply(y).sum()) / x.shape[0]


class SupportIndex:
    """Maps matrix entries (r, c) to coordinate slots, growing on demand."""

    def __init__(self, dim: int):
        self.dim = dim
        self.keys = np.zeros(0, dtype=np.int64)  # sorted linear indices
        self.slot = np.zeros(0, dtype=np.int64)  # slot of each sorted key
        self.size = 0

    def vector(self, m: sp.spmatrix, grow: bool = True) -> tuple[np.ndarray, float]:
        """Coordinates of m and the norm of entries outside the index."""
        m = m.tocoo()
        lin = m.row.astype(np.int64) * self.dim + m.col
        if len(self.keys):
            pos_c = np.minimum(np.searchsorted(self.keys, lin), len(self.keys) - 1)
            found = self.keys[pos_c] == lin
        else:
            pos_c = np.zeros(len(lin), dtype=np.int64)
            found = np.zeros(len(lin), dtype=bool)
        if grow and not np.all(found):
            new = np.unique(lin[~found])
            self.keys = np.concatenate([self.keys, new])
            self.slot = np.concatenate([self.slot, np.arange(self.size, self.size + len(new))])
            order = np.argsort(self.keys, kind="stable")
            self.keys, self.slot = self.keys[order], self.slot[order]
            self.size += len(new)
            return self.vector(m, grow=False)
        v = np.zeros(self.size)
        np.add.at(v, self.slot[pos_c[found]], m.data[found])
        outside = float(np.linalg.norm(m.data[~found]))
        return v, outside


def _pad(vs: list[np.ndarray], size: int) -> np.ndarray:
    out = np.zeros((len(vs), size))
    for k, v in enumerate(vs):
        out[k, : len(v)] = v
    return out


def close(seeds: Sequence[sp.spmatrix], tol: float = INDEP_TOL, cap: int | None = None) -> list[sp.csr_matrix]:
    """Lie closure of a seed set under the commutator.

    New brackets (frontier x current) are appended when their relative
    residual after Gram-Schmidt exceeds ``tol``. Returned elements are
    orthonormal under the Hilbert-Schmidt inner product.

    Raises:
        StructureError: on a non-anti-symmetric seed or if the cap is exceeded.
    """
    if not seeds:
        return []
    dim = seeds[0].shape[0]
    n = int(round(np.log2(dim)))
    cap = cap or 4 ** n - 1
    for s in seeds:
        if s.shape != (dim, dim):
            raise StructureError("seeds differ in dimension")
        if abs(s + s.T).max() > 1e-12:
            raise StructureError("seed is not anti-Hermitian")
    index = SupportIndex(dim)
    q: list[np.ndarray] = []
    mats: list[sp.csr_matrix] = []
    scale = np.sqrt(dim)

    def add(x: sp.spmatrix) -> bool:
        v, _ = index.vector(x)
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            return False
        w = v.copy()
        for _ in range(2):
            for u in q:
                w[: len(u)] -= (u @ w[: len(u)]) * u
        nw = np.linalg.norm(w)
        if nw / nv < tol:
            return False
        w /= nw
        q.append(w)
        # orthonormal element: coordinates w on the support, HS norm 1
        mats.append(_from_coords(index, w, dim) * scale)
        if len(mats) > cap:
            raise StructureError(f"closure exceeded dimension cap {cap}")
        return True

    for s in seeds:
        add(s)
    frontier = list(range(len(mats)))
    while frontier:
        new = []
        fset = set(frontier)
        for f in frontier:
            for j in range(len(mats)):
                if j != f and not (j in fset and j < f):
                    c = bracket(mats[f], mats[j])
                    if c.nnz and add(c):
                        new.append(len(mats) - 1)
        log.info("closure dimension %d", len(mats))
        frontier = new
    return mats


def _from_coords(index: SupportIndex, v: np.ndarray, dim: int) -> sp.csr_matrix:
    inv = np.empty(index.size, dtype=np.int64)
    inv[index.slot] = index.keys
    nz = np.abs(v) > 1e-15
    lin = inv[: len(v)][nz]
    m = sp.csr_matrix((v[nz], (lin // dim, lin % dim)), shape=(dim, dim))
    return m


def structure_constants(mats: Sequence[sp.spmatrix]) -> tuple[np.ndarray, float]:
    """Structure tensor M with [A_i, A_j] = sum_k M[i, j, k] A_k.

    Each bracket is projected onto the basis by a Gram solve. Returns the
    tensor and the largest Frobenius residual of the projections.

    Raises:
        StructureError: if the basis is linearly dependent.
    """
    m = len(mats)
    dim = mats[0].shape[0]
    index = SupportIndex(dim)
    vs = [index.vector(a)[0] for a in mats]
    V = _pad(vs, index.size)
    G = V @ V.T
    if np.linalg.matrix_rank(G, tol=1e-10 * np.abs(G).max()) < m:
        raise StructureError("basis is linearly dependent")
    cho = sl.cho_factor(G)
    M = np.zeros((m, m, m))
    worst = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            c = bracket(mats[i], mats[j])
            if not c.nnz:
                continue
            v, outside = index.vector(c, grow=False)
            x = sl.cho_solve(cho, V @ v)
            r = np.sqrt(max(np.linalg.norm(v - x @ V) ** 2 + outside ** 2, 0.0))
            worst = max(worst, r)
            M[i, j] = x
            M[j, i] = -x
    return M, worst


def _snap(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    r = np.round(M)
    return np.where(np.abs(M - r) < tol, r, M)


@dataclass
class Ideal:
    """One ideal of the derived algebra.

    Attributes:
        vectors: orthonormal coordinate vectors (rows) spanning the ideal.
        members: listed element indices (0-based) whose derived part lies in it.
    """

    vectors: np.ndarray
    members: list[int] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


@dataclass
class LieAlgebraModel:
    """A finite-dimensional real Lie algebra realized by Fock-space matrices.

    Attributes:
        family: family key or ``"custom"``.
        mode: ``"appendix"`` or ``"discovery"``.
        orbitals: qubit ordering of the matrices.
        mats: independent basis matrices (length m).
        structure: tensor M[i, j, k] over ``mats``.
        closure_residual: largest projection residual of the brackets.
        specs: symbolic listed elements (appendix mode).
        listed_coords: coordinates of every listed element over ``mats``.
        basis_index: listed index of each independent basis element.
    """

    family: str
    mode: str
    orbitals: OrbitalSet
    mats: list[sp.csr_matrix]
    structure: np.ndarray
    closure_residual: float
    specs: list[GeneratorSpec] = field(default_factory=list)
    listed_coords: np.ndarray | None = None
    basis_index: list[int] = field(default_factory=list)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return len(self.mats)

    @property
    def n_listed(self) -> int:
        return len(self.specs) if self.specs else self.m

    def coords_of_listed(self) -> np.ndarray:
        return self.listed_coords if self.listed_coords is not None else np.eye(self.m)

    def element(self, coeffs: np.ndarray) -> sp.csr_matrix:
        """Matrix of sum_k coeffs[k] * mats[k]."""
        out = sp.csr_matrix(self.mats[0].shape)
        for c, a in zip(coeffs, self.mats):
            if abs(c) > 1e-15:
                out = out + c * a
        return out.tocsr()

    def listed_element(self, k: int) -> sp.csr_matrix:
        return build_generator(self.specs[k], self.orbitals) if self.specs else self.mats[k]

    def ad(self, coeffs: np.ndarray | None = None) -> np.ndarray:
        """Adjoint matrices; ad(x)[k, j] = coefficient of A_k in [x, A_j]."""
        if "ad" not in self._cache:
            self._cache["ad"] = np.ascontiguousarray(self.structure.transpose(0, 2, 1))
        ads = self._cache["ad"]
        if coeffs is None:
            return ads
        return np.tensordot(coeffs, ads, axes=1)

    def center(self) -> np.ndarray:
        if "center" not in self._cache:
            self._cache["center"] = center(self)
        return self._cache["center"]

    def derived(self) -> np.ndarray:
        if "derived" not in self._cache:
            self._cache["derived"] = derived(self)
        return self._cache["derived"]

    def ideals(self) -> list[Ideal]:
        if "ideals" not in self._cache:
            self._cache["ideals"] = ideal_partition(self)
        return self._cache["ideals"]


def _independent(vectors: np.ndarray, tol: float = INDEP_TOL) -> list[int]:
    keep: list[int] = []
    q: list[np.ndarray] = []
    for k, v in enumerate(vectors):
        w = v.astype(float).copy()
        nv = np.linalg.norm(w)
        if nv == 0:
            continue
        for _ in range(2):
            for u in q:
                w -= (u @ w) * u
        if np.linalg.norm(w) / nv > tol:
            q.append(w / np.linalg.norm(w))
            keep.append(k)
    return keep


def from_family(family: str | Family, mode: str = "appendix") -> LieAlgebraModel:
    """Build the algebra of a generator family.

    In appendix mode the listed elements are used; a dependent list is
    reduced to its first independent members in listed order and every
    listed element keeps its coordinates. Discovery mode closes the
    elementary generators from scratch.
    """
    fam = family if isinstance(family, Family) else load_family(family)
    orbs = fam.orbitals
    if mode == "discovery":
        seeds = [build_generator(s, orbs) for s in fam.elementary]
        mats = close(seeds)
        M, res = structure_constants(mats)
        return LieAlgebraModel(fam.name, mode, orbs, mats, M, res)
    if mode != "appendix":
        raise ValueError(f"mode must be appendix or discovery, got {mode!r}")
    listed = [build_generator(s, orbs) for s in fam.basis]
    index = SupportIndex(orbs.dim)
    vs = [index.vector(a)[0] for a in listed]
    V = _pad(vs, index.size)
    keep = _independent(V)
    if len(keep) < len(listed):
        log.warning("%s: %d listed elements span only %d dimensions", fam.name, len(listed), len(keep))
    mats = [listed[k] for k in keep]
    coords = np.linalg.lstsq(V[keep].T, V.T, rcond=None)[0].T
    coords = _snap(coords, 1e-10)
    M, res = structure_constants(mats)
    M = _snap(M)
    return LieAlgebraModel(fam.name, mode, orbs, mats, M, res, list(fam.basis), coords, keep)


def jacobi_residual(M: np.ndarray) -> float:
    """Max-norm violation of the Jacobi identity over all triples."""
    worst = 0.0
    for i in range(M.shape[0]):
        # [[A_i, A_j], A_k] + [[A_j, A_k], A_i] + [[A_k, A_i], A_j]
        t1 = np.einsum("jl,lkn->jkn", M[i], M)
        t2 = np.einsum("jkl,ln->jkn", M, M[:, i, :])
        t3 = np.einsum("kl,ljn->jkn", -M[i], M)
        worst = max(worst, float(np.abs(t1 + t2 + t3).max()))
    return worst


def closure_check(model: LieAlgebraModel) -> float:
    """Direct matrix residual max ||[A_i,A_j] - sum_k M_ijk A_k||_F."""
    worst = 0.0
    for i in range(model.m):
        for j in range(i + 1, model.m):
            c = bracket(model.mats[i], model.mats[j]) - model.element(model.structure[i, j])
            worst = max(worst, float(sp.linalg.norm(c)) if c.nnz else 0.0)
    return worst


def _null_rows(A: np.ndarray, tol: float = NULL_TOL) -> np.ndarray:
    if A.shape[0] >= A.shape[1]:
        s, vt = sl.svd(A, full_matrices=False, compute_uv=True, lapack_driver="gesdd")[1:]
    else:
        s, vt = np.linalg.svd(A, full_matrices=True)[1:]
    thresh = tol * max(s.max() if s.size else 0.0, 1.0)
    rank = int((s > thresh).sum())
    return vt[rank:]


def _range_rows(A: np.ndarray, tol: float = NULL_TOL) -> np.ndarray:
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    thresh = tol * max(s.max() if s.size else 0.0, 1.0)
    return vt[: int((s > thresh).sum())]


def center(model: LieAlgebraModel) -> np.ndarray:
    """Orthonormal coordinate vectors spanning the center (rows)."""
    m = model.m
    # v central iff sum_i v_i M[i, j, k] = 0 for all j, k
    A = model.structure.reshape(m, m * m).T
    return _null_rows(A)


def derived(model: LieAlgebraModel) -> np.ndarray:
    """Orthonormal coordinate vectors spanning [g, g] (rows)."""
    m = model.m
    return _range_rows(model.structure.reshape(m * m, m))


def killing_form(model: LieAlgebraModel, subspace: np.ndarray | None = None) -> np.ndarray:
    """B(X, Y) = tr(ad X ad Y) from structure constants, on a subspace (rows)."""
    ads = model.ad()
    K = np.einsum("xkl,ylk->xy", ads, ads)
    if subspace is None:
        return K
    return subspace @ K @ subspace.T


def generated_ideal(model: LieAlgebraModel, vectors: np.ndarray, tol: float = NULL_TOL) -> np.ndarray:
    """Smallest ad-invariant subspace containing the given coordinate rows."""
    ads = model.ad()
    S = _range_rows(np.atleast_2d(vectors), tol)
    while True:
        grown = np.vstack([S] + [S @ a.T for a in ads])
        S2 = _range_rows(grown, tol)
        if S2.shape[0] == S.shape[0]:
            return S2
        S = S2


def _complement(E: np.ndarray, J: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Killing-orthogonal complement of J inside E (both rows)."""
    ns = _null_rows(J @ K @ E.T)
    if ns.size == 0:
        return np.zeros((0, E.shape[1]))
    return _range_rows(ns @ E)


def _commutant_split(model: LieAlgebraModel, E: np.ndarray, rng: np.random.Generator) -> list[np.ndarray]:
    """Split an ideal into simple ideals using a random element of the ad commutant."""
    k = E.shape[0]
    if k <= 3:
        return [E]
    Ep = np.linalg.pinv(E.T)
    R = [Ep @ a @ E.T for a in model.ad()]
    eye = np.eye(k)
    L = np.vstack([np.kron(eye, r) - np.kron(r.T, eye) for r in R if np.abs(r).max() > 1e-12])
    N = _null_rows(L)
    if N.shape[0] <= 1:
        return [E]
    T = (rng.normal(size=N.shape[0]) @ N).reshape(k, k, order="F")
    w, V = np.linalg.eig(T)
    out = []
    used = np.zeros(k, bool)
    for a in range(k):
        if used[a]:
            continue
        grp = np.abs(w - w[a]) < 1e-6 * max(1.0, np.abs(w).max())
        used |= grp
        block = V[:, grp]
        block = np.hstack([block.real, block.imag])
        out.append(_range_rows((E.T @ block).T))
    return out


def ideal_partition(model: LieAlgebraModel, seed: int = 0) -> list[Ideal]:
    """Decompose the derived algebra into simple ideals.

    Ideals generated by basis elements are split against each other through
    Killing-orthogonal complements. Atoms that no basis element separates
    are split with a random element of the commutant of the adjoint action,
    which acts as a scalar on each simple ideal.

    Returns:
        Ideals sorted by (dimension, smallest member index).

    Raises:
        StructureError: if the parts do not commute or are not ideals.
    """
    D = model.derived()
    if D.shape[0] == 0:
        return []
    K = killing_form(model)
    C = model.center()
    rng = np.random.default_rng(seed)
    X = model.coords_of_listed()
    stack, atoms = [D], []
    while stack:
        E = stack.pop()
        if E.shape[0] <= 3:
            atoms.append(E)
            continue
        basis = np.vstack([E, _complement(D, E, K), C])
        parts = np.linalg.lstsq(basis.T, X.T, rcond=None)[0][: E.shape[0]].T @ E
        cands = [p for p in parts if np.linalg.norm(p) > 1e-9] + [rng.normal(size=E.shape[0]) @ E]
        for v in cands:
            J = generated_ideal(model, v)
            if J.shape[0] < E.shape[0]:
                stack += [J, _complement(E, J, K)]
                break
        else:
            atoms.append(E)
    simple = [blk for E in atoms for blk in _commutant_split(model, E, rng)]
    ideals = [Ideal(b) for b in simple]
    _verify_ideals(model, ideals)
    _assign_members(model, ideals)
    ideals.sort(key=lambda I: (I.dim, I.members[:1] or [10 ** 9]))
    return ideals


def _projector_parts(model: LieAlgebraModel, ideals: list[Ideal]) -> np.ndarray:
    """Components of every listed element along each ideal (and the center)."""
    blocks = [I.vectors for I in ideals] + [model.center()]
    basis = np.vstack(blocks)
    coef = np.linalg.lstsq(basis.T, model.coords_of_listed().T, rcond=None)[0]
    norms = []
    pos = 0
    for b in blocks:
        norms.append(np.linalg.norm(coef[pos: pos + b.shape[0]], axis=0))
        pos += b.shape[0]
    return np.array(norms)  # (n_blocks, n_listed)


def _assign_members(model: LieAlgebraModel, ideals: list[Ideal]) -> None:
    parts = _projector_parts(model, ideals)[:-1]
    for k in range(parts.shape[1]):
        nz = np.nonzero(parts[:, k] > 1e-8)[0]
        if len(nz) == 1:
            ideals[nz[0]].members.append(k)


def element_ideal_support(model: LieAlgebraModel, ideals: list[Ideal] | None = None) -> list[list[int]]:
    """For every listed element, the indices of the ideals it has weight in."""
    ideals = ideals if ideals is not None else model.ideals()
    parts = _projector_parts(model, ideals)[:-1]
    return [list(np.nonzero(parts[:, k] > 1e-8)[0]) for k in range(parts.shape[1])]


def _verify_ideals(model: LieAlgebraModel, ideals: list[Ideal], tol: float = 1e-8) -> None:
    ads = model.ad()
    total = sum(I.dim for I in ideals)
    if total != model.derived().shape[0]:
        raise StructureError(f"ideal dimensions sum to {total}, derived has {model.derived().shape[0]}")
    for r, I in enumerate(ideals):
        img = np.einsum("xkj,sj->xsk", ads, I.vectors).reshape(-1, model.m)
        leak = img - img @ I.vectors.T @ I.vectors
        if np.abs(leak).max() > tol * max(1.0, np.abs(img).max()):
            raise StructureError(f"ideal {r} is not ad-invariant")
        for s in range(r):
            br = np.einsum("ai,ijk,bj->abk", I.vectors, model.structure, ideals[s].vectors)
            if np.abs(br).max() > tol:
                raise StructureError(f"ideals {s} and {r} do not commute")


def is_ideal(model: LieAlgebraModel, vectors: np.ndarray, tol: float = 1e-8) -> tuple[bool, float]:
    """Whether the span of the coordinate rows is ad-invariant; returns the relative leak."""
    S = _range_rows(np.atleast_2d(vectors))
    ads = model.ad()
    img = np.einsum("xkj,sj->xsk", ads, S).reshape(-1, model.m)
    leak = np.linalg.norm(img - img @ S.T @ S) / max(np.linalg.norm(img), 1e-300)
    return leak < tol, float(leak)


def generated_ideal_partition(model: LieAlgebraModel) -> list[tuple[int, list[int]]]:
    """Group listed elements by the ideal generated from each one's derived part.

    This is the plain per-element rule; it is exact only when every listed
    element lies in a single simple ideal. Returns (dimension, members) pairs.
    """
    D = model.derived()
    C = model.center()
    X = model.coords_of_listed()
    basis = np.vstack([D, C])
    parts = np.linalg.lstsq(basis.T, X.T, rcond=None)[0][: D.shape[0]].T @ D
    groups: list[tuple[np.ndarray, list[int]]] = []
    for k, v in enumerate(parts):
        if np.linalg.norm(v) < 1e-9:
            continue
        J = generated_ideal(model, v)
        for S, mem in groups:
            if S.shape == J.shape and np.allclose(np.abs(S @ J.T @ J - S).max(), 0, atol=1e-8):
                mem.append(k)
                break
        else:
            groups.append((J, [k]))
    return [(S.shape[0], mem) for S, mem in groups]


def verify_abelian(model: LieAlgebraModel, indices: Sequence[int]) -> bool:
    """True iff all pairwise brackets of the listed elements vanish (0-based)."""
    X = model.coords_of_listed()
    for a in range(len(indices)):
        for b in range(a + 1, len(indices)):
            v = np.einsum("i,ijk,j->k", X[indices[a]], model.structure, X[indices[b]])
            if np.abs(v).max() > 1e-9:
                return False
    return True


def combo_coords(model: LieAlgebraModel, combo: dict[int, int]) -> np.ndarray:
    """Coordinates of an integer combination of 1-based listed elements."""
    X = model.coords_of_listed()
    return sum(c * X[k - 1] for k, c in combo.items())


def central_residual(model: LieAlgebraModel, coeffs: np.ndarray) -> float:
    """max_j ||[Z, A_j]||_F with matrices built directly."""
    z = model.element(coeffs)
    return max(float(sp.linalg.norm(bracket(z, a))) if bracket(z, a).nnz else 0.0 for a in model.mats)


def span_residual(a: Sequence[sp.spmatrix], b: Sequence[sp.spmatrix]) -> float:
    """Largest relative distance of an element of either set from the other's span."""
    dim = a[0].shape[0]
    index = SupportIndex(dim)
    va = [index.vector(x)[0] for x in a]
    vb = [index.vector(x)[0] for x in b]
    A = _range_rows(_pad(va, index.size))
    B = _range_rows(_pad(vb, index.size))
    ra = np.linalg.norm(A - A @ B.T @ B, axis=1).max()
    rb = np.linalg.norm(B - B @ A.T @ A, axis=1).max()
    return float(max(ra, rb))


def spectrum_residual(mat: sp.spmatrix) -> float:
    """Distance of the spectrum of iA from {-1, 0, 1}."""
    ev = np.linalg.eigvalsh(1j * mat.toarray())
    return float(np.abs(ev - np.clip(np.round(ev), -1, 1)).max())


def to_json(model: LieAlgebraModel, ideals: list[Ideal] | None = None) -> dict:
    """Serializable summary with deterministic ordering."""
    M = model.structure
    sc = [[int(i), int(j), int(k), float(M[i, j, k])]
          for i, j, k in zip(*np.nonzero(np.abs(M) > 1e-12))]
    ideals = ideals if ideals is not None else model.ideals()
    return {
        "family": model.family,
        "mode": model.mode,
        "dimension": model.m,
        "listed": model.n_listed,
        "basis": [format_spec(s, model.orbitals) for s in model.specs],
        "basis_index": [int(k) for k in model.basis_index],
        "listed_coords": _clean(model.listed_coords) if model.listed_coords is not None else None,
        "structure_constants": sc,
        "closure_residual": model.closure_residual,
        "center": _clean(model.center()),
        "derived": _clean(model.derived()),
        "ideals": [{"dim": I.dim, "members": [int(k) for k in I.members], "vectors": _clean(I.vectors)}
                   for I in ideals],
    }


def _clean(a: np.ndarray) -> list:
    a = np.where(np.abs(a) < 1e-13, 0.0, a)
    return [[float(x) for x in row] for row in a]
