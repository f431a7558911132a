"""Hot kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``SPINFACT_BACKEND=numpy``
to force the numpy kernels (the numba path is used when numba imports).
Both paths share signatures and are checked against each other in tests.

Pauli strings are stored as bit masks over basis-state indices: qubit q is
bit ``n - 1 - q``. A string with masks (x, z) acts as
``P|c> = i^popcount(x & z) (-1)^popcount(c & z) |c ^ x>``.
"""

from __future__ import annotations

import os

import numpy as np

_requested = os.environ.get("SPINFACT_BACKEND", "numba").strip().lower()
try:
    if _requested == "numpy":
        raise ImportError
    import numba

    njit = numba.njit(cache=True, nogil=True)
    BACKEND = "numba"
except ImportError:  # pragma: no cover - exercised through the env flag
    numba = None
    BACKEND = "numpy"


def parity_table(n: int) -> np.ndarray:
    """popcount(c) & 1 for every c < 2**n, as int8."""
    c = np.arange(2 ** n, dtype=np.int64)
    p = np.zeros_like(c)
    while np.any(c):
        p ^= c & 1
        c >>= 1
    return p.astype(np.int8)


# ---------------------------------------------------------------- numpy path


def _np_wht(f: np.ndarray) -> np.ndarray:
    h = np.array(f, dtype=float, copy=True)
    n = len(h)
    k = 1
    while k < n:
        h = h.reshape(-1, 2, k)
        h = np.stack([h[:, 0] + h[:, 1], h[:, 0] - h[:, 1]], axis=1).reshape(n)
        k *= 2
    return h


def _np_decompose(rows, cols, vals, n, tol):
    dim = 2 ** n
    xs = rows ^ cols
    out_x, out_z, out_c = [], [], []
    order = np.argsort(xs, kind="stable")
    xs_s, cols_s, vals_s = xs[order], cols[order], vals[order]
    bounds = np.flatnonzero(np.diff(xs_s)) + 1
    for seg in np.split(np.arange(len(xs_s)), bounds):
        if not len(seg):
            continue
        f = np.zeros(dim)
        np.add.at(f, cols_s[seg], vals_s[seg])
        h = _np_wht(f) / dim
        nz = np.flatnonzero(np.abs(h) > tol)
        out_x.append(np.full(len(nz), xs_s[seg[0]], dtype=np.int64))
        out_z.append(nz.astype(np.int64))
        out_c.append(h[nz])
    if not out_x:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    return np.concatenate(out_x), np.concatenate(out_z), np.concatenate(out_c)


def _np_apply(state, xs, zs, angles, parity):
    psi = np.array(state, dtype=complex, copy=True)
    idx = np.arange(len(psi))
    for x, z, a in zip(xs, zs, angles):
        ny = bin(int(x) & int(z)).count("1")
        phase = 1j ** ny
        sign = 1.0 - 2.0 * parity[idx & z]
        p_psi = np.empty_like(psi)
        p_psi[idx ^ x] = phase * (sign * psi.T).T
        psi = np.cos(a) * psi + 1j * np.sin(a) * p_psi
    return psi


# ---------------------------------------------------------------- numba path

if numba is not None:

    @njit
    def _nb_wht(h):
        n = h.shape[0]
        k = 1
        while k < n:
            for i in range(0, n, 2 * k):
                for j in range(i, i + k):
                    a = h[j]
                    b = h[j + k]
                    h[j] = a + b
                    h[j + k] = a - b
            k *= 2

    @njit
    def _nb_decompose(rows, cols, vals, n, tol):
        dim = 1 << n
        xs = rows ^ cols
        order = np.argsort(xs, kind="mergesort")
        m = xs.shape[0]
        cap = m * 8 + 16
        ox = np.empty(cap, np.int64)
        oz = np.empty(cap, np.int64)
        oc = np.empty(cap, np.float64)
        cnt = 0
        f = np.zeros(dim)
        start = 0
        while start < m:
            x = xs[order[start]]
            stop = start
            while stop < m and xs[order[stop]] == x:
                stop += 1
            f[:] = 0.0
            for k in range(start, stop):
                f[cols[order[k]]] += vals[order[k]]
            _nb_wht(f)
            for z in range(dim):
                v = f[z] / dim
                if abs(v) > tol:
                    if cnt == cap:
                        cap *= 2
                        ox2 = np.empty(cap, np.int64)
                        oz2 = np.empty(cap, np.int64)
                        oc2 = np.empty(cap, np.float64)
                        ox2[:cnt] = ox[:cnt]
                        oz2[:cnt] = oz[:cnt]
                        oc2[:cnt] = oc[:cnt]
                        ox, oz, oc = ox2, oz2, oc2
                    ox[cnt] = x
                    oz[cnt] = z
                    oc[cnt] = v
                    cnt += 1
            start = stop
        return ox[:cnt], oz[:cnt], oc[:cnt]

    @njit
    def _nb_apply(state, xs, zs, angles, parity):
        # state has shape (dim, k)
        psi = state.copy()
        tmp = np.empty_like(psi)
        dim = psi.shape[0]
        ncol = psi.shape[1]
        for e in range(xs.shape[0]):
            x = xs[e]
            z = zs[e]
            ny = 0
            w = x & z
            while w:
                ny += w & 1
                w >>= 1
            ph = 1.0 + 0.0j
            for _ in range(ny % 4):
                ph *= 1j
            c = np.cos(angles[e])
            s = np.sin(angles[e])
            for i in range(dim):
                f = ph * (1.0 - 2.0 * parity[i & z])
                j = i ^ x
                for col in range(ncol):
                    tmp[j, col] = f * psi[i, col]
            for i in range(dim):
                for col in range(ncol):
                    psi[i, col] = c * psi[i, col] + 1j * s * tmp[i, col]
        return psi


def decompose_masks(rows, cols, vals, n: int, tol: float = 1e-12, backend: str | None = None):
    """Real Walsh-Hadamard part of the Pauli decomposition of a sparse matrix.

    Returns arrays (x, z, h) with ``h = sum_c (-1)^popcount(c & z) M[c ^ x, c] / 2**n``.
    The Pauli coefficient is ``(-i)^popcount(x & z) * h``.
    """
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    if (backend or BACKEND) == "numba" and numba is not None:
        return _nb_decompose(rows, cols, vals, n, tol)
    return _np_decompose(rows, cols, vals, n, tol)


def apply_rotations(state, xs, zs, angles, backend: str | None = None) -> np.ndarray:
    """Apply exp(i * angle_k * P_k) in sequence, first entry first.

    ``state`` is a vector or a (dim, k) stack of column states.
    """
    state = np.ascontiguousarray(state, dtype=np.complex128)
    n = int(np.log2(state.shape[0]))
    parity = parity_table(n)
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    zs = np.ascontiguousarray(zs, dtype=np.int64)
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    if (backend or BACKEND) == "numba" and numba is not None:
        vec = state.ndim == 1
        out = _nb_apply(state.reshape(len(state), -1), xs, zs, angles, parity)
        return out[:, 0] if vec else out
    return _np_apply(state, xs, zs, angles, parity)
