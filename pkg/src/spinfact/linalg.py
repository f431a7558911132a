"""Matrix exponentials used by the factorizer and the certifiers."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp


def expm(x: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade approximant."""
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("expm: non-finite input")
    return sl.expm(x)


def expm_normal(x: np.ndarray) -> np.ndarray:
    """Exponential of a normal matrix through its complex Schur form.

    For a normal matrix the Schur form is diagonal, so this is an
    eigendecomposition route independent of the Pade code path.
    """
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("expm_normal: non-finite input")
    t, z = sl.schur(x.astype(complex), output="complex")
    out = (z * np.exp(np.diag(t))) @ z.conj().T
    return out.real if np.isrealobj(x) else out


class AdExp:
    """Closed-form exp(t X) for X with minimal polynomial dividing x(x^2+1)(x^2+4).

    This covers ad matrices of elements whose Fock spectrum lies in
    {-i, 0, i}: ad eigenvalues are then differences in {0, +-i, +-2i}.
    The polynomial identity is checked once at construction; if it fails the
    instance falls back to :func:`expm`.
    """

    def __init__(self, x: np.ndarray, tol: float = 1e-10):
        self.x = np.asarray(x, dtype=float)
        x2 = self.x @ self.x
        x3 = x2 @ self.x
        x4 = x2 @ x2
        # X (X^2 + 1)(X^2 + 4) = X^5 + 5 X^3 + 4 X
        check = x4 @ self.x + 5 * x3 + 4 * self.x
        scale = max(1.0, float(np.abs(self.x).max()) ** 5)
        self.closed = float(np.abs(check).max()) <= tol * scale
        self.powers = (self.x, x2, x3, x4)

    @staticmethod
    def coefficients(t: float) -> tuple[float, float, float, float]:
        s1, s2 = np.sin(t), np.sin(2 * t)
        u1, u2 = 1 - np.cos(t), 1 - np.cos(2 * t)
        return (8 * s1 - s2) / 6, (16 * u1 - u2) / 12, (2 * s1 - s2) / 6, (4 * u1 - u2) / 12

    def __call__(self, t: float) -> np.ndarray:
        if not self.closed:
            return expm(t * self.x)
        c1, c2, c3, c4 = self.coefficients(t)
        x1, x2, x3, x4 = self.powers
        out = c1 * x1 + c2 * x2 + c3 * x3 + c4 * x4
        out[np.diag_indices_from(out)] += 1.0
        return out


def batched_ad_exp(powers: np.ndarray, t: float) -> np.ndarray:
    """Closed-form exponential on a stack of powers (4, nb, k, k)."""
    c = AdExp.coefficients(t)
    out = np.tensordot(np.asarray(c), powers, axes=1)
    k = out.shape[-1]
    out[..., range(k), range(k)] += 1.0
    return out


def is_cubic_rotation(a: sp.spmatrix, tol: float = 1e-12) -> bool:
    """Whether A^3 = -A, so exp(tA) = I + sin t A + (1 - cos t) A^2."""
    a3 = a @ a @ a
    d = a3 + a
    return (abs(d).max() if d.nnz else 0.0) <= tol


def rotation_exp(a: sp.spmatrix, t: float, cubic: bool | None = None) -> sp.csr_matrix | np.ndarray:
    """exp(t A) for a sparse Fock-space element.

    Uses the closed form when A^3 = -A and the dense Pade route otherwise.
    """
    if cubic is None:
        cubic = is_cubic_rotation(a)
    if cubic:
        a = sp.csr_matrix(a)
        return (sp.identity(a.shape[0], format="csr") + np.sin(t) * a + (1 - np.cos(t)) * (a @ a)).tocsr()
    return expm(t * a.toarray())
