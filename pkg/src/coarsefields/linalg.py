"""Small dense Hermitian linear algebra: cyclic Jacobi and functional calculus."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import StructuralError

JACOBI_TOL = 1e-12
MAX_SWEEPS = 100


def jacobi_eigh(A, tol: float = JACOBI_TOL):
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.

    Cyclic sweeps in row-major ``(p, q)`` order; each rotation first removes the
    phase of ``A[p, q]`` and then applies a real Givens rotation.  Stops when the
    off-diagonal Frobenius norm is below ``tol * max(1, ||A||_F)``.
    """
    A = np.array(A, dtype=complex)
    n, m = A.shape
    if n != m:
        raise StructuralError("jacobi_eigh needs a square matrix")
    if not np.allclose(A, A.conj().T, atol=1e-12 * max(1.0, np.abs(A).max(initial=0.0))):
        raise StructuralError("jacobi_eigh needs a Hermitian matrix")
    A = (A + A.conj().T) / 2
    V = np.eye(n, dtype=complex)
    limit = tol * max(1.0, float(np.linalg.norm(A)))
    for _ in range(MAX_SWEEPS):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= limit:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                r = abs(A[p, q])
                if r <= limit / (n * n):
                    continue
                phase = A[p, q] / r
                app, aqq = A[p, p].real, A[q, q].real
                phi = 0.5 * math.atan2(2 * r, aqq - app)
                c, s = math.cos(phi), math.sin(phi)
                G = np.eye(n, dtype=complex)
                # D = diag(1, conj(phase)) makes the pivot real; then rotate
                G[p, p], G[p, q] = c, s
                G[q, p], G[q, q] = -s * np.conj(phase), c * np.conj(phase)
                A = G.conj().T @ A @ G
                A[p, q] = A[q, p] = 0.0
                V = V @ G
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    w = np.real(np.diag(A))
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def apply_function(fn, A):
    """``fn(A)`` for Hermitian ``A`` via its eigendecomposition."""
    w, V = jacobi_eigh(A)
    return (V * np.array([fn(x) for x in w], dtype=complex)) @ V.conj().T


def op_norm(M) -> float:
    """Operator (spectral) norm of a rectangular matrix."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    G = M.conj().T @ M if M.shape[0] >= M.shape[1] else M @ M.conj().T
    w, _ = jacobi_eigh(G)
    return math.sqrt(max(0.0, float(w[-1])))


def projection_defect(A) -> float:
    """``||A - A^2||`` for Hermitian ``A``, i.e. ``max |l - l^2|`` over the spectrum."""
    w, _ = jacobi_eigh(A)
    return max((abs(x - x * x) for x in w), default=0.0)


# The cut-off functions used to snap near-projections onto projections.
# g vanishes on (-inf, 1/4], rises linearly to 4/3 on [1/4, 3/4] and equals 1/x
# beyond, so f(x) = x g(x) is 0 on the lower band and 1 on the upper band.
G_LOW = Fraction(1, 4)
G_HIGH = Fraction(3, 4)
PROJECTION_THRESHOLD = Fraction(3, 16)


def g_cut(x: float) -> float:
    if x <= 0.25:
        return 0.0
    if x <= 0.75:
        return (8.0 / 3.0) * (x - 0.25)
    return 1.0 / x


def f_cut(x: float) -> float:
    return x * g_cut(x)


def sqrt_g_cut(x: float) -> float:
    return math.sqrt(g_cut(x))
