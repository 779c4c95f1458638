"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` (real arrays are
accepted everywhere and promoted on demand). Eigenvalues are always returned
in descending order; ties keep LAPACK's order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Every numeric threshold used by the package, in one place."""

    hermitian: float = 1e-10
    reconstruction: float = 1e-9
    cptp: float = 1e-8
    tp_input: float = 1e-3
    psd: float = 1e-8
    density_eig: float = 1e-10
    density_trace: float = 1e-10
    kraus_drop: float = 1e-9
    support_kernel: float = 1e-12
    support_weight: float = 1e-10
    channel_equal: float = 1e-7
    unitary: float = 1e-8
    singular_guard: float = 1e-6


TOL = Tolerances()


class DimensionError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class NotHermitianError(ValueError):
    """A matrix expected to be Hermitian is not, beyond tolerance."""


def as_matrix(x) -> np.ndarray:
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def hermitian_deviation(h: np.ndarray) -> float:
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    return float(np.max(np.abs(h - dagger(h))))


def check_hermitian(h, tol: float = TOL.hermitian) -> np.ndarray:
    m = as_matrix(h)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    dev = hermitian_deviation(m)
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian: max |H - H^dag| = {dev:.3e} > {tol:.1e}")
    return 0.5 * (m + dagger(m))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(x, dim_a: int, dim_b: int, subsystem: str = "B") -> np.ndarray:
    """Trace out subsystem ``"A"`` (first factor) or ``"B"`` (second factor)."""
    m = as_matrix(x)
    n = dim_a * dim_b
    if m.shape != (n, n):
        raise DimensionError(f"partial_trace: matrix {m.shape} does not match {dim_a}x{dim_b}")
    t = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if subsystem == "B":
        return np.einsum("ijkj->ik", t)
    if subsystem == "A":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")


def hermitian_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Raises ``NotHermitianError`` when ``h`` deviates from its adjoint by more
    than ``TOL.hermitian`` in max-abs.
    """
    m = check_hermitian(h)
    w, v = np.linalg.eigh(m)
    return w[::-1].copy(), v[:, ::-1].copy()


def eigvalsh(h) -> np.ndarray:
    """Descending eigenvalues of a Hermitian matrix (no Hermiticity check)."""
    m = np.asarray(h)
    return np.linalg.eigvalsh(0.5 * (m + dagger(m)))[..., ::-1]


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(U, s, V)`` with ``m = U diag(s) V^dag`` and ``s`` descending.

    Real input stays real, so ``V^dag`` is just ``V.T`` there.
    """
    a = np.asarray(m)
    if not np.iscomplexobj(a):
        a = a.astype(float)
    u, s, vh = np.linalg.svd(a)
    return u, s, dagger(vh)


def trace_norm(x) -> float:
    return float(np.sum(np.linalg.svd(as_matrix(x), compute_uv=False)))


def spectral_norm(h) -> float:
    m = check_hermitian(h)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))


def psd_sqrt(h) -> np.ndarray:
    """Square root of a PSD matrix; tiny negative eigenvalues are clipped."""
    w, v = np.linalg.eigh(0.5 * (h + dagger(h)))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of n x n Hermitian matrices under Re Tr(A B)."""
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    s = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = s
            basis.append(e)
            f = np.zeros((n, n), dtype=complex)
            f[i, j] = 1j * s
            f[j, i] = -1j * s
            basis.append(f)
    return basis
