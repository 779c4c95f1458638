"""Static total-coherence measures of density matrices.

Logarithms are base 2 throughout, so values are in bits.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .numerics import TOL, DimensionError, as_matrix, dagger


class StaticMeasureId(str, Enum):
    C2 = "C2"
    CRE = "CRE"


def _spectrum(rho) -> np.ndarray:
    m = np.asarray(rho)
    w = np.linalg.eigvalsh(0.5 * (m + dagger(m)))
    return np.where(w < 0, 0.0, w)


def entropy(rho) -> float:
    """Von Neumann entropy in bits; eigenvalues in [-1e-10, 0] count as 0."""
    w = _spectrum(as_matrix(rho))
    w = w[w > 0]
    return float(max(-np.sum(w * np.log2(w)), 0.0))


def entropies(rhos: np.ndarray) -> np.ndarray:
    """Entropies of a stack of states, shape (N, d, d)."""
    w = _spectrum(rhos)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, -w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return np.maximum(terms.sum(axis=-1), 0.0)


def purity(rho) -> float:
    m = as_matrix(rho)
    return float(np.real(np.vdot(m, m)))


def c2(rho) -> float:
    """Purity minus 1/dim."""
    m = as_matrix(rho)
    return purity(m) - 1.0 / m.shape[0]


def c2_batch(rhos: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("nab,nab->n", np.conj(rhos), rhos)) - 1.0 / rhos.shape[-1]


def c_re(rho) -> float:
    m = as_matrix(rho)
    return float(np.log2(m.shape[0]) - entropy(m))


def c_re_batch(rhos: np.ndarray) -> np.ndarray:
    return np.log2(rhos.shape[-1]) - entropies(rhos)


def static_measure(measure: StaticMeasureId | str):
    """(single, batched) evaluators for a static measure id."""
    mid = StaticMeasureId(measure)
    if mid is StaticMeasureId.C2:
        return c2, c2_batch
    return c_re, c_re_batch


def relative_entropy(rho, sigma) -> float:
    """S(rho || sigma) in bits, computed in the eigenbasis of sigma.

    Returns ``inf`` when rho has weight above ``TOL.support_weight`` on an
    eigenvector of sigma whose eigenvalue is below ``TOL.support_kernel``.
    """
    r = as_matrix(rho)
    s = as_matrix(sigma)
    if r.shape != s.shape:
        raise DimensionError(f"relative_entropy: shapes {r.shape} and {s.shape} differ")
    ws, vs = np.linalg.eigh(0.5 * (s + dagger(s)))
    weights = np.real(np.einsum("ai,ab,bi->i", np.conj(vs), r, vs))
    kernel = ws < TOL.support_kernel
    if np.any(weights[kernel] > TOL.support_weight):
        return float("inf")
    cross = float(np.sum(weights[~kernel] * np.log2(ws[~kernel])))
    return -entropy(r) - cross
