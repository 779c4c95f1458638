"""Qubit and qudit channels in Kraus, Choi and Bloch-affine form."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    TOL,
    DimensionError,
    as_matrix,
    check_hermitian,
    dagger,
    hermitian_eig,
    partial_trace,
    spectral_norm,
)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class ChannelError(ValueError):
    """Invalid channel data (not CP, not TP, inconsistent Kraus set...)."""


@dataclass(frozen=True)
class KrausChannel:
    dim_in: int
    dim_out: int
    kraus: tuple[np.ndarray, ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.kraus:
            raise ChannelError("a channel needs at least one Kraus element")
        for k in self.kraus:
            if k.shape != (self.dim_out, self.dim_in):
                raise DimensionError(
                    f"Kraus element of shape {k.shape}, expected {(self.dim_out, self.dim_in)}"
                )

    @classmethod
    def from_kraus(cls, kraus, name: str | None = None) -> "KrausChannel":
        ks = tuple(as_matrix(k) for k in kraus)
        if not ks:
            raise ChannelError("a channel needs at least one Kraus element")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks):
            raise DimensionError("Kraus elements have different shapes")
        return cls(dim_in=shape[1], dim_out=shape[0], kraus=ks, name=name)

    @property
    def is_qubit(self) -> bool:
        return self.dim_in == 2 and self.dim_out == 2

    def __call__(self, rho):
        return apply(self, rho)


@dataclass(frozen=True)
class ChoiMatrix:
    """Unnormalized Choi matrix J = sum_ij |i><j| (x) E(|i><j|), input factor first."""

    dim_in: int
    dim_out: int
    matrix: np.ndarray


@dataclass(frozen=True)
class BlochAffine:
    """Qubit channel as r -> a + M r on Bloch vectors."""

    a: np.ndarray
    M: np.ndarray

    def __call__(self, r):
        return self.a + self.M @ np.asarray(r, dtype=float)


@dataclass(frozen=True)
class ValidationReport:
    is_cptp: bool
    is_unital: bool
    tp_residual: float
    unital_residual: float


def validate(kraus) -> ValidationReport:
    """Trace-preservation and unitality residuals of a Kraus set.

    Accepts a ``KrausChannel`` or a plain list of matrices (which must all
    share one shape). Residuals are spectral norms of ``sum K^dag K - I`` and
    ``sum K K^dag - I``; the flags threshold them at ``TOL.cptp``.
    """
    ks = kraus.kraus if isinstance(kraus, KrausChannel) else [as_matrix(k) for k in kraus]
    if not ks:
        raise ChannelError("empty Kraus set")
    shape = ks[0].shape
    if any(k.shape != shape for k in ks):
        raise DimensionError("Kraus elements have different shapes")
    d_out, d_in = shape
    tp = sum(dagger(k) @ k for k in ks) - np.eye(d_in)
    tp_res = spectral_norm(tp)
    if d_in == d_out:
        un_res = spectral_norm(sum(k @ dagger(k) for k in ks) - np.eye(d_out))
    else:
        un_res = float("inf")
    return ValidationReport(
        is_cptp=tp_res <= TOL.cptp,
        is_unital=tp_res <= TOL.cptp and un_res <= TOL.cptp,
        tp_residual=tp_res,
        unital_residual=un_res,
    )


def require_channel(ch: KrausChannel, tol: float = TOL.tp_input) -> ValidationReport:
    rep = validate(ch)
    if rep.tp_residual > tol:
        raise ChannelError(f"channel is not trace preserving: residual {rep.tp_residual:.3e} > {tol:.1e}")
    return rep


def require_qubit(ch: KrausChannel) -> None:
    if not ch.is_qubit:
        raise DimensionError(f"qubit channel required, got {ch.dim_in}->{ch.dim_out}")


def apply(ch: KrausChannel, rho) -> np.ndarray:
    m = as_matrix(rho)
    if m.shape != (ch.dim_in, ch.dim_in):
        raise DimensionError(f"state of shape {m.shape} for a channel with input dim {ch.dim_in}")
    return sum(k @ m @ dagger(k) for k in ch.kraus)


def apply_batch(ch: KrausChannel, rhos: np.ndarray) -> np.ndarray:
    """Apply to a stack of matrices of shape (N, d_in, d_in)."""
    out = 0
    for k in ch.kraus:
        out = out + np.einsum("ab,nbc,dc->nad", k, rhos, np.conj(k))
    return out


def apply_on_output_factor(ch: KrausChannel, rho, dim_ref: int) -> np.ndarray:
    """(id_R (x) ch) on a state of R (x) A, reference factor first."""
    eye = np.eye(dim_ref)
    return sum(np.kron(eye, k) @ rho @ dagger(np.kron(eye, k)) for k in ch.kraus)


def kraus_to_choi(ch: KrausChannel) -> ChoiMatrix:
    d_in, d_out = ch.dim_in, ch.dim_out
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in ch.kraus:
        # (I (x) K)|phi+> has components v[i*d_out + o] = K[o, i]
        v = k.T.reshape(-1)
        j += np.outer(v, np.conj(v))
    return ChoiMatrix(d_in, d_out, j)


def choi_to_kraus(j: ChoiMatrix, tol: float = TOL.psd) -> KrausChannel:
    """Kraus set from the eigendecomposition of a PSD Choi matrix.

    Eigenvalues below ``TOL.kraus_drop`` are discarded; a minimum eigenvalue
    below ``-tol`` means the map is not completely positive.
    """
    w, v = hermitian_eig(check_hermitian(j.matrix, tol=1e-8))
    if w[-1] < -tol:
        raise ChannelError(f"Choi matrix is not PSD: minimum eigenvalue {w[-1]:.3e}")
    ks = []
    for lam, vec in zip(w, v.T):
        if lam <= TOL.kraus_drop:
            continue
        ks.append(np.sqrt(lam) * vec.reshape(j.dim_in, j.dim_out).T)
    if not ks:
        ks.append(np.zeros((j.dim_out, j.dim_in), dtype=complex))
    return KrausChannel.from_kraus(ks)


def choi_distance(a: KrausChannel, b: KrausChannel) -> float:
    return float(np.linalg.norm(kraus_to_choi(a).matrix - kraus_to_choi(b).matrix))


def same_map(a: KrausChannel, b: KrausChannel, tol: float = TOL.channel_equal) -> bool:
    return a.dim_in == b.dim_in and a.dim_out == b.dim_out and choi_distance(a, b) <= tol


def bloch_vector(rho) -> np.ndarray:
    m = as_matrix(rho)
    return np.array([np.real(np.trace(p @ m)) for p in PAULIS])


def bloch_state(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 0.5 * (PAULI_I + r[0] * PAULI_X + r[1] * PAULI_Y + r[2] * PAULI_Z)


def bloch_states(rs: np.ndarray) -> np.ndarray:
    """Stack of qubit states for an (N, 3) array of Bloch vectors."""
    rs = np.asarray(rs, dtype=float)
    return 0.5 * (PAULI_I[None] + np.einsum("ni,iab->nab", rs, np.array(PAULIS)))


def bloch_affine(ch: KrausChannel) -> BlochAffine:
    require_qubit(ch)
    out_id = apply(ch, PAULI_I)
    a = np.array([0.5 * np.real(np.trace(s @ out_id)) for s in PAULIS])
    m = np.empty((3, 3))
    for j, sj in enumerate(PAULIS):
        out = apply(ch, sj)
        for i, si in enumerate(PAULIS):
            m[i, j] = 0.5 * np.real(np.trace(si @ out))
    return BlochAffine(a, m)


def unital_choi_from_bloch(t: np.ndarray) -> np.ndarray:
    """Choi matrix of the unital qubit map r -> T r."""
    j = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for k in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, k] = 1.0
            x = np.array([np.trace(p @ e) for p in PAULIS])
            y = t @ x
            out = 0.5 * (np.trace(e) * PAULI_I + sum(y[n] * PAULIS[n] for n in range(3)))
            j += np.kron(e, out)
    return j


def amplitude_damping(eta: float) -> KrausChannel:
    """Qubit amplitude damping with decay probability ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ChannelError(f"damping parameter must lie in [0, 1], got {eta}")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - eta)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(eta)], [0.0, 0.0]], dtype=complex)
    return KrausChannel.from_kraus([k0, k1], name=f"amplitude_damping({eta!r})")


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel.from_kraus([np.eye(dim)], name="identity")


def unitary_channel(u) -> KrausChannel:
    return mixed_unitary([1.0], [u])


def mixed_unitary(probs, unitaries) -> KrausChannel:
    p = np.asarray(probs, dtype=float)
    us = [as_matrix(u) for u in unitaries]
    if p.ndim != 1 or len(p) != len(us) or len(us) == 0:
        raise ChannelError("need one probability per unitary")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ChannelError(f"probabilities must be nonnegative and sum to 1, got {p}")
    for u in us:
        if u.shape[0] != u.shape[1]:
            raise DimensionError("unitaries must be square")
        dev = np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0])))
        if dev > TOL.unitary:
            raise ChannelError(f"matrix is not unitary (deviation {dev:.2e})")
    return KrausChannel.from_kraus([np.sqrt(pk) * u for pk, u in zip(p, us) if pk > 0] or [us[0]])


def depolarizing(dim: int = 2) -> KrausChannel:
    """Completely depolarizing channel rho -> Tr(rho) I/d."""
    ks = []
    for i in range(dim):
        for j in range(dim):
            k = np.zeros((dim, dim), dtype=complex)
            k[i, j] = 1.0 / np.sqrt(dim)
            ks.append(k)
    return KrausChannel.from_kraus(ks, name="depolarizing")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def _orthonormalize(g: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary (QR of a Ginibre matrix with phase-fixed diagonal)."""
    return _orthonormalize(_ginibre(_rng(seed), dim, dim))


def random_channel(dim_in: int, dim_out: int, rank: int, seed=None) -> KrausChannel:
    """Random CPTP map from a Haar-random Stinespring isometry."""
    if rank < 1:
        raise ChannelError("rank must be >= 1")
    rng = _rng(seed)
    if dim_out * rank < dim_in:
        raise ChannelError("dim_out * rank must be >= dim_in for an isometry")
    v = _orthonormalize(_ginibre(rng, dim_out * rank, dim_in))
    ks = [v[i * dim_out:(i + 1) * dim_out, :] for i in range(rank)]
    return KrausChannel.from_kraus(ks, name=f"random({dim_in},{dim_out},{rank})")


def random_mixed_unitary(dim: int, n_terms: int, seed=None) -> KrausChannel:
    rng = _rng(seed)
    p = rng.dirichlet(np.ones(n_terms))
    p = p / p.sum()
    return mixed_unitary(p, [random_unitary(dim, rng) for _ in range(n_terms)])


def random_density(dim: int, seed=None) -> np.ndarray:
    """Hilbert-Schmidt random state G G^dag / Tr(G G^dag)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    g = _ginibre(_rng(seed), dim, dim)
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_pure(dim: int, seed=None) -> np.ndarray:
    v = _ginibre(_rng(seed), dim, 1)[:, 0]
    v /= np.linalg.norm(v)
    return np.outer(v, np.conj(v))


def compose(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """outer o inner."""
    if outer.dim_in != inner.dim_out:
        raise DimensionError(f"cannot compose {outer.dim_in}-input after {inner.dim_out}-output")
    return KrausChannel.from_kraus([a @ b for a in outer.kraus for b in inner.kraus])


def tensor(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    return KrausChannel.from_kraus([np.kron(x, y) for x in a.kraus for y in b.kraus])


def mixture(channels, probs) -> KrausChannel:
    """Convex combination sum_k p_k Theta_k as a Kraus union with sqrt(p) weights."""
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ChannelError("mixture weights must be a probability vector")
    dims = {(c.dim_in, c.dim_out) for c in channels}
    if len(dims) != 1:
        raise DimensionError("mixture of channels with different dimensions")
    ks = [np.sqrt(pk) * k for pk, c in zip(p, channels) if pk > 0 for k in c.kraus]
    return KrausChannel.from_kraus(ks)


def is_density(rho, tol: float = TOL.density_eig) -> bool:
    try:
        m = check_hermitian(rho)
    except ValueError:
        return False
    if abs(np.trace(m).real - 1.0) > TOL.density_trace:
        return False
    return bool(np.linalg.eigvalsh(m)[0] >= -tol)


def majorizes(p, q, tol: float = 1e-9) -> bool:
    """True when spectrum ``p`` majorizes spectrum ``q``."""
    a = np.cumsum(np.sort(np.asarray(p, dtype=float))[::-1])
    b = np.cumsum(np.sort(np.asarray(q, dtype=float))[::-1])
    return bool(np.all(b <= a + tol))


def choi_partial_traces(j: ChoiMatrix) -> tuple[np.ndarray, np.ndarray]:
    """(Tr_out J, Tr_in J): identity for TP and for unital maps respectively."""
    return (
        partial_trace(j.matrix, j.dim_in, j.dim_out, "B"),
        partial_trace(j.matrix, j.dim_in, j.dim_out, "A"),
    )
