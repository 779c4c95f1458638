"""Monte-Carlo simulation of binary channel discrimination.

A referee picks channel 1 with probability lambda, the channel acts on the
system half of a (possibly entangled) probe and the Helstrom measurement
guesses which channel was used. The success rate is compared with
1/2 + ||ch1 - ch2||_diamond / 4.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence``;
shots are split into fixed-size chunks, each with its own spawned child
seed, so results depend only on (seed, shots).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import KrausChannel, kraus_to_choi, require_channel
from .numerics import DimensionError, hermitian_eig, psd_sqrt, trace_norm
from .sdp import solve_diamond_norm

CHUNK = 1 << 16


@dataclass
class DiscriminationSetup:
    prior_lambda: float
    input_state: np.ndarray  # on R (x) A, reference first, or on A alone
    povm_effect: np.ndarray
    predicted_success: float
    output_states: tuple = ()
    dim_ref: int = 1
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrialStats:
    shots: int
    successes: int

    @property
    def empirical(self) -> float:
        return self.successes / self.shots

    @property
    def stderr(self) -> float:
        p = self.empirical
        return float(np.sqrt(p * (1.0 - p) / self.shots))


def helstrom(rho1, rho2, lam: float = 0.5) -> tuple[np.ndarray, float]:
    """Helstrom effect for guessing rho1 and the optimal success probability."""
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if rho1.shape != rho2.shape:
        raise DimensionError(f"state shapes differ: {rho1.shape} vs {rho2.shape}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("prior must lie in [0, 1]")
    gamma = lam * rho1 - (1.0 - lam) * rho2
    w, v = hermitian_eig(0.5 * (gamma + gamma.conj().T))
    keep = v[:, w >= 0]
    effect = keep @ keep.conj().T
    return effect, 0.5 * (1.0 + float(np.sum(np.abs(w))))


def _outputs(ch1, ch2, sigma):
    d_out = ch1.dim_out
    s = np.kron(psd_sqrt(sigma), np.eye(d_out))
    return tuple(s @ kraus_to_choi(ch).matrix @ s for ch in (ch1, ch2))


def _check_pair(ch1, ch2):
    require_channel(ch1)
    require_channel(ch2)
    if (ch1.dim_in, ch1.dim_out) != (ch2.dim_in, ch2.dim_out):
        raise DimensionError("channels act on different spaces")


def setup_from_reference(ch1: KrausChannel, ch2: KrausChannel, sigma, lam: float = 0.5, diagnostics=None) -> DiscriminationSetup:
    """Setup with probe (sqrt(sigma) (x) I)|phi+>, whose reference marginal is ``sigma``."""
    _check_pair(ch1, ch2)
    d = ch1.dim_in
    s = psd_sqrt(np.asarray(sigma, dtype=complex))
    psi = (s @ np.eye(d)).reshape(-1)  # sum_i sqrt(sigma)|i> (x) |i>
    probe = np.outer(psi, psi.conj())
    rho1, rho2 = _outputs(ch1, ch2, sigma)
    effect, p = helstrom(rho1, rho2, lam)
    return DiscriminationSetup(lam, probe, effect, p, (rho1, rho2), d, dict(diagnostics or {}))


def optimal_setup(ch1: KrausChannel, ch2: KrausChannel, gap_tol: float = 1e-9) -> DiscriminationSetup:
    """Entangled probe read off the dual optimum of the diamond-norm program for ch1 - ch2."""
    _check_pair(ch1, ch2)
    d = ch1.dim_in
    j = kraus_to_choi(ch1).matrix - kraus_to_choi(ch2).matrix
    diag = {}
    try:
        res = solve_diamond_norm(j, d, ch1.dim_out, gap_tol=gap_tol)
        sigma = res.input_state
        diag.update(diamond_norm=res.value, gap=res.solution.gap, status=res.solution.status)
    except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover - defensive
        sigma = None
        diag["solver_error"] = str(exc)
    if sigma is None:
        sigma = np.eye(d) / d
        diag["warning"] = "dual optimum unavailable; using the maximally entangled probe"
    return setup_from_reference(ch1, ch2, sigma, 0.5, diag)


def product_input_setup(ch1: KrausChannel, ch2: KrausChannel, state, lam: float = 0.5) -> DiscriminationSetup:
    """Probe state (x) I/|R|: the reference is maximally mixed and uncorrelated."""
    _check_pair(ch1, ch2)
    state = np.asarray(state, dtype=complex)
    d = ch1.dim_in
    rho1, rho2 = (ch(state) for ch in (ch1, ch2))
    eye = np.eye(d) / d
    rho1, rho2 = np.kron(eye, rho1), np.kron(eye, rho2)
    effect, p = helstrom(rho1, rho2, lam)
    return DiscriminationSetup(lam, np.kron(eye, state), effect, p, (rho1, rho2), d, {})


def _success_probs(setup: DiscriminationSetup) -> tuple[float, float]:
    """Born-rule probabilities of a correct guess given each channel."""
    rho1, rho2 = setup.output_states
    e = setup.povm_effect
    p1 = float(np.real(np.trace(e @ rho1)))
    p2 = 1.0 - float(np.real(np.trace(e @ rho2)))
    return min(max(p1, 0.0), 1.0), min(max(p2, 0.0), 1.0)


def simulate(ch1: KrausChannel, ch2: KrausChannel, setup: DiscriminationSetup, shots: int, seed: int = 0) -> TrialStats:
    """Count correct guesses over ``shots`` independent rounds."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not setup.output_states:
        setup = setup_from_reference(ch1, ch2, np.eye(ch1.dim_in) / ch1.dim_in, setup.prior_lambda)
    p1, p2 = _success_probs(setup)
    n_chunks = -(-shots // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    successes = 0
    for k, child in enumerate(children):
        n = min(CHUNK, shots - k * CHUNK)
        rng = np.random.Generator(np.random.PCG64(child))
        first = rng.random(n) < setup.prior_lambda
        u = rng.random(n)
        successes += int(np.count_nonzero(np.where(first, u < p1, u < p2)))
    return TrialStats(shots, successes)


def predicted_diamond_success(ch1: KrausChannel, ch2: KrausChannel) -> float:
    """1/2 + ||(ch1 - ch2) (x) id||_1 / 4 at the dual-optimal probe."""
    s = optimal_setup(ch1, ch2)
    return 0.5 + 0.25 * trace_norm(s.output_states[0] - s.output_states[1])
