"""Measures built on the maximal increase of static coherence.

``t2_closed_form`` evaluates the l2 measure of a qubit channel through the
singular value decomposition of its Bloch matrix; ``delta_c_max`` is the
generic numeric maximizer of C(Theta(rho)) - C(rho) over states.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .channels import (
    KrausChannel,
    apply,
    apply_batch,
    bloch_affine,
    bloch_state,
    bloch_states,
    require_channel,
    require_qubit,
)
from .numerics import TOL, DimensionError
from .static_coherence import StaticMeasureId, static_measure


@dataclass(frozen=True)
class OptimizerConfig:
    multistart_count: int = 8
    max_iterations: int = 2000
    step_tolerance: float = 1e-10
    value_tolerance: float = 1e-12
    seed: int = 0
    samples: int = 2000

    def __post_init__(self):
        if self.multistart_count < 1 or self.max_iterations < 1 or self.samples < 1:
            raise ValueError("optimizer counts must be >= 1")
        if self.step_tolerance <= 0 or self.value_tolerance <= 0:
            raise ValueError("optimizer tolerances must be > 0")


@dataclass
class MeasureReport:
    value: float
    method: str
    witness_state: np.ndarray | None = None
    witness_channel: KrausChannel | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BlochDecomposition:
    """Bloch map r -> a + M r with M = U diag(xi) V^T, in the frame where it is diagonal."""

    a: np.ndarray
    M: np.ndarray
    U: np.ndarray
    V: np.ndarray
    xi: np.ndarray
    a_tilde: np.ndarray
    r_tilde_star: np.ndarray


def _increase_objective(a, xi, a_tilde, r):
    """2 x [Tr Theta(rho)^2 - Tr rho^2] in the rotated frame."""
    return float(a @ a + 2.0 * np.sum(xi * a_tilde * r) + np.sum((xi**2 - 1.0) * r**2))


def _stationary_interior(xi, a_tilde, guard):
    if np.any(xi > 1.0 - guard):
        return None
    r = xi * a_tilde / (1.0 - xi**2)
    return r if np.linalg.norm(r) <= 1.0 + 1e-12 else None


def _boundary_by_multiplier(xi, a_tilde):
    """Maximizer on the unit sphere: r_i = g_i / (h_i + mu), mu >= 0 with |r| = 1."""
    g = xi * a_tilde
    h = 1.0 - xi**2
    if np.linalg.norm(g) < 1e-300:
        return None

    def norm_minus_one(mu):
        return np.linalg.norm(g / (h + mu)) - 1.0

    lo = max(-float(np.min(h)), 0.0)
    lo = lo + 1e-300 if norm_minus_one(lo + 1e-15) > 0 else lo
    hi = max(1.0, lo + 1.0)
    while norm_minus_one(hi) > 0:
        hi *= 2.0
    if norm_minus_one(lo + 1e-15) <= 0:
        return None
    mu = scipy.optimize.brentq(norm_minus_one, lo + 1e-15, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    r = g / (h + mu)
    return r / max(np.linalg.norm(r), 1.0)


def _projected_gradient(xi, a_tilde, a, starts: int, rng, iters: int = 500):
    """Multistart projected-gradient ascent of the (concave) objective on the ball."""
    g = xi * a_tilde
    h = 1.0 - xi**2
    step = 1.0 / max(float(np.max(h)), 1e-3)
    candidates = [np.zeros(3)]
    pts = rng.normal(size=(starts - 1, 3))
    pts *= (rng.uniform(size=(starts - 1, 1)) ** (1 / 3)) / np.linalg.norm(pts, axis=1, keepdims=True)
    candidates.extend(pts)
    best_r, best_v = None, -np.inf
    for r in candidates:
        for _ in range(iters):
            r_new = r + step * (g - h * r)
            nrm = np.linalg.norm(r_new)
            if nrm > 1.0:
                r_new = r_new / nrm
            if np.max(np.abs(r_new - r)) < 1e-14:
                r = r_new
                break
            r = r_new
        v = _increase_objective(a, xi, a_tilde, r)
        if v > best_v:
            best_r, best_v = r, v
    return best_r, best_v


def bloch_decomposition(ch: KrausChannel) -> tuple[BlochDecomposition, str, dict]:
    ba = bloch_affine(ch)
    u, xi, vt = np.linalg.svd(ba.M)
    v = vt.T
    a_tilde = u.T @ ba.a
    diag: dict = {}
    r = _stationary_interior(xi, a_tilde, TOL.singular_guard)
    if r is not None:
        method = "closed_form"
    else:
        method = "boundary"
        r_pg, v_pg = _projected_gradient(xi, a_tilde, ba.a, 32, np.random.default_rng(0))
        r_mu = _boundary_by_multiplier(xi, a_tilde)
        r = r_pg
        if r_mu is not None and _increase_objective(ba.a, xi, a_tilde, r_mu) >= v_pg:
            r = r_mu
        diag["projected_gradient_value"] = 0.5 * v_pg
    dec = BlochDecomposition(ba.a, ba.M, u, v, xi, a_tilde, r)
    return dec, method, diag


def t2_closed_form(ch: KrausChannel) -> MeasureReport:
    """Maximal purity increase of a qubit channel, clamped at zero.

    Interior case: sum_i xi_i^2 a~_i^2 / (2 (1 - xi_i^2)) + |a|^2 / 2 at the
    stationary Bloch vector r~_i = xi_i a~_i / (1 - xi_i^2). When that point
    leaves the unit ball (or some xi_i is within ``TOL.singular_guard`` of 1)
    the maximum sits on the sphere and is found numerically.
    """
    require_qubit(ch)
    rep = require_channel(ch)
    dec, method, diag = bloch_decomposition(ch)
    if method == "closed_form":
        xi, at = dec.xi, dec.a_tilde
        raw = float(np.sum(xi**2 * at**2 / (2.0 * (1.0 - xi**2))) + 0.5 * dec.a @ dec.a)
    else:
        raw = 0.5 * _increase_objective(dec.a, dec.xi, dec.a_tilde, dec.r_tilde_star)
    r_state = dec.V @ dec.r_tilde_star
    diag.update({"raw_value": raw, "xi": dec.xi.tolist(), "tp_residual": rep.tp_residual, "decomposition": dec})
    return MeasureReport(
        value=max(raw, 0.0),
        method=method,
        witness_state=bloch_state(r_state),
        diagnostics=diag,
    )


# ----------------------------------------------------------------------------
# numeric maximization over states


def _sphere_points(rng, n):
    p = rng.normal(size=(n, 3))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


_BALL = ({"type": "ineq", "fun": lambda r: 1.0 - r @ r, "jac": lambda r: -2.0 * r},)


def local_maximize(objective, x0, qubit: bool, cfg: OptimizerConfig):
    """Maximize ``objective`` from ``x0``; qubits use Cartesian Bloch vectors on the ball."""
    neg = lambda x: -objective(x)
    if qubit:
        res = scipy.optimize.minimize(
            neg, x0, method="SLSQP", constraints=_BALL, bounds=[(-1.0, 1.0)] * 3,
            options={"maxiter": cfg.max_iterations, "ftol": cfg.value_tolerance},
        )
        x = res.x / max(1.0, float(np.linalg.norm(res.x)))
    else:
        res = scipy.optimize.minimize(
            neg, x0, method="L-BFGS-B",
            options={"maxiter": cfg.max_iterations, "ftol": cfg.value_tolerance, "gtol": cfg.step_tolerance},
        )
        x = res.x
    return x, objective(x)


def _herm_from_params(x, d):
    h = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    n_off = len(iu[0])
    h[iu] = x[:n_off] + 1j * x[n_off:2 * n_off]
    h = h + h.conj().T
    h[np.diag_indices(d)] = x[2 * n_off:2 * n_off + d]
    return h


def _qudit_from_params(x, d):
    n_h = d * d
    u = scipy.linalg.expm(1j * _herm_from_params(x[:n_h], d))
    w = x[n_h:]
    p = np.exp(w - np.max(w))
    p /= p.sum()
    return (u * p) @ u.conj().T


def _qudit_params(rho, d, rng):
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 1e-12, None)
    h = -1j * scipy.linalg.logm(v)
    h = 0.5 * (h + h.conj().T)
    iu = np.triu_indices(d, 1)
    x = np.concatenate([h[iu].real, h[iu].imag, np.diag(h).real, np.log(w)])
    return x


def delta_c_max(ch: KrausChannel, measure: StaticMeasureId | str, cfg: OptimizerConfig = OptimizerConfig()) -> MeasureReport:
    """max{ C(Theta(rho)) - C(rho), 0 } by sampling plus local refinement.

    The value is the best increase found, hence a lower bound of the true
    maximum. Deterministic for a given ``cfg.seed``.
    """
    mid = StaticMeasureId(measure)
    rep = require_channel(ch)
    if ch.dim_in != ch.dim_out:
        raise DimensionError("the static increase needs dim_in == dim_out")
    single, batch = static_measure(mid)
    d = ch.dim_in
    rng = np.random.default_rng(cfg.seed)

    if d == 2:
        rs = np.concatenate(
            [
                np.zeros((1, 3)),
                _sphere_points(rng, cfg.samples // 2),
                _sphere_points(rng, cfg.samples - cfg.samples // 2) * rng.uniform(size=(cfg.samples - cfg.samples // 2, 1)) ** (1 / 3),
            ]
        )
        rhos = bloch_states(rs)
        to_state = bloch_state
        start_params = lambda i: rs[i]
    else:
        g = rng.normal(size=(cfg.samples, d, d)) + 1j * rng.normal(size=(cfg.samples, d, d))
        rhos = g @ np.conj(np.swapaxes(g, 1, 2))
        rhos /= np.trace(rhos, axis1=1, axis2=2).real[:, None, None]
        rhos = np.concatenate([np.eye(d)[None] / d, rhos])
        to_state = lambda x: _qudit_from_params(x, d)
        start_params = lambda i: _qudit_params(rhos[i], d, rng)

    values = batch(apply_batch(ch, rhos)) - batch(rhos)
    order = np.argsort(-values, kind="stable")[: cfg.multistart_count]

    def gain(x):
        rho = to_state(x)
        return single(apply(ch, rho)) - single(rho)

    finals = []
    best_x, best_v = None, -np.inf
    for idx in order:
        x0 = start_params(idx)
        x_final, v = local_maximize(gain, x0, d == 2, cfg)
        if values[idx] > v:
            v, x_final = float(values[idx]), x0
        finals.append(v)
        if v > best_v:
            best_v, best_x = v, x_final
    witness = to_state(best_x)
    return MeasureReport(
        value=max(best_v, 0.0),
        method="numeric",
        witness_state=witness,
        diagnostics={
            "raw_value": best_v,
            "starts": len(finals),
            "spread": float(max(finals) - min(finals)),
            "sampled_max": float(values.max()),
            "tp_residual": rep.tp_residual,
        },
    )
