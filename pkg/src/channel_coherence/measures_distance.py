"""Distance-based measures: diamond and induced-trace distance to the unital
set, and the relative-entropy channel divergence to it.

The qubit unital set is searched through Bloch matrices T = R1 diag(lam) R2
with lam in the Pauli tetrahedron |lam1 +- lam2| <= |1 +- lam3|.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy.spatial.transform import Rotation

from .channels import (
    KrausChannel,
    bloch_affine,
    bloch_state,
    bloch_vector,
    choi_to_kraus,
    ChoiMatrix,
    kraus_to_choi,
    require_channel,
    require_qubit,
    unital_choi_from_bloch,
)
from .measures_analytic import MeasureReport, OptimizerConfig
from .numerics import TOL, DimensionError, psd_sqrt
from .sdp import solve_diamond_unital
from .static_coherence import relative_entropy

# Pauli weights (p0, px, py, pz) -> tetrahedron point lam
_PAULI_TO_LAMBDA = np.array(
    [
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
)


class SolverError(RuntimeError):
    """The SDP did not reach the requested gap; carries the best bounds."""

    def __init__(self, message, primal=None, dual=None):
        super().__init__(message)
        self.primal = primal
        self.dual = dual


@dataclass(frozen=True)
class UnitalQubitParam:
    r1: np.ndarray  # ZYZ angles
    lambdas: np.ndarray
    r2: np.ndarray

    @classmethod
    def from_vector(cls, x) -> "UnitalQubitParam":
        x = np.asarray(x, dtype=float)
        w = np.exp(x[6:10] - np.max(x[6:10]))
        return cls(x[0:3], _PAULI_TO_LAMBDA @ (w / w.sum()), x[3:6])

    def is_feasible(self, tol: float = 1e-12) -> bool:
        l1, l2, l3 = self.lambdas
        return abs(l1 + l2) <= 1 + l3 + tol and abs(l1 - l2) <= 1 - l3 + tol

    def matrix(self) -> np.ndarray:
        r1 = Rotation.from_euler("ZYZ", self.r1).as_matrix()
        r2 = Rotation.from_euler("ZYZ", self.r2).as_matrix()
        return r1 @ np.diag(self.lambdas) @ r2


def tetrahedron_feasible(lam, tol: float = 1e-12) -> bool:
    l1, l2, l3 = lam
    return abs(l1 + l2) <= 1 + l3 + tol and abs(l1 - l2) <= 1 - l3 + tol


def _vector_near(t: np.ndarray) -> np.ndarray:
    """Parameter vector whose Bloch matrix approximates ``t`` (shrunk into the tetrahedron)."""
    u, s, vt = np.linalg.svd(t)
    lam = s.copy()
    if np.linalg.det(u) < 0:
        u[:, 2] *= -1
        lam[2] *= -1
    if np.linalg.det(vt) < 0:
        vt[2, :] *= -1
        lam[2] *= -1
    for _ in range(200):
        if tetrahedron_feasible(lam, 1e-12):
            break
        lam *= 0.98
    # lam = P p with sum p = 1
    a = np.vstack([_PAULI_TO_LAMBDA, np.ones(4)])
    p = np.linalg.solve(a, np.append(lam, 1.0))
    p = np.clip(p, 1e-15, None)
    with warnings.catch_warnings():
        # gimbal lock only loses a redundant angle
        warnings.simplefilter("ignore", UserWarning)
        e1 = Rotation.from_matrix(u).as_euler("ZYZ")
        e2 = Rotation.from_matrix(vt).as_euler("ZYZ")
    return np.concatenate([e1, e2, np.log(p / p.sum())])


def unital_channel_from_bloch(t: np.ndarray) -> KrausChannel:
    return choi_to_kraus(ChoiMatrix(2, 2, unital_choi_from_bloch(t)), tol=1e-7)


def _secular_root(c2, w, w0, tol=1e-15):
    """mu > w0 with sum c2 / (mu - w)**2 = 1, by safeguarded Newton on 1/|x(mu)|."""
    lo = w0
    hi = w0 + sum(c2) ** 0.5 + 1.0
    mu = w0 + max(c2[0] ** 0.5, 1e-300)  # |x| >= 1 here, left of the root
    for _ in range(100):
        d = [mu - wi for wi in w]
        n2 = sum(ci / di**2 for ci, di in zip(c2, d))
        n = n2**0.5
        if n > 1.0:
            lo = mu
        else:
            hi = mu
        dn2 = -2.0 * sum(ci / di**3 for ci, di in zip(c2, d))
        # phi = 1/n - 1 is concave and increasing in mu
        phi = 1.0 / n - 1.0
        dphi = -0.5 * dn2 / n2**1.5
        step = mu - phi / dphi
        if not lo < step < hi:
            step = 0.5 * (lo + hi)
        if abs(step - mu) <= tol * max(abs(mu), 1.0):
            return step
        mu = step
    return mu


def max_affine_norm(a: np.ndarray, d: np.ndarray) -> tuple[float, np.ndarray]:
    """max over |r| <= 1 of |a + D r| and a maximizer.

    The maximum of a convex function sits on the sphere; stationarity gives
    (mu I - D^T D) r = D^T a with mu >= lambda_max(D^T D), which is solved in
    the eigenbasis of D^T D, including the degenerate (hard) case.
    """
    h = d.T @ d
    b = d.T @ a
    w, v = np.linalg.eigh(h)
    w, v = w[::-1], v[:, ::-1]
    c = v.T @ b
    scale = max(float(w[0]), float(np.linalg.norm(b)), 1e-300)
    top = np.abs(w - w[0]) <= 1e-12 * scale

    candidates = [np.eye(3), -np.eye(3)]
    if np.linalg.norm(c[top]) > 1e-14 * scale:
        mu = _secular_root([float(x) ** 2 for x in c], [float(x) for x in w], float(w[0]))
        r = v @ (c / (mu - w))
        candidates.append((r / np.linalg.norm(r))[None, :])
    rest = np.where(top, 0.0, c / np.where(top, 1.0, w[0] - w))
    nrm = np.linalg.norm(rest)
    if nrm <= 1.0:
        # hard case: mu = lambda_max, fill the remaining norm along the top eigenspace
        fill = np.sqrt(max(1.0 - nrm**2, 0.0))
        base = v @ rest
        candidates.append(np.array([base + fill * v[:, 0], base - fill * v[:, 0]]))
    r = np.vstack(candidates)
    vals = np.sqrt(np.sum((a + r @ d.T) ** 2, axis=1))
    i = int(np.argmax(vals))
    return float(vals[i]), r[i]


def _unital_shortcut(ch: KrausChannel, method: str) -> MeasureReport | None:
    rep = require_channel(ch)
    if rep.unital_residual <= TOL.cptp and rep.tp_residual <= TOL.cptp:
        return MeasureReport(
            value=0.0,
            method=method,
            witness_channel=ch,
            diagnostics={"unital_residual": rep.unital_residual, "shortcut": "channel is unital"},
        )
    return None


def t_diamond(ch: KrausChannel, gap_tol: float = 1e-8, max_iter: int = 200, trace_out: str = "output", require_gap: float = 1e-7) -> MeasureReport:
    """Diamond-norm distance to the unital channels, solved as an SDP."""
    if ch.dim_in != ch.dim_out:
        raise DimensionError("t_diamond needs dim_in == dim_out")
    rep = require_channel(ch)
    res = solve_diamond_unital(kraus_to_choi(ch), gap_tol=gap_tol, max_iter=max_iter, trace_out=trace_out)
    sol = res.solution
    if sol.status != "optimal" and abs(sol.gap) > require_gap:
        raise SolverError(
            f"SDP stopped with status {sol.status}, gap {sol.gap:.3e}",
            primal=sol.primal_objective,
            dual=sol.dual_objective,
        )
    try:
        witness = choi_to_kraus(ChoiMatrix(ch.dim_in, ch.dim_out, res.witness_choi), tol=1e-6)
    except ValueError:
        witness = None
    return MeasureReport(
        value=max(sol.primal_objective, 0.0),
        method="sdp",
        witness_state=res.input_state,
        witness_channel=witness,
        diagnostics={
            "gap": sol.gap,
            "primal_objective": sol.primal_objective,
            "dual_objective": sol.dual_objective,
            "feasibility_residual": sol.feasibility_residual,
            "iterations": sol.iterations,
            "status": sol.status,
            "tp_residual": rep.tp_residual,
            "witness_choi": res.witness_choi,
            "dual_operator": res.dual_operator,
            "trace_out": trace_out,
        },
    )


def _random_vectors(rng, n):
    x = np.empty((n, 10))
    x[:, :6] = rng.uniform(-np.pi, np.pi, size=(n, 6))
    x[:, 6:] = rng.normal(scale=2.0, size=(n, 4))
    return x


def _nelder_mead(f, x0, cfg: OptimizerConfig, budget=None):
    n = budget or cfg.max_iterations
    return scipy.optimize.minimize(
        f,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": n,
            "maxfev": n,
            "xatol": cfg.step_tolerance,
            "fatol": cfg.value_tolerance,
            "adaptive": True,
        },
    )


def t_one(ch: KrausChannel, cfg: OptimizerConfig = OptimizerConfig(), free_candidates=None, use_diamond_witness: bool = True) -> MeasureReport:
    """Induced-trace-norm distance of a qubit channel to the unital channels.

    Inner maximization over inputs is solved exactly; the outer minimization
    over unital maps is a multistart Nelder-Mead search. Extra unital Bloch
    matrices in ``free_candidates`` (and, by default, the diamond-norm
    witness) are evaluated as well, so the result never exceeds the diamond
    distance.
    """
    require_qubit(ch)
    short = _unital_shortcut(ch, "numeric")
    if short is not None:
        return short
    ba = bloch_affine(ch)
    a, m = ba.a, ba.M

    def objective_t(t):
        return max_affine_norm(a, m - t)[0]

    def objective(x):
        return objective_t(UnitalQubitParam.from_vector(x).matrix())

    candidates: list[tuple[float, np.ndarray, str]] = []
    extra = list(free_candidates or [])
    diamond_value = None
    if use_diamond_witness:
        dr = t_diamond(ch)
        diamond_value = dr.value
        if dr.witness_channel is not None:
            extra.append(bloch_affine(dr.witness_channel).M)
    for t in extra:
        candidates.append((objective_t(t), np.asarray(t), "candidate"))

    rng = np.random.default_rng(cfg.seed)
    starts = [_vector_near(m), _vector_near(np.zeros((3, 3)))]
    starts += [_vector_near(t) for t in extra]
    starts += list(_random_vectors(rng, max(cfg.multistart_count - len(starts), 0)))
    starts = starts[: max(cfg.multistart_count, 2 + len(extra))]
    finals, runs = [], []
    for x0 in starts:
        res = _nelder_mead(objective, x0, cfg, budget=cfg.max_iterations // 2)
        finals.append(float(res.fun))
        runs.append(res)
    # polish the best start from a fresh simplex
    best_run = min(runs, key=lambda r: r.fun)
    polished = _nelder_mead(objective, best_run.x, cfg)
    for res in runs + [polished]:
        candidates.append((float(res.fun), UnitalQubitParam.from_vector(res.x).matrix(), "search"))
    value, t_best, source = min(candidates, key=lambda c: c[0])
    _, r_best = max_affine_norm(a, m - t_best)
    return MeasureReport(
        value=value,
        method="numeric",
        witness_state=bloch_state(r_best),
        witness_channel=unital_channel_from_bloch(t_best),
        diagnostics={
            "starts": len(finals),
            "spread": float(max(finals) - min(finals)),
            "search_best": float(min(finals + [polished.fun])),
            "source": source,
            "diamond_value": diamond_value,
            "free_bloch_matrix": t_best,
        },
    )


# ----------------------------------------------------------------------------
# relative-entropy divergence


def _output_pair(j_n: np.ndarray, j_m: np.ndarray, sigma: np.ndarray, d_out: int):
    s = np.kron(psd_sqrt(sigma), np.eye(d_out))
    return s @ j_n @ s, s @ j_m @ s


def _sigma_from_params(x, d):
    from .measures_analytic import _qudit_from_params

    if d == 2:
        return bloch_state(np.asarray(x) / max(1.0, float(np.linalg.norm(x))))
    return _qudit_from_params(x, d)


def _divergence_search(j_n, j_m, d_in, d_out, cfg: OptimizerConfig, extra_sigmas=()):
    """Multistart maximization of S(N(phi) || M(phi)) over reference marginals."""
    from .measures_analytic import _qudit_params, local_maximize

    rng = np.random.default_rng(cfg.seed)
    if d_in == 2:
        pts = rng.normal(size=(cfg.samples // 4, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        pts *= rng.uniform(size=(len(pts), 1)) ** (1 / 3)
        params = [np.zeros(3)] + list(pts) + [bloch_vector(s) for s in extra_sigmas]
    else:
        params = []
        for _ in range(cfg.samples // 4):
            g = rng.normal(size=(d_in, d_in)) + 1j * rng.normal(size=(d_in, d_in))
            rho = g @ g.conj().T
            params.append(_qudit_params(rho / np.trace(rho).real, d_in, rng))

    def div(x):
        rho_n, rho_m = _output_pair(j_n, j_m, _sigma_from_params(x, d_in), d_out)
        return relative_entropy(rho_n, rho_m)

    def capped(x):
        v = div(x)
        return v if np.isfinite(v) else 1e6

    vals = np.array([div(x) for x in params])
    if np.any(np.isinf(vals)):
        i = int(np.argmax(np.isinf(vals)))
        return float("inf"), _sigma_from_params(params[i], d_in), [float("inf")]
    order = np.argsort(-vals, kind="stable")[: cfg.multistart_count]
    finals = []
    best_v, best_x = -np.inf, None
    for i in order:
        x, v = local_maximize(capped, params[i], d_in == 2, cfg)
        if v >= 1e6 or np.isinf(div(x)):
            return float("inf"), _sigma_from_params(x, d_in), [float("inf")]
        if vals[i] > v:
            v, x = float(vals[i]), params[i]
        finals.append(v)
        if v > best_v:
            best_v, best_x = v, x
    return max(best_v, 0.0), _sigma_from_params(best_x, d_in), finals


def channel_divergence(n: KrausChannel, m: KrausChannel, cfg: OptimizerConfig = OptimizerConfig()) -> float:
    """max over pure phi_RA of S((N (x) id)(phi) || (M (x) id)(phi)), in bits.

    Only the reference marginal of phi matters, so the search runs over
    density matrices of the input dimension. Returns ``inf`` on a support
    violation. The value is a lower bound of the true maximum.
    """
    return channel_divergence_report(n, m, cfg)[0]


def channel_divergence_report(n: KrausChannel, m: KrausChannel, cfg: OptimizerConfig = OptimizerConfig(), extra_sigmas=()):
    if (n.dim_in, n.dim_out) != (m.dim_in, m.dim_out):
        raise DimensionError("channels act on different spaces")
    j_n = kraus_to_choi(n).matrix
    j_m = kraus_to_choi(m).matrix
    return _divergence_search(j_n, j_m, n.dim_in, n.dim_out, cfg, extra_sigmas)


def t_re(ch: KrausChannel, cfg: OptimizerConfig = OptimizerConfig(), max_rounds: int = 6) -> MeasureReport:
    """Relative-entropy distance (channel divergence) to the unital qubit channels.

    Alternating best response: the unital map is fitted against a growing set
    of probe inputs, then the worst input for the current map is added.
    Heuristic for both levels; the value is D(ch || F) for the best F found.
    """
    require_qubit(ch)
    short = _unital_shortcut(ch, "numeric")
    if short is not None:
        return short
    j_n = kraus_to_choi(ch).matrix
    ba = bloch_affine(ch)
    probes = [np.eye(2) / 2]
    inner_cfg = OptimizerConfig(
        multistart_count=max(cfg.multistart_count, 8), max_iterations=cfg.max_iterations,
        step_tolerance=cfg.step_tolerance, value_tolerance=cfg.value_tolerance, seed=cfg.seed, samples=400,
    )

    def probe_value(t):
        j_m = unital_choi_from_bloch(t)
        worst = 0.0
        for sigma in probes:
            rho_n, rho_m = _output_pair(j_n, j_m, sigma, 2)
            v = relative_entropy(rho_n, rho_m)
            if not np.isfinite(v):
                return 1e6
            worst = max(worst, v)
        return worst

    rng = np.random.default_rng(cfg.seed)
    x_best = _vector_near(0.5 * ba.M)
    history = []
    best = (np.inf, None, None, None)
    outer_cfg = OptimizerConfig(
        multistart_count=cfg.multistart_count, max_iterations=min(cfg.max_iterations, 600),
        step_tolerance=1e-8, value_tolerance=1e-10, seed=cfg.seed,
    )
    for rnd in range(max_rounds):
        starts = [x_best, _vector_near(ba.M), _vector_near(np.zeros((3, 3)))] + list(_random_vectors(rng, 2))
        fits = [_nelder_mead(lambda x: probe_value(UnitalQubitParam.from_vector(x).matrix()), x0, outer_cfg) for x0 in starts]
        fit = min(fits, key=lambda r: r.fun)
        x_best = fit.x
        t = UnitalQubitParam.from_vector(fit.x).matrix()
        j_m = unital_choi_from_bloch(t)
        value, sigma, finals = _divergence_search(j_n, j_m, 2, 2, inner_cfg)
        history.append({"round": rnd, "probe_max": float(fit.fun), "divergence": value})
        if value < best[0]:
            best = (value, t, sigma, finals)
        probes.append(sigma)
        if value - float(fit.fun) < 1e-4:
            break
    value, t, sigma, finals = best
    finite = [f for f in finals if np.isfinite(f)]
    converged = len(finite) >= 8 and (max(finite) - min(finite) <= 1e-4 if finite else False)
    return MeasureReport(
        value=float(value),
        method="numeric",
        witness_state=sigma,
        witness_channel=unital_channel_from_bloch(t),
        diagnostics={
            "rounds": history,
            "spread": float(max(finite) - min(finite)) if finite else float("nan"),
            "inner_agreeing_starts": int(sum(1 for f in finite if max(finite) - f <= 1e-4)) if finite else 0,
            "certified": converged,
            "free_bloch_matrix": t,
        },
    )
