"""Primal-dual interior-point method for small dense SDPs.

Complex Hermitian blocks are embedded as real symmetric blocks
``[[Re X, -Im X], [Im X, Re X]]``; a coefficient ``A`` becomes ``embed(A)/2``
so inner products are preserved. Search directions use Nesterov-Todd scaling
with a Mehrotra predictor-corrector step; the Schur complement is formed
densely.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg

from .problem import SdpProblem, SdpSolution, verify

log = logging.getLogger(__name__)

STEP_FRACTION = 0.98
DIVERGENCE = 1e8


def embed(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed(y: np.ndarray) -> np.ndarray:
    n = y.shape[0] // 2
    a = 0.5 * (y[:n, :n] + y[n:, n:])
    b = 0.5 * (y[n:, :n] - y[:n, n:])
    x = a + 1j * b
    return 0.5 * (x + x.conj().T)


class _Cone:
    """Real symmetric cone block with its slice of the constraint data."""

    def __init__(self, n: int, c: np.ndarray, a: np.ndarray):
        self.n = n
        self.c = c
        self.a = a  # (m, n, n)


def _real_form(p: SdpProblem):
    m = len(p.constraints)
    cones: list[_Cone] = []
    layout: list[tuple[str, str, int]] = []  # (kind, name, cone index)
    for name, n in p.psd_blocks.items():
        a = np.zeros((m, 2 * n, 2 * n))
        for k, con in enumerate(p.constraints):
            if name in con.coeffs:
                a[k] = 0.5 * embed(con.coeffs[name])
        c = 0.5 * embed(p.objective[name]) if name in p.objective else np.zeros((2 * n, 2 * n))
        layout.append(("block", name, len(cones)))
        cones.append(_Cone(2 * n, c, a))
    for name, kind in p.scalars.items():
        col = np.array([float(con.coeffs.get(name, 0.0)) for con in p.constraints])
        cost = float(p.objective.get(name, 0.0))
        layout.append((kind, name, len(cones)))
        cones.append(_Cone(1, np.array([[cost]]), col.reshape(m, 1, 1)))
        if kind == "free":
            cones.append(_Cone(1, np.array([[-cost]]), -col.reshape(m, 1, 1)))
    return cones, layout


def _svec_rows(cones: list[_Cone], m: int) -> np.ndarray:
    rows = []
    for cone in cones:
        iu = np.triu_indices(cone.n)
        w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
        rows.append(cone.a[:, iu[0], iu[1]] * w)
    return np.concatenate(rows, axis=1) if rows else np.zeros((m, 0))


def _independent_rows(a: np.ndarray, b: np.ndarray):
    """Indices of a maximal independent row set and the map expressing the rest."""
    m = a.shape[0]
    if m == 0:
        return np.arange(0), np.zeros((0, 0))
    _, r, piv = scipy.linalg.qr(a.T, pivoting=True, mode="economic")
    d = np.abs(np.diag(r))
    rank = int(np.sum(d > 1e-10 * max(d[0], 1.0)))
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(m), keep)
    t = np.zeros((len(drop), rank))
    if len(drop):
        t = np.linalg.lstsq(a[keep].T, a[drop].T, rcond=None)[0].T
        if np.max(np.abs(t @ b[keep] - b[drop])) > 1e-8 * (1 + np.max(np.abs(b))):
            raise _Inconsistent()
    return keep, t


class _Inconsistent(Exception):
    pass


def _op(cones, xs):
    """A(X): constraint values for a list of block matrices."""
    return sum(np.einsum("kab,ab->k", cone.a, x) for cone, x in zip(cones, xs))


def _adj(cones, y):
    return [np.einsum("k,kab->ab", y, cone.a) for cone in cones]


def _inner(xs, ss) -> float:
    return float(sum(np.vdot(x, s) for x, s in zip(xs, ss)))


def _max_step(l_chol: np.ndarray, dx: np.ndarray) -> float:
    li = scipy.linalg.solve_triangular(l_chol, np.eye(l_chol.shape[0]), lower=True)
    w = np.linalg.eigvalsh(li @ dx @ li.T)
    return np.inf if w[0] >= 0 else -1.0 / w[0]


def _sym(x):
    return 0.5 * (x + x.T)


def _initial_point(p: SdpProblem, cones, layout, keep, t_map, m_all):
    m = len(keep)
    b = p.rhs_vector()[keep]
    start_ok = p.primal_start is not None and p.dual_start is not None
    if start_ok:
        blocks, scal = p.primal_start
        xs: list = [None] * len(cones)
        for kind, name, idx in layout:
            if kind == "block":
                xs[idx] = embed(blocks[name])
            elif kind == "nonneg":
                xs[idx] = np.array([[float(scal[name])]])
            else:
                v = float(scal[name])
                xs[idx] = np.array([[max(v, 0.0) + 1.0]])
                xs[idx + 1] = np.array([[max(v, 0.0) + 1.0 - v]])
        y_full = np.asarray(p.dual_start, dtype=float)
        drop = np.setdiff1d(np.arange(m_all), keep)
        y = y_full[keep] + (t_map.T @ y_full[drop] if len(drop) else 0.0)
        ss = [cone.c - g for cone, g in zip(cones, _adj(cones, y))]
        if all(np.linalg.eigvalsh(_sym(x))[0] > 0 for x in xs) and all(
            np.linalg.eigvalsh(_sym(s))[0] > 0 for s in ss
        ):
            return xs, y, ss, True
        log.debug("supplied start is not strictly feasible; using the default start")
    xs, ss = [], []
    for cone in cones:
        n = cone.n
        norms = np.sqrt(np.einsum("kab,kab->k", cone.a, cone.a))
        xi = max(10.0, np.sqrt(n), n * np.max((1 + np.abs(b)) / (1 + norms), initial=0.0))
        eta = max(10.0, np.sqrt(n), np.max(norms, initial=0.0), np.linalg.norm(cone.c))
        xs.append(xi * np.eye(n))
        ss.append(eta * np.eye(n))
    return xs, np.zeros(m), ss, False


def solve(p: SdpProblem, gap_tol: float = 1e-8, max_iter: int = 200) -> SdpSolution:
    """Solve ``p`` to absolute duality gap and feasibility residual ``gap_tol``.

    ``status`` is ``"optimal"``, ``"max_iter"`` (best iterate returned) or
    ``"infeasible"``.
    """
    cones, layout = _real_form(p)
    m_all = len(p.constraints)
    for cone in cones:
        cone.a_full = cone.a
    b_all = p.rhs_vector()
    try:
        keep, t_map = _independent_rows(_svec_rows(cones, m_all), b_all)
    except _Inconsistent:
        return _finish(p, cones, layout, None, np.zeros(m_all), "infeasible", 0, [], np.arange(m_all), None)
    for cone in cones:
        cone.a = cone.a_full[keep]
    b = b_all[keep]
    xs, y, ss, feasible_start = _initial_point(p, cones, layout, keep, t_map, m_all)
    n_total = sum(cone.n for cone in cones)
    history: list[dict] = []
    status = "max_iter"
    it = 0
    best = None
    for it in range(max_iter + 1):
        rp = b - _op(cones, xs)
        rd = [cone.c - g - s for cone, g, s in zip(cones, _adj(cones, y), ss)]
        pobj = sum(float(np.vdot(cone.c, x)) for cone, x in zip(cones, xs))
        dobj = float(b @ y)
        mu = _inner(xs, ss) / n_total
        feas = max(np.max(np.abs(rp), initial=0.0), 2.0 * max(np.max(np.abs(r)) for r in rd))
        history.append({"iter": it, "pobj": pobj, "dobj": dobj, "gap": pobj - dobj, "mu": mu, "feas": feas})
        score = max(abs(pobj - dobj), feas)
        if best is None or score < best[0]:
            best = (score, [x.copy() for x in xs], y.copy(), [s.copy() for s in ss])
        if abs(pobj - dobj) <= gap_tol and feas <= gap_tol:
            status = "optimal"
            break
        if not feasible_start and (dobj > DIVERGENCE * (1 + abs(pobj)) or -pobj > DIVERGENCE * (1 + abs(dobj))):
            status = "infeasible"
            break
        if it == max_iter:
            break
        try:
            step = _newton_step(cones, xs, ss, rp, rd, mu)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            log.debug("stopping: %s", exc)
            break
        if step is None:
            break
        dxs, dy, dss, ap, ad = step
        xs = [_sym(x + ap * d) for x, d in zip(xs, dxs)]
        y = y + ad * dy
        ss = [_sym(s + ad * d) for s, d in zip(ss, dss)]
        if max(ap, ad) < 1e-12:
            break
    if status != "optimal" and best is not None and status != "infeasible":
        _, xs, y, ss = best
    y_full = np.zeros(m_all)
    y_full[keep] = y
    return _finish(p, cones, layout, xs, y_full, status, it, history, keep, ss)


def _newton_step(cones, xs, ss, rp, rd, mu):
    scal = []
    for x, s in zip(xs, ss):
        lx = np.linalg.cholesky(x)
        ls = np.linalg.cholesky(s)
        u, sig, qt = np.linalg.svd(ls.T @ lx)
        g = lx @ qt.T / np.sqrt(sig)
        ginv = (np.sqrt(sig)[:, None] * qt) @ scipy.linalg.solve_triangular(lx, np.eye(lx.shape[0]), lower=True)
        scal.append((lx, ls, g, ginv, sig, g @ g.T))
    m = len(rp)
    schur = np.zeros((m, m))
    for cone, (_, _, _, _, _, w) in zip(cones, scal):
        wa = np.einsum("ab,kbc,cd->kad", w, cone.a, w)
        schur += np.einsum("kab,lab->kl", cone.a, wa)
    schur = _sym(schur)
    try:
        factor = scipy.linalg.cho_factor(schur)
        lin = lambda r: scipy.linalg.cho_solve(factor, r)
    except scipy.linalg.LinAlgError:
        lin = lambda r: np.linalg.lstsq(schur, r, rcond=None)[0]

    def direction(targets):
        # dX + W dS W = target, A dX = rp, A^T dy + dS = rd
        wrdw = [w @ r @ w for (*_, w), r in zip(scal, rd)]
        rhs = rp - _op(cones, targets) + _op(cones, wrdw)
        dy = lin(rhs)
        dss = [r - g for r, g in zip(rd, _adj(cones, dy))]
        dxs = [_sym(t - w @ ds @ w) for t, (*_, w), ds in zip(targets, scal, dss)]
        return dxs, dy, [_sym(d) for d in dss]

    def steps(dxs, dss):
        ap = min([_max_step(sc[0], d) for sc, d in zip(scal, dxs)] + [np.inf])
        ad = min([_max_step(sc[1], d) for sc, d in zip(scal, dss)] + [np.inf])
        return min(1.0, STEP_FRACTION * ap), min(1.0, STEP_FRACTION * ad)

    # predictor
    dxa, dya, dsa = direction([-x for x in xs])
    ap, ad = steps(dxa, dsa)
    n_total = sum(c.n for c in cones)
    mu_aff = _inner([x + ap * d for x, d in zip(xs, dxa)], [s + ad * d for s, d in zip(ss, dsa)]) / n_total
    sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0
    # corrector
    targets = []
    for (lx, ls, g, ginv, sig, w), dx, ds in zip(scal, dxa, dsa):
        dxt = ginv @ dx @ ginv.T
        dst = g.T @ ds @ g
        k = sigma * mu * np.eye(len(sig)) - np.diag(sig**2) - 0.5 * (dxt @ dst + dst @ dxt)
        d = 2.0 * k / (sig[:, None] + sig[None, :])
        targets.append(g @ d @ g.T)
    dxs, dy, dss = direction(targets)
    ap, ad = steps(dxs, dss)
    return dxs, dy, dss, ap, ad


def _finish(p, cones, layout, xs, y_full, status, it, history, keep, ss) -> SdpSolution:
    blocks: dict[str, np.ndarray] = {}
    scalars: dict[str, float] = {}
    for kind, name, idx in layout:
        if xs is None:
            n = p.psd_blocks.get(name, 1)
            if kind == "block":
                blocks[name] = np.zeros((n, n), dtype=complex)
            else:
                scalars[name] = 0.0
            continue
        if kind == "block":
            blocks[name] = unembed(xs[idx])
        elif kind == "nonneg":
            scalars[name] = float(xs[idx][0, 0])
        else:
            scalars[name] = float(xs[idx][0, 0] - xs[idx + 1][0, 0])
    slack_blocks, _ = p.dual_slacks(y_full)
    multipliers: dict[str, np.ndarray | float] = {}
    for k, con in enumerate(p.constraints):
        if con.basis is not None:
            multipliers[con.group] = multipliers.get(con.group, 0) + y_full[k] * con.basis
        else:
            multipliers[con.group] = float(multipliers.get(con.group, 0.0)) + float(y_full[k])
    pobj = p.primal_objective(blocks, scalars)
    dobj = float(p.rhs_vector() @ y_full)
    sol_feas = 0.0
    if xs is not None:
        probe = SdpSolution(blocks, scalars, y_full, {}, {}, pobj, dobj, pobj - dobj, 0.0, status, it)
        rep = verify(p, probe)
        sol_feas = max(rep.max_primal, rep.max_dual)
    feas = float(sol_feas)
    return SdpSolution(
        primal_blocks=blocks,
        scalars=scalars,
        y=y_full,
        dual_multipliers=multipliers,
        dual_slack_blocks=slack_blocks,
        primal_objective=pobj,
        dual_objective=dobj,
        gap=pobj - dobj,
        feasibility_residual=feas,
        status=status,
        iterations=it,
        history=history,
    )
