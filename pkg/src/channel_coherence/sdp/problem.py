"""Block-structured semidefinite programs over complex Hermitian blocks.

Primal::

    minimize    sum_j Re Tr(C_j X_j) + sum_s c_s x_s
    subject to  sum_j Re Tr(A_kj X_j) + sum_s a_ks x_s = b_k     (all k)
                X_j >= 0 (Hermitian PSD),  x_s >= 0 or free

Dual::

    maximize    b . y
    subject to  C_j - sum_k y_k A_kj >= 0,
                c_s - sum_k y_k a_ks >= 0 (nonneg scalar) or == 0 (free scalar)

Operator-valued equalities ``L(X) = R`` are expanded against an orthonormal
Hermitian basis ``E_k``; their multiplier is reassembled as ``sum_k y_k E_k``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..numerics import DimensionError, dagger, hermitian_basis


@dataclass
class LinearConstraint:
    group: str
    coeffs: dict[str, np.ndarray | float]
    rhs: float
    basis: np.ndarray | None = None


@dataclass
class SdpProblem:
    psd_blocks: dict[str, int] = field(default_factory=dict)
    scalars: dict[str, str] = field(default_factory=dict)
    objective: dict[str, np.ndarray | float] = field(default_factory=dict)
    constraints: list[LinearConstraint] = field(default_factory=list)
    # optional strictly feasible starting point: (blocks, scalars, y)
    primal_start: tuple[dict, dict] | None = None
    dual_start: np.ndarray | None = None

    def add_block(self, name: str, size: int) -> None:
        if name in self.psd_blocks or name in self.scalars:
            raise ValueError(f"duplicate variable {name!r}")
        self.psd_blocks[name] = int(size)

    def add_scalar(self, name: str, kind: str = "nonneg") -> None:
        if kind not in ("nonneg", "free"):
            raise ValueError("scalar kind must be 'nonneg' or 'free'")
        if name in self.psd_blocks or name in self.scalars:
            raise ValueError(f"duplicate variable {name!r}")
        self.scalars[name] = kind

    def add_scalar_equality(self, group: str, coeffs: dict, rhs: float) -> None:
        self._check_coeffs(coeffs)
        self.constraints.append(LinearConstraint(group, dict(coeffs), float(rhs)))

    def add_matrix_equality(self, group: str, size: int, terms: dict[str, Callable | np.ndarray | float], rhs) -> None:
        """Add ``sum_terms L_t(var_t) = rhs`` for an n x n Hermitian ``rhs``.

        Block terms are given by the adjoint map ``E -> L^dag(E)``; scalar
        terms by the Hermitian matrix multiplying the scalar.
        """
        rhs = np.asarray(rhs, dtype=complex)
        if rhs.shape != (size, size):
            raise DimensionError(f"rhs of group {group!r} has shape {rhs.shape}, expected {(size, size)}")
        for e in hermitian_basis(size):
            coeffs: dict[str, np.ndarray | float] = {}
            for name, term in terms.items():
                if name in self.psd_blocks:
                    coeffs[name] = np.asarray(term(e), dtype=complex)
                elif name in self.scalars:
                    coeffs[name] = float(np.real(np.trace(e @ np.asarray(term, dtype=complex))))
                else:
                    raise KeyError(f"unknown variable {name!r}")
            self._check_coeffs(coeffs)
            self.constraints.append(
                LinearConstraint(group, coeffs, float(np.real(np.trace(e @ rhs))), basis=e)
            )

    def _check_coeffs(self, coeffs: dict) -> None:
        for name, c in coeffs.items():
            if name in self.psd_blocks:
                n = self.psd_blocks[name]
                if np.shape(c) != (n, n):
                    raise DimensionError(f"coefficient for {name!r} has shape {np.shape(c)}, expected {(n, n)}")
                if np.max(np.abs(np.asarray(c) - dagger(np.asarray(c))), initial=0.0) > 1e-12:
                    raise ValueError(f"coefficient for {name!r} is not Hermitian")
            elif name not in self.scalars:
                raise KeyError(f"unknown variable {name!r}")

    @property
    def groups(self) -> list[str]:
        seen: list[str] = []
        for c in self.constraints:
            if c.group not in seen:
                seen.append(c.group)
        return seen

    def rhs_vector(self) -> np.ndarray:
        return np.array([c.rhs for c in self.constraints])

    def scaled_rhs(self, factor: float) -> "SdpProblem":
        """Copy with every right-hand side multiplied by ``factor``."""
        out = SdpProblem(dict(self.psd_blocks), dict(self.scalars), dict(self.objective))
        out.constraints = [
            LinearConstraint(c.group, c.coeffs, c.rhs * factor, c.basis) for c in self.constraints
        ]
        if self.primal_start is not None:
            blocks, scal = self.primal_start
            out.primal_start = (
                {k: v * factor for k, v in blocks.items()},
                {k: v * factor for k, v in scal.items()},
            )
        out.dual_start = self.dual_start
        return out

    def constraint_values(self, blocks: dict, scalars: dict) -> np.ndarray:
        vals = np.zeros(len(self.constraints))
        for k, c in enumerate(self.constraints):
            v = 0.0
            for name, coef in c.coeffs.items():
                if name in self.psd_blocks:
                    v += float(np.real(np.vdot(coef, blocks[name])))
                else:
                    v += coef * scalars[name]
            vals[k] = v
        return vals

    def primal_objective(self, blocks: dict, scalars: dict) -> float:
        v = 0.0
        for name, coef in self.objective.items():
            if name in self.psd_blocks:
                v += float(np.real(np.vdot(coef, blocks[name])))
            else:
                v += float(coef) * scalars[name]
        return v

    def dual_slacks(self, y: np.ndarray) -> tuple[dict, dict]:
        """C_j - sum_k y_k A_kj for blocks, c_s - sum_k y_k a_ks for scalars."""
        blocks = {}
        for name, n in self.psd_blocks.items():
            blocks[name] = np.array(self.objective.get(name, np.zeros((n, n))), dtype=complex)
        scal = {name: float(self.objective.get(name, 0.0)) for name in self.scalars}
        for yk, c in zip(y, self.constraints):
            for name, coef in c.coeffs.items():
                if name in blocks:
                    blocks[name] = blocks[name] - yk * coef
                else:
                    scal[name] -= yk * coef
        return blocks, scal

    def to_json(self) -> str:
        def enc(x):
            if isinstance(x, np.ndarray):
                return [[[float(z.real), float(z.imag)] for z in row] for row in x]
            return float(x)

        return json.dumps(
            {
                "psd_blocks": self.psd_blocks,
                "scalars": self.scalars,
                "objective": {k: enc(v) for k, v in self.objective.items()},
                "constraints": [
                    {"group": c.group, "rhs": c.rhs, "coeffs": {k: enc(v) for k, v in c.coeffs.items()}}
                    for c in self.constraints
                ],
            }
        )


@dataclass
class SdpSolution:
    primal_blocks: dict[str, np.ndarray]
    scalars: dict[str, float]
    y: np.ndarray
    dual_multipliers: dict[str, np.ndarray | float]
    dual_slack_blocks: dict[str, np.ndarray]
    primal_objective: float
    dual_objective: float
    gap: float
    feasibility_residual: float
    status: str
    iterations: int
    history: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        def enc(x):
            if isinstance(x, np.ndarray):
                return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(x)]
            return float(x)

        return json.dumps(
            {
                "status": self.status,
                "iterations": self.iterations,
                "primal_objective": self.primal_objective,
                "dual_objective": self.dual_objective,
                "gap": self.gap,
                "feasibility_residual": self.feasibility_residual,
                "primal_blocks": {k: enc(v) for k, v in self.primal_blocks.items()},
                "scalars": self.scalars,
                "dual_multipliers": {k: enc(v) for k, v in self.dual_multipliers.items()},
            }
        )


@dataclass
class ResidualReport:
    primal_residuals: dict[str, float]
    dual_residuals: dict[str, float]
    gap: float

    @property
    def max_primal(self) -> float:
        return max(self.primal_residuals.values(), default=0.0)

    @property
    def max_dual(self) -> float:
        return max(self.dual_residuals.values(), default=0.0)


def _neg_part_min_eig(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(0.5 * (m + dagger(m)))
    return float(max(-w[0], 0.0))


def verify(p: SdpProblem, s: SdpSolution) -> ResidualReport:
    """Recompute every residual and the gap from the raw matrices.

    Uses only the problem data and the solution's blocks, scalars and ``y``;
    nothing from the solver's internal (real-embedded) representation.
    """
    for name, n in p.psd_blocks.items():
        if np.shape(s.primal_blocks[name]) != (n, n):
            raise DimensionError(f"solution block {name!r} has the wrong shape")
    if len(s.y) != len(p.constraints):
        raise DimensionError("multiplier vector does not match the constraint count")
    primal: dict[str, float] = {}
    vals = p.constraint_values(s.primal_blocks, s.scalars)
    res = np.abs(vals - p.rhs_vector())
    for k, c in enumerate(p.constraints):
        key = f"eq:{c.group}"
        primal[key] = max(primal.get(key, 0.0), float(res[k]))
    for name, blk in s.primal_blocks.items():
        primal[f"psd:{name}"] = _neg_part_min_eig(blk)
        primal[f"herm:{name}"] = float(np.max(np.abs(blk - dagger(blk)), initial=0.0))
    for name, kind in p.scalars.items():
        if kind == "nonneg":
            primal[f"sign:{name}"] = max(-s.scalars[name], 0.0)
    dual: dict[str, float] = {}
    slack_blocks, slack_scalars = p.dual_slacks(s.y)
    for name, blk in slack_blocks.items():
        dual[f"psd:{name}"] = _neg_part_min_eig(blk)
    for name, kind in p.scalars.items():
        v = slack_scalars[name]
        dual[f"scalar:{name}"] = max(-v, 0.0) if kind == "nonneg" else abs(v)
    gap = p.primal_objective(s.primal_blocks, s.scalars) - float(p.rhs_vector() @ s.y)
    return ResidualReport(primal, dual, gap)
