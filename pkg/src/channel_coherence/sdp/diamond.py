"""Diamond-norm programs on Choi matrices.

Choi matrices are unnormalized with the input factor first (A = input,
B = output). For a trace-annihilating Hermiticity-preserving difference D,

    ||D||_diamond = min 2 ||Tr_B Z||_inf  s.t.  Z >= D, Z >= 0,

and the distance to the unital set adds a Choi variable W with
Tr_B W = I_A (trace preserving) and Tr_A W = I_B (unital). The spectral norm
is linearized with a scalar a and the slack a I_A - 2 Tr_B Z >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channels import ChoiMatrix
from ..numerics import DimensionError, hermitian_basis, partial_trace
from .problem import SdpProblem, SdpSolution
from .solver import solve


@dataclass
class DiamondResult:
    value: float
    solution: SdpSolution
    problem: SdpProblem
    witness_choi: np.ndarray | None
    input_state: np.ndarray | None
    dual_operator: np.ndarray


def _coords(op: np.ndarray) -> list[float]:
    return [float(np.real(np.trace(e @ op))) for e in hermitian_basis(op.shape[0])]


def _objective_trace(trace_out: str, d_a: int, d_b: int):
    """(size of the reduced operator, adjoint of Z -> Tr_X Z)."""
    if trace_out == "output":
        return d_a, lambda e: np.kron(e, np.eye(d_b))
    if trace_out == "input":
        return d_b, lambda e: np.kron(np.eye(d_a), e)
    raise ValueError("trace_out must be 'output' or 'input'")


def _reduce(z, trace_out, d_a, d_b):
    return partial_trace(z, d_a, d_b, "B" if trace_out == "output" else "A")


def build_diamond_unital(j: ChoiMatrix, trace_out: str = "output") -> SdpProblem:
    """Program for min over unital channels F of ||E - F||_diamond.

    ``trace_out="input"`` traces the input factor in the objective instead;
    that variant is not the diamond norm and exists only to reproduce
    published numbers computed with the swapped convention.
    """
    d_a, d_b = j.dim_in, j.dim_out
    if d_a != d_b:
        raise DimensionError("distance to unital channels needs dim_in == dim_out")
    n = d_a * d_b
    jm = np.asarray(j.matrix, dtype=complex)
    if jm.shape != (n, n):
        raise DimensionError(f"Choi matrix has shape {jm.shape}, expected {(n, n)}")
    r, obj_adj = _objective_trace(trace_out, d_a, d_b)
    p = SdpProblem()
    for name, size in (("Z", n), ("W", n), ("S1", n), ("S2", r)):
        p.add_block(name, size)
    p.add_scalar("a", "nonneg")
    p.objective["a"] = 1.0
    p.add_matrix_equality(
        "slack_Z", n, {"S1": lambda e: e, "Z": lambda e: -e, "W": lambda e: -e}, -jm
    )
    p.add_matrix_equality(
        "slack_a", r, {"S2": lambda e: e, "Z": lambda e: 2.0 * obj_adj(e), "a": -np.eye(r)}, np.zeros((r, r))
    )
    p.add_matrix_equality("tp", d_a, {"W": lambda e: np.kron(e, np.eye(d_b))}, np.eye(d_a))
    p.add_matrix_equality("unital", d_b, {"W": lambda e: np.kron(np.eye(d_a), e)}, np.eye(d_b))

    z0 = np.eye(n) + jm
    w0 = np.eye(n) / d_b
    red = _reduce(z0, trace_out, d_a, d_b)
    a0 = 2.0 * float(np.max(np.linalg.eigvalsh(red))) + 1.0
    p.primal_start = (
        {"Z": z0, "W": w0, "S1": z0 - jm + w0, "S2": a0 * np.eye(r) - 2.0 * red},
        {"a": a0},
    )
    q = 1.0 / (2.0 * r)
    x = q / 2.0
    p.dual_start = np.array(
        _coords(-x * np.eye(n)) + _coords(-q * np.eye(r)) + _coords(-2 * x * np.eye(d_a)) + _coords(np.zeros((d_b, d_b)))
    )
    return p


def build_diamond_norm(j_delta: np.ndarray, dim_in: int, dim_out: int) -> SdpProblem:
    """Program for ||D||_diamond of a trace-annihilating difference D with Choi ``j_delta``."""
    n = dim_in * dim_out
    jm = np.asarray(j_delta, dtype=complex)
    if jm.shape != (n, n):
        raise DimensionError(f"Choi matrix has shape {jm.shape}, expected {(n, n)}")
    p = SdpProblem()
    for name, size in (("Z", n), ("S1", n), ("S2", dim_in)):
        p.add_block(name, size)
    p.add_scalar("a", "nonneg")
    p.objective["a"] = 1.0
    p.add_matrix_equality("slack_Z", n, {"S1": lambda e: e, "Z": lambda e: -e}, -jm)
    p.add_matrix_equality(
        "slack_a",
        dim_in,
        {"S2": lambda e: e, "Z": lambda e: 2.0 * np.kron(e, np.eye(dim_out)), "a": -np.eye(dim_in)},
        np.zeros((dim_in, dim_in)),
    )
    z0 = (max(float(np.max(np.linalg.eigvalsh(jm))), 0.0) + 1.0) * np.eye(n)
    red = partial_trace(z0, dim_in, dim_out, "B")
    a0 = 2.0 * float(np.max(np.linalg.eigvalsh(red))) + 1.0
    p.primal_start = ({"Z": z0, "S1": z0 - jm, "S2": a0 * np.eye(dim_in) - 2.0 * red}, {"a": a0})
    q = 1.0 / (2.0 * dim_in)
    p.dual_start = np.array(_coords(-(q / 2.0) * np.eye(n)) + _coords(-q * np.eye(dim_in)))
    return p


def _input_state(sol: SdpSolution) -> np.ndarray | None:
    xt = -np.asarray(sol.dual_multipliers["slack_a"])
    xt = 0.5 * (xt + xt.conj().T)
    tr = float(np.real(np.trace(xt)))
    if tr < 1e-9:
        return None
    w, v = np.linalg.eigh(xt / tr)
    w = np.clip(w, 0.0, None)
    return (v * (w / w.sum())) @ v.conj().T


def solve_diamond_unital(j: ChoiMatrix, gap_tol: float = 1e-8, max_iter: int = 200, trace_out: str = "output") -> DiamondResult:
    p = build_diamond_unital(j, trace_out=trace_out)
    sol = solve(p, gap_tol=gap_tol, max_iter=max_iter)
    w = sol.primal_blocks["W"]
    return DiamondResult(
        value=sol.primal_objective,
        solution=sol,
        problem=p,
        witness_choi=0.5 * (w + w.conj().T),
        input_state=_input_state(sol),
        dual_operator=-np.asarray(sol.dual_multipliers["slack_Z"]),
    )


def solve_diamond_norm(j_delta: np.ndarray, dim_in: int, dim_out: int, gap_tol: float = 1e-8, max_iter: int = 200) -> DiamondResult:
    p = build_diamond_norm(j_delta, dim_in, dim_out)
    sol = solve(p, gap_tol=gap_tol, max_iter=max_iter)
    return DiamondResult(
        value=sol.primal_objective,
        solution=sol,
        problem=p,
        witness_choi=None,
        input_state=_input_state(sol),
        dual_operator=-np.asarray(sol.dual_multipliers["slack_Z"]),
    )
