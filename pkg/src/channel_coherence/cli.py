"""Command-line front end.

Exit codes: 0 success, 1 domain failure, 2 parse error, 3 dimension error,
4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .channels import (
    ChannelError,
    KrausChannel,
    amplitude_damping,
    random_channel,
    validate,
)
from .discrimination import optimal_setup, simulate
from .io import ChannelFormatError, dumps_channel, read_channel
from .measures_analytic import OptimizerConfig, delta_c_max, t2_closed_form
from .measures_distance import SolverError, t_diamond, t_one, t_re
from .numerics import DimensionError

EXIT_OK, EXIT_DOMAIN, EXIT_PARSE, EXIT_DIM, EXIT_IO = 0, 1, 2, 3, 4
MEASURES = ("t2", "tdiamond", "t1", "tre", "tre-tilde")
CSV_HEADER = ["param", "measure", "value", "method", "gap_or_spread"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _num(x) -> str:
    return format(float(x), ".17g")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return [[_jsonable(z.real), _jsonable(z.imag)] for z in x.reshape(-1)]
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer, np.bool_)):
        return x.item()
    if isinstance(x, (str, int, bool)) or x is None:
        return x
    return str(x)


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True)


def compute_measure(ch: KrausChannel, measure: str, seed: int = 0, gap_tol: float = 1e-8, starts: int = 8, diamond_trace: str = "output"):
    """Dispatch one measure; returns a MeasureReport."""
    cfg = OptimizerConfig(multistart_count=starts, seed=seed)
    if measure == "t2":
        return t2_closed_form(ch)
    if measure == "tdiamond":
        return t_diamond(ch, gap_tol=gap_tol, trace_out=diamond_trace)
    if measure == "t1":
        return t_one(ch, cfg)
    if measure == "tre":
        return t_re(ch, cfg)
    if measure == "tre-tilde":
        return delta_c_max(ch, "CRE", cfg)
    raise ValueError(f"unknown measure {measure}")


def _gap_or_spread(report) -> float:
    d = report.diagnostics
    if "gap" in d:
        return float(d["gap"])
    if "spread" in d:
        return float(d["spread"])
    return 0.0


def _grid(start: float, end: float, step: float) -> list[float]:
    if step <= 0 or end < start:
        raise ValueError("need start <= end and step > 0")
    n = int(math.floor((end - start) / step + 1e-9))
    pts = [start + k * step for k in range(n + 1)]
    # round to the step's resolution so 0.05*k prints as 0.05, 0.1, ...
    digits = max(0, -int(math.floor(math.log10(step))) + 6)
    pts = [min(round(p, digits), end) for p in pts]
    if end - pts[-1] > 1e-12 * max(1.0, abs(end)):
        pts.append(end)
    return pts


def _sweep_point(args):
    idx, eta, measures, seed, gap_tol, starts = args
    ch = amplitude_damping(eta)
    rows = []
    for m in measures:
        r = compute_measure(ch, m, seed=seed + idx, gap_tol=gap_tol, starts=starts)
        rows.append({"param": eta, "measure": m, "value": r.value, "method": r.method, "gap_or_spread": _gap_or_spread(r)})
    return rows


def run_sweep(start, end, step, measures, seed=0, gap_tol=1e-8, starts=8, workers=1) -> list[dict]:
    tasks = [(i, eta, list(measures), seed, gap_tol, starts) for i, eta in enumerate(_grid(start, end, step))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sweep_point, tasks))
    else:
        chunks = [_sweep_point(t) for t in tasks]
    rows = [r for c in chunks for r in c]
    order = {m: i for i, m in enumerate(measures)}
    rows.sort(key=lambda r: (r["param"], order[r["measure"]]))
    return rows


def format_rows(rows, as_json: bool) -> str:
    if as_json:
        return "".join(_dump(r) + "\n" for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_num(r["param"]), r["measure"], _num(r["value"]), r["method"], _num(r["gap_or_spread"])])
    return buf.getvalue()


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_validate(a) -> int:
    ch = read_channel(a.path)
    rep = validate(ch)
    out = {
        "cptp": rep.is_cptp,
        "unital": rep.is_unital,
        "tp_residual": rep.tp_residual,
        "unital_residual": rep.unital_residual,
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
    }
    if a.json:
        print(_dump(out))
    else:
        print(f"cptp: {str(rep.is_cptp).lower()}")
        print(f"unital: {str(rep.is_unital).lower()}")
        print(f"tp_residual: {rep.tp_residual:.3e}")
        print(f"unital_residual: {rep.unital_residual:.3e}")
    return EXIT_OK if rep.is_cptp else EXIT_DOMAIN


def cmd_measure(a) -> int:
    ch = read_channel(a.path)
    r = compute_measure(ch, a.measure, seed=a.seed, gap_tol=a.gap_tol, starts=a.starts, diamond_trace=a.diamond_trace)
    if a.witness_out and r.witness_channel is not None:
        _write(a.witness_out, dumps_channel(r.witness_channel, name=f"{a.measure} witness"))
    if a.json:
        diag = {k: v for k, v in r.diagnostics.items() if not isinstance(v, np.ndarray)}
        print(_dump({"measure": a.measure, "value": r.value, "method": r.method, "diagnostics": diag}))
    else:
        print(_num(r.value))
    return EXIT_OK


def cmd_sweep(a) -> int:
    if a.family != "amplitude-damping":
        raise ValueError(f"unknown family {a.family}")
    measures = a.measure or ["t2"]
    rows = run_sweep(a.start, a.end, a.step, measures, seed=a.seed, gap_tol=a.gap_tol, starts=a.starts, workers=a.workers)
    _write(a.out, format_rows(rows, a.json))
    return EXIT_OK


def cmd_discriminate(a) -> int:
    ch1, ch2 = read_channel(a.path1), read_channel(a.path2)
    setup = optimal_setup(ch1, ch2)
    stats = simulate(ch1, ch2, setup, a.shots, a.seed)
    z = 0.0 if stats.stderr == 0 else (stats.empirical - setup.predicted_success) / stats.stderr
    out = {
        "predicted": setup.predicted_success,
        "empirical": stats.empirical,
        "shots": stats.shots,
        "successes": stats.successes,
        "stderr": stats.stderr,
        "z_score": z,
    }
    if "warning" in setup.diagnostics:
        out["warning"] = setup.diagnostics["warning"]
    if a.json:
        text = _dump(out) + "\n"
    else:
        text = "".join(f"{k}: {_num(v) if isinstance(v, float) else v}\n" for k, v in out.items())
    _write(a.out, text)
    return EXIT_OK


def cmd_random_channel(a) -> int:
    if a.dim < 2 or a.rank < 1:
        raise DimensionError("need dim >= 2 and rank >= 1")
    ch = random_channel(a.dim, a.dim, a.rank, seed=a.seed)
    _write(a.out, dumps_channel(ch, name=f"random d={a.dim} rank={a.rank} seed={a.seed}"))
    return EXIT_OK


def cmd_amplitude_damping(a) -> int:
    if not 0.0 <= a.eta <= 1.0:
        raise ChannelError("eta must lie in [0, 1]")
    if a.literal:
        # K1 = [[0, eta], [0, 0]]: not trace preserving for 0 < eta < 1
        k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - a.eta)]], dtype=complex)
        k1 = np.array([[0.0, a.eta], [0.0, 0.0]], dtype=complex)
        ch = KrausChannel.from_kraus([k0, k1], name=f"amplitude damping literal eta={a.eta:g}")
    else:
        ch = amplitude_damping(a.eta)
    _write(a.out, dumps_channel(ch))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="channel-coherence", description="Dynamical total-coherence measures of quantum channels.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check CPTP and unitality of a channel file")
    s.add_argument("path")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("measure", help="compute one coherence measure")
    s.add_argument("path")
    s.add_argument("--measure", required=True, choices=MEASURES)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gap-tol", type=float, default=1e-8)
    s.add_argument("--starts", type=int, default=8)
    s.add_argument("--diamond-trace", choices=("output", "input"), default="output",
                   help="which Choi marginal the unital constraint pins in the SDP (default: output)")
    s.add_argument("--witness-out", help="write the optimal free channel here")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("sweep", help="evaluate measures along the amplitude-damping family")
    s.add_argument("--family", default="amplitude-damping", choices=("amplitude-damping",))
    s.add_argument("--start", type=float, default=0.0)
    s.add_argument("--end", type=float, default=1.0)
    s.add_argument("--step", type=float, default=0.05)
    s.add_argument("--measure", action="append", choices=MEASURES)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gap-tol", type=float, default=1e-8)
    s.add_argument("--starts", type=int, default=8)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default="-")
    s.add_argument("--json", action="store_true", help="JSON lines instead of CSV")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("discriminate", help="simulate discrimination of two channels")
    s.add_argument("path1")
    s.add_argument("path2")
    s.add_argument("--shots", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_discriminate)

    s = sub.add_parser("random-channel", help="write a random channel file")
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--rank", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_random_channel)

    s = sub.add_parser("amplitude-damping", help="write an amplitude-damping channel file")
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--literal", action="store_true", help="use eta instead of sqrt(eta) in K1 (not trace preserving)")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_amplitude_damping)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChannelFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionError as exc:
        print(f"dimension error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ChannelError, SolverError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
