"""Acceptance criteria 1-9, one test each.

Every test records a one-line PASS/FAIL verdict (printed in the pytest
terminal summary) and then asserts it. Run directly with
``python tests/test_acceptance.py`` to print only the verdict lines.
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from channel_coherence.channels import (
    KrausChannel,
    amplitude_damping,
    apply,
    compose,
    identity_channel,
    majorizes,
    mixture,
    PAULI_X,
    random_channel,
    random_density,
    random_mixed_unitary,
    unitary_channel,
    validate,
)
from channel_coherence.discrimination import optimal_setup, simulate
from channel_coherence.io import write_channel
from channel_coherence.measures_analytic import delta_c_max, t2_closed_form
from channel_coherence.measures_distance import t_diamond, t_one, t_re

ETAS = [round(0.05 * k, 10) for k in range(21)]
K0 = np.array([[-0.5084, -0.5495], [0.5318, -0.5108]])
K1 = np.array([[0.6701, 0.0846], [0.0981, -0.6558]])


def monotone(values, tol):
    return all(b >= a - tol for a, b in zip(values, values[1:]))


def criterion_1():
    ch = KrausChannel.from_kraus([K0, K1])
    start = time.perf_counter()
    rep = t_diamond(ch)
    elapsed = time.perf_counter() - start
    gap = abs(rep.diagnostics["gap"])
    ok = abs(rep.value - 0.0528434) <= 5e-4 and gap <= 1e-6 and elapsed < 5.0
    return ok, f"worked example T_diamond={rep.value:.7f} (target 0.0528434 +- 5e-4), gap={gap:.1e}, {elapsed:.2f}s"


def criterion_2():
    vals = [t2_closed_form(amplitude_damping(e)).value for e in ETAS]
    oracle = [delta_c_max(amplitude_damping(e), "C2").value for e in ETAS]
    worst = max(abs(a - b) for a, b in zip(vals, oracle))
    ok = vals[0] == 0.0 and abs(vals[-1] - 0.5) <= 1e-9 and monotone(vals, 0.0) and worst <= 1e-4
    return ok, f"T2(0)={vals[0]!r}, T2(1)={vals[-1]:.12f}, monotone={monotone(vals, 0.0)}, max |closed-oracle|={worst:.1e}"


def criterion_3():
    reps = [t_diamond(amplitude_damping(e)) for e in ETAS]
    vals = [r.value for r in reps]
    gaps = max(abs(r.diagnostics["gap"]) for r in reps)
    ok = vals[0] <= 1e-6 and monotone(vals, 1e-5) and gaps <= 1e-6
    return ok, f"T_diamond(0)={vals[0]:.1e}, T_diamond(1)={vals[-1]:.6f}, monotone={monotone(vals, 1e-5)}, max gap={gaps:.1e}"


def criterion_4():
    vals = [delta_c_max(amplitude_damping(e), "CRE").value for e in ETAS]
    ok = vals[0] <= 1e-6 and abs(vals[-1] - 1.0) <= 1e-3 and monotone(vals, 0.0)
    return ok, f"T_RE~(0)={vals[0]:.1e}, T_RE~(1)={vals[-1]:.6f}, monotone={monotone(vals, 0.0)}"


def criterion_5():
    rng = np.random.default_rng(2024)
    worst_free = 0.0
    for _ in range(100):
        ch = random_mixed_unitary(2, int(rng.integers(1, 5)), seed=rng)
        vals = [
            t2_closed_form(ch).value,
            t_diamond(ch).value,
            t_one(ch).value,
            t_re(ch).value,
            delta_c_max(ch, "CRE").value,
        ]
        worst_free = max(worst_free, max(vals))
    worst_convex = np.inf
    for _ in range(100):
        a = random_channel(2, 2, int(rng.integers(1, 5)), seed=rng)
        b = random_channel(2, 2, int(rng.integers(1, 5)), seed=rng)
        p = float(rng.uniform())
        slack = p * t2_closed_form(a).value + (1 - p) * t2_closed_form(b).value - t2_closed_form(mixture([a, b], [p, 1 - p])).value
        worst_convex = min(worst_convex, slack)
    worst_t2 = worst_td = -np.inf
    for _ in range(25):
        ch = random_channel(2, 2, int(rng.integers(1, 5)), seed=rng)
        pre = random_mixed_unitary(2, int(rng.integers(1, 5)), seed=rng)
        post = random_mixed_unitary(2, int(rng.integers(1, 5)), seed=rng)
        base_t2, base_td = t2_closed_form(ch).value, t_diamond(ch).value
        for g in (compose(post, ch), compose(ch, pre), compose(post, compose(ch, pre))):
            worst_t2 = max(worst_t2, t2_closed_form(g).value - base_t2)
            worst_td = max(worst_td, t_diamond(g).value - base_td)
    ok = worst_free <= 1e-5 and worst_convex >= -1e-6 and worst_t2 <= 1e-5 and worst_td <= 1e-4
    return ok, (
        f"max measure on free channels={worst_free:.1e}, min convexity slack={worst_convex:.1e}, "
        f"max increase under free composition: T2 {worst_t2:.1e}, T_diamond {worst_td:.1e}"
    )


def criterion_6():
    rng = np.random.default_rng(6)
    maj = 0
    for _ in range(100):
        ch = random_mixed_unitary(2, int(rng.integers(1, 5)), seed=rng)
        rho = random_density(2, seed=rng)
        maj += majorizes(np.linalg.eigvalsh(rho), np.linalg.eigvalsh(apply(ch, rho)), tol=1e-9)
    etas = [e for e in ETAS if e >= 0.1]
    not_unital = all(not validate(amplitude_damping(e)).is_unital for e in etas)
    min_t2 = min(t2_closed_form(amplitude_damping(e)).value for e in etas)
    ok = maj == 100 and not_unital and min_t2 > 1e-4
    return ok, f"majorized {maj}/100, AD(eta>=0.1) non-unital={not_unital}, min T2={min_t2:.4f}"


def criterion_7():
    ad = amplitude_damping(0.8)
    rep = t_diamond(ad)
    st = simulate(ad, rep.witness_channel, optimal_setup(ad, rep.witness_channel), 100_000, seed=7)
    target = 0.5 + 0.25 * rep.value
    ok_ad = abs(st.empirical - target) < 3 * st.stderr
    x = unitary_channel(PAULI_X)
    st2 = simulate(identity_channel(), x, optimal_setup(identity_channel(), x), 100_000, seed=8)
    ok_x = abs(st2.empirical - 1.0) <= 3 * st2.stderr
    return ok_ad and ok_x, (
        f"AD(0.8) vs witness: empirical={st.empirical:.5f}, predicted={target:.5f}, 3sigma={3 * st.stderr:.5f}; "
        f"id vs X: empirical={st2.empirical:.5f}"
    )


def criterion_8():
    worst, top = -np.inf, 0.0
    for seed in range(25):
        ch = random_channel(2, 2, 1 + seed % 4, seed=8000 + seed)
        d = t_diamond(ch).value
        o = t_one(ch).value
        worst = max(worst, o - d)
        top = max(top, d, o)
    ok = worst <= 1e-4 and top <= 2 + 1e-6
    return ok, f"max(t_one - t_diamond)={worst:.1e}, max value={top:.4f} over 25 channels"


def _cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "channel_coherence.cli", *args], cwd=cwd, capture_output=True, check=False
    )


def criterion_9(tmp: Path):
    write_channel(amplitude_damping(0.8), tmp / "ad.json")
    write_channel(identity_channel(), tmp / "id.json")
    commands = {
        "validate": (["validate", "ad.json", "--json"], None),
        "measure-t2": (["measure", "ad.json", "--measure", "t2", "--json"], None),
        "measure-tdiamond": (["measure", "ad.json", "--measure", "tdiamond", "--json", "--witness-out", "w.json"], "w.json"),
        "measure-t1": (["measure", "ad.json", "--measure", "t1", "--json", "--seed", "3"], None),
        "measure-tre": (["measure", "ad.json", "--measure", "tre", "--json", "--seed", "3"], None),
        "measure-tre-tilde": (["measure", "ad.json", "--measure", "tre-tilde", "--json", "--seed", "3"], None),
        "sweep-csv": (["sweep", *sum((["--measure", m] for m in ("t2", "tdiamond", "t1", "tre-tilde")), []),
                       "--step", "0.25", "--seed", "5", "--out", "s.csv"], "s.csv"),
        "sweep-json": (["sweep", "--measure", "t2", "--measure", "tre", "--step", "0.5", "--seed", "5",
                        "--starts", "4", "--json", "--out", "s.jsonl"], "s.jsonl"),
        "discriminate": (["discriminate", "ad.json", "id.json", "--shots", "50000", "--seed", "9", "--out", "d.txt"], "d.txt"),
        "random-channel": (["random-channel", "--dim", "3", "--rank", "2", "--seed", "11", "--out", "r.json"], "r.json"),
        "amplitude-damping": (["amplitude-damping", "--eta", "0.35", "--out", "a.json"], "a.json"),
    }
    bad = []
    for name, (args, out_file) in commands.items():
        outputs = []
        for _ in range(2):
            proc = _cli(args, tmp)
            blob = proc.stdout + (tmp / out_file).read_bytes() if out_file else proc.stdout
            outputs.append((proc.returncode, blob))
        if outputs[0] != outputs[1] or outputs[0][0] != 0:
            bad.append(name)
    return not bad, f"{len(commands) - len(bad)}/{len(commands)} commands byte-identical on rerun" + (f"; differing: {bad}" if bad else "")


def _check(number, result, acceptance_line):
    ok, detail = result
    acceptance_line(number, ok, detail)
    assert ok, detail


def test_criterion_1_worked_example(acceptance_line):
    _check(1, criterion_1(), acceptance_line)


def test_criterion_2_t2_curve(acceptance_line):
    _check(2, criterion_2(), acceptance_line)


def test_criterion_3_diamond_curve(acceptance_line):
    _check(3, criterion_3(), acceptance_line)


def test_criterion_4_relative_entropy_curve(acceptance_line):
    _check(4, criterion_4(), acceptance_line)


def test_criterion_5_axioms(acceptance_line):
    _check(5, criterion_5(), acceptance_line)


def test_criterion_6_unital_majorization(acceptance_line):
    _check(6, criterion_6(), acceptance_line)


def test_criterion_7_operational_identity(acceptance_line):
    _check(7, criterion_7(), acceptance_line)


def test_criterion_8_norm_ordering(acceptance_line):
    _check(8, criterion_8(), acceptance_line)


def test_criterion_9_cli_determinism(acceptance_line, tmp_path):
    _check(9, criterion_9(tmp_path), acceptance_line)


if __name__ == "__main__":
    import tempfile

    for n in range(1, 10):
        fn = globals()[f"criterion_{n}"]
        if n == 9:
            with tempfile.TemporaryDirectory() as d:
                ok, detail = fn(Path(d))
        else:
            ok, detail = fn()
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
