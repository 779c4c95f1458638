import numpy as np
import pytest

from channel_coherence.channels import (
    ChoiMatrix,
    KrausChannel,
    amplitude_damping,
    bloch_affine,
    compose,
    depolarizing,
    identity_channel,
    kraus_to_choi,
    random_channel,
    random_mixed_unitary,
    random_unitary,
    unital_choi_from_bloch,
    unitary_channel,
    validate,
)
from channel_coherence.measures_analytic import OptimizerConfig
from channel_coherence.measures_distance import (
    SolverError,
    UnitalQubitParam,
    _vector_near,
    channel_divergence,
    max_affine_norm,
    t_diamond,
    t_one,
    t_re,
    tetrahedron_feasible,
)
from channel_coherence.numerics import DimensionError
from oracles import t_one_cvxpy

FAST = OptimizerConfig(multistart_count=4, samples=400)
K0 = np.array([[-0.5084, -0.5495], [0.5318, -0.5108]])
K1 = np.array([[0.6701, 0.0846], [0.0981, -0.6558]])


def fibonacci_sphere(n):
    k = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * k / n)
    theta = np.pi * (1 + 5**0.5) * k
    return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], 1)


def test_t_diamond_examples():
    assert t_diamond(random_mixed_unitary(2, 3, seed=1)).value == pytest.approx(0.0, abs=1e-6)
    assert t_diamond(amplitude_damping(0.0)).value == pytest.approx(0.0, abs=1e-6)
    rep = t_diamond(KrausChannel.from_kraus([K0, K1]))
    assert rep.value == pytest.approx(0.0264499, abs=1e-5)
    assert abs(rep.diagnostics["gap"]) <= 1e-7


def test_t_diamond_witness_is_unital():
    rep = t_diamond(amplitude_damping(0.7))
    w = rep.witness_channel
    assert validate(w).is_unital
    assert rep.witness_state.shape == (2, 2)


def test_t_diamond_reports_non_convergence():
    with pytest.raises(SolverError) as info:
        t_diamond(amplitude_damping(0.5), max_iter=1)
    assert info.value.primal is not None and info.value.dual is not None


def test_t_diamond_needs_square_channel():
    with pytest.raises(DimensionError):
        t_diamond(random_channel(2, 3, 2, seed=1))


def test_t_diamond_qutrit_unital_is_zero():
    u = random_unitary(3, seed=2)
    assert t_diamond(unitary_channel(u)).value == pytest.approx(0.0, abs=1e-6)


def test_t_diamond_unitary_invariance():
    for seed in range(5):
        ch = random_channel(2, 2, 2, seed=seed)
        u = unitary_channel(random_unitary(2, seed=10 + seed))
        assert t_diamond(compose(u, ch)).value == pytest.approx(t_diamond(ch).value, abs=1e-5)


def test_t_diamond_faithful_on_amplitude_damping():
    for eta in (0.1, 0.4, 0.8):
        assert t_diamond(amplitude_damping(eta)).value > 1e-3


def test_t_diamond_of_amplitude_damping_is_eta():
    for eta in (0.2, 0.5, 0.8, 1.0):
        assert t_diamond(amplitude_damping(eta)).value == pytest.approx(eta, abs=1e-6)


def test_unital_param_is_always_cp():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = rng.normal(scale=3, size=10)
        p = UnitalQubitParam.from_vector(x)
        assert p.is_feasible()
        assert np.linalg.eigvalsh(unital_choi_from_bloch(p.matrix()))[0] >= -1e-12


def test_tetrahedron():
    assert tetrahedron_feasible([1, 1, 1])
    assert tetrahedron_feasible([0, 0, 0])
    assert tetrahedron_feasible([-1, -1, 1])
    assert not tetrahedron_feasible([-1, -1, -1])
    assert not tetrahedron_feasible([1, 1, -1])


def test_vector_near_recovers_unital_map():
    for seed in range(5):
        m = bloch_affine(random_mixed_unitary(2, 3, seed=seed)).M
        t = UnitalQubitParam.from_vector(_vector_near(m)).matrix()
        assert np.max(np.abs(t - m)) < 1e-6


def test_max_affine_norm_against_sampling():
    rng = np.random.default_rng(1)
    pts = fibonacci_sphere(20000)
    cases = [(rng.normal(size=3) * 0.3, rng.normal(size=(3, 3))) for _ in range(20)]
    # degenerate (hard) cases
    cases.append((np.array([0.0, 0.0, 0.05]), np.diag([1.0, 1.0, 0.2])))
    cases.append((np.zeros(3), np.diag([0.5, 0.5, 0.5])))
    cases.append((np.array([0.3, 0.0, 0.0]), np.zeros((3, 3))))
    for a, d in cases:
        v, r = max_affine_norm(a, d)
        assert abs(np.linalg.norm(r) - 1) < 1e-9
        assert v == pytest.approx(np.linalg.norm(a + d @ r), abs=1e-12)
        sampled = np.max(np.linalg.norm(a + pts @ d.T, axis=1))
        assert sampled <= v + 1e-12
        assert v - sampled < 1e-2


def test_t_one_examples():
    assert t_one(identity_channel(), FAST).value == 0.0
    assert t_one(amplitude_damping(0.0), FAST).value == 0.0


def test_t_one_amplitude_damping_grid_oracle():
    ch = amplitude_damping(0.8)
    rep = t_one(ch)
    assert rep.value <= t_diamond(ch).value + 1e-9
    # AD is symmetric under rotations about z and under x -> -x, so a
    # diagonal free map diag(t, t, t3) is optimal. Two 100 x 100 grids:
    # the whole feasible square, then a window around its best cell.
    ba = bloch_affine(ch)
    sphere = fibonacci_sphere(1000)

    def grid_min(t_range, t3_range):
        best, arg = np.inf, None
        for t in t_range:
            for t3 in t3_range:
                if not tetrahedron_feasible([t, t, t3]):
                    continue
                d = ba.M - np.diag([t, t, t3])
                v = np.max(np.linalg.norm(ba.a + sphere @ d.T, axis=1))
                if v < best:
                    best, arg = v, (t, t3)
        return best, arg

    coarse, (t0, t30) = grid_min(np.linspace(-1, 1, 100), np.linspace(-1, 1, 100))
    best, _ = grid_min(np.linspace(t0 - 0.03, t0 + 0.03, 100), np.linspace(t30 - 0.03, t30 + 0.03, 100))
    assert abs(rep.value - best) < 2e-3


@pytest.mark.parametrize("seed", range(3))
def test_t_one_matches_s_lemma_oracle(seed):
    ch = random_channel(2, 2, 2, seed=300 + seed)
    rep = t_one(ch, FAST)
    exact, _ = t_one_cvxpy(ch)
    assert rep.value == pytest.approx(exact, abs=1e-5)


def test_t_one_without_witness_candidate():
    ch = random_channel(2, 2, 3, seed=4)
    rep = t_one(ch, FAST, use_diamond_witness=False)
    exact, _ = t_one_cvxpy(ch)
    assert rep.value == pytest.approx(exact, abs=1e-4)


def test_t_one_witnesses_consistent():
    ch = random_channel(2, 2, 2, seed=7)
    rep = t_one(ch, FAST)
    f = rep.witness_channel
    rho = rep.witness_state
    from channel_coherence.numerics import trace_norm

    assert validate(f).is_unital
    assert trace_norm(ch(rho) - f(rho)) == pytest.approx(rep.value, abs=1e-6)


def test_t_one_deterministic():
    ch = random_channel(2, 2, 2, seed=8)
    assert t_one(ch, FAST).value == t_one(ch, FAST).value


def test_t_one_qubit_only():
    with pytest.raises(DimensionError):
        t_one(identity_channel(3), FAST)


def test_norm_ordering():
    for seed in range(5):
        ch = random_channel(2, 2, 1 + seed % 4, seed=500 + seed)
        d = t_diamond(ch).value
        assert t_one(ch, FAST).value <= d + 1e-4
        assert d <= 2 + 1e-6


def test_channel_divergence_examples():
    ch = random_channel(2, 2, 2, seed=3)
    assert channel_divergence(ch, ch, FAST) == pytest.approx(0.0, abs=1e-9)
    assert channel_divergence(identity_channel(), depolarizing(), FAST) == pytest.approx(2.0, abs=1e-6)
    # the reference factor cancels for a replacement channel: S(|0><0| || I/2) = 1
    assert channel_divergence(amplitude_damping(1.0), depolarizing(), FAST) == pytest.approx(1.0, abs=1e-6)


def test_channel_divergence_support_violation():
    assert channel_divergence(identity_channel(), amplitude_damping(1.0), FAST) == np.inf


def test_channel_divergence_dimension_check():
    with pytest.raises(DimensionError):
        channel_divergence(identity_channel(2), identity_channel(3), FAST)


def test_channel_divergence_data_processing():
    for seed in range(3):
        n = random_channel(2, 2, 2, seed=seed)
        m = random_channel(2, 2, 3, seed=50 + seed)
        phi = random_mixed_unitary(2, 3, seed=90 + seed)
        before = channel_divergence(n, m, FAST)
        after = channel_divergence(compose(phi, n), compose(phi, m), FAST)
        assert after <= before + 2e-3


def test_channel_divergence_qutrit():
    u = random_unitary(3, seed=1)
    n = unitary_channel(u)
    # maximally entangled input: S(pure || I/9) = log2 9
    dep = KrausChannel.from_kraus(
        [np.sqrt(1 / 9) * np.linalg.matrix_power(np.roll(np.eye(3), 1, 0), i) @ np.diag(np.exp(2j * np.pi * j * np.arange(3) / 3))
         for i in range(3) for j in range(3)]
    )
    assert channel_divergence(n, dep, FAST) == pytest.approx(np.log2(9), abs=1e-4)


def test_t_re_examples():
    assert t_re(random_mixed_unitary(2, 3, seed=2), FAST).value == 0.0
    assert t_re(amplitude_damping(0.0), FAST).value == 0.0
    rep = t_re(amplitude_damping(1.0))
    assert 0.0 <= rep.value <= 2.0
    assert rep.diagnostics["certified"]
    assert validate(rep.witness_channel).is_unital


def test_t_re_upper_bounded_by_witness_divergence():
    ch = amplitude_damping(1.0)
    rep = t_re(ch)
    assert rep.value <= channel_divergence(ch, depolarizing(), FAST) + 1e-6


def test_t_re_qubit_only():
    with pytest.raises(DimensionError):
        t_re(identity_channel(3), FAST)
