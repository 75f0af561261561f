import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkr2l.bessel import bessel_j
from qkr2l.errors import ConfigurationError, DimensionError
from qkr2l.evolution import (
    Backend,
    CapacityWarning,
    StepOperator,
    evolve,
    free_phases,
    kick_rotation,
    leakage,
    propagate,
    step_bessel,
    step_splitstep,
)
from qkr2l.lattice import (
    BlochInit,
    ModelParams,
    SpinorState,
    bloch_state,
    probability_distribution,
    random_state,
    total_norm,
)

TWO_PI = 2 * math.pi
BACKENDS = [Backend.BESSEL, Backend.SPLIT_STEP]


def ground(k_max):
    return SpinorState.from_sites(k_max, b={0: 1.0})


def one_step(state, params, backend):
    return StepOperator(params, backend).apply(state)


# kick rotation


def test_kick_rotation_examples():
    np.testing.assert_allclose(kick_rotation(math.pi / 2, 3.7), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(kick_rotation(0.0, math.pi), -np.eye(2), atol=1e-15)
    np.testing.assert_allclose(kick_rotation(0.0, math.pi / 2), [[0, 1j], [1j, 0]], atol=1e-15)


@settings(max_examples=100)
@given(st.floats(-10, 10), st.floats(-20, 20))
def test_kick_rotation_is_special_unitary(theta, kappa):
    U = kick_rotation(theta, kappa)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(2), atol=1e-14)
    assert np.linalg.det(U) == pytest.approx(1.0, abs=1e-14)


def test_split_grid_reproduces_kick_rotation():
    params = ModelParams(1.3, 0.7, 0.2, 0.1, k_max=12)
    op = StepOperator(params, Backend.SPLIT_STEP)
    field = op.kick_field()
    assert field.shape == (op.theta_grid_size, 2, 2)
    for j, theta in enumerate(op.theta):
        np.testing.assert_array_equal(field[j], kick_rotation(theta, params.kappa))
    assert op.theta[0] == -math.pi


def test_backend_parse_aliases():
    assert Backend.parse("bessel") is Backend.BESSEL
    assert Backend.parse("splitstep") is Backend.SPLIT_STEP
    assert Backend.parse("split-step") is Backend.SPLIT_STEP
    with pytest.raises(ConfigurationError):
        Backend.parse("euler")


# single steps


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_kick_applies_only_diagonal_phases(backend):
    k_max = 6
    params = ModelParams(0.0, 0.37, 1.1, 0.2, k_max=k_max)
    state = random_state(k_max, np.random.default_rng(3))
    out = one_step(state, params, backend)
    k = np.arange(-k_max, k_max + 1)
    kinetic = np.exp(-1j * (k + 0.2) ** 2 * 0.37)
    np.testing.assert_allclose(out.a, state.a * kinetic * np.exp(-1.1j), atol=1e-12)
    np.testing.assert_allclose(out.b, state.b * kinetic, atol=1e-12)
    np.testing.assert_allclose(probability_distribution(out), probability_distribution(state), atol=1e-14)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("kappa", [0.4, 1.0, 2.5])
def test_one_resonant_step_from_ground(backend, kappa):
    # a_k = i^k J_k(kappa) on odd k, b_k = i^k J_k(kappa) on even k
    k_max = 30
    params = ModelParams(kappa, TWO_PI, 0.0, k_max=k_max)
    out = one_step(ground(k_max), params, backend)
    for k in range(-k_max, k_max + 1):
        expected = (1j) ** (k % 4) * bessel_j(k, kappa)
        a, b = out.amplitude(k)
        if k % 2:
            assert a == pytest.approx(expected, abs=1e-15)
            assert abs(b) < 1e-15
        else:
            assert b == pytest.approx(expected, abs=1e-15)
            assert abs(a) < 1e-15


def test_free_phases_exact_at_resonance():
    kinetic, detuning = free_phases(ModelParams(1.0, TWO_PI, 0.0, k_max=2000))
    assert np.all(kinetic == 1.0)
    assert detuning == 1.0


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("delta", [math.pi, 3 * math.pi, -math.pi])
def test_antiresonant_two_steps_identity(backend, delta):
    k_max = 40
    params = ModelParams(1.3, TWO_PI, delta, k_max=k_max)
    state = random_state(k_max, np.random.default_rng(5), support=10)
    op = StepOperator(params, backend)
    twice = op.apply(op.apply(state))
    assert twice.max_difference(state) < 1e-12


def test_grid_smaller_than_lattice():
    with pytest.raises(ConfigurationError):
        StepOperator(ModelParams(1.0, 1.0, 0.0, k_max=10), Backend.SPLIT_STEP, theta_grid_size=20)


def test_lattice_mismatch():
    op = StepOperator(ModelParams(1.0, 1.0, 0.0, k_max=10))
    with pytest.raises(DimensionError):
        op.apply(ground(9))
    with pytest.raises(DimensionError):
        evolve(ground(9), ModelParams(1.0, 1.0, 0.0, k_max=10), 1)


def test_backend_mismatch_in_direct_step_calls():
    params = ModelParams(1.0, 1.0, 0.0, k_max=5)
    with pytest.raises(ConfigurationError):
        step_splitstep(ground(5), StepOperator(params, Backend.BESSEL))
    with pytest.raises(ConfigurationError):
        step_bessel(ground(5), StepOperator(params, Backend.SPLIT_STEP))


params_strategy = st.builds(
    lambda kappa, tau, delta, beta: ModelParams(kappa, tau, delta, beta, k_max=48),
    st.floats(0.0, 3.0),
    st.floats(0.0, 20.0),
    st.floats(-10.0, 10.0),
    st.floats(-0.5, 0.4999),
)


@settings(max_examples=120, deadline=None)
@given(params_strategy, st.integers(0, 2**32 - 1), st.sampled_from(BACKENDS))
def test_step_preserves_norm(params, seed, backend):
    state = random_state(params.k_max, np.random.default_rng(seed), support=12)
    out = one_step(state, params, backend)
    assert leakage(out, 8) < 1e-14
    assert total_norm(out) == pytest.approx(total_norm(state), abs=1e-12)


@settings(max_examples=120, deadline=None)
@given(params_strategy, st.integers(0, 2**32 - 1))
def test_backends_agree(params, seed):
    state = random_state(params.k_max, np.random.default_rng(seed), support=20)
    a = one_step(state, params, Backend.BESSEL)
    b = one_step(state, params, Backend.SPLIT_STEP)
    assert a.max_difference(b) < 1e-10


def test_backends_agree_over_many_steps():
    params = ModelParams(0.8, 1.0, 0.7, 0.23, k_max=120)
    state = random_state(params.k_max, np.random.default_rng(9), support=5)
    a = propagate(state, params, 60, Backend.BESSEL)
    b = propagate(state, params, 60, Backend.SPLIT_STEP)
    assert a.max_difference(b) < 1e-10


def test_open_boundary_does_not_wrap():
    k_max = 20
    params = ModelParams(1.0, TWO_PI, 0.0, k_max=k_max)
    edge = SpinorState.from_sites(k_max, b={k_max: 1.0})
    for backend in BACKENDS:
        out = one_step(edge, params, backend)
        P = probability_distribution(out)
        assert np.max(P[:10]) < 1e-30
        assert total_norm(out) < 1.0


def test_negative_kappa_is_sigma_z_conjugation():
    k_max = 40
    state = random_state(k_max, np.random.default_rng(1), support=4)
    flipped = SpinorState(state.a, -state.b, k_max)
    pos = ModelParams(1.2, 1.0, 0.3, 0.1, k_max=k_max)
    neg = ModelParams(-1.2, 1.0, 0.3, 0.1, k_max=k_max)
    for backend in BACKENDS:
        direct = propagate(state, neg, 5, backend)
        via = propagate(flipped, pos, 5, backend)
        assert direct.max_difference(SpinorState(via.a, -via.b, k_max)) < 1e-13


def test_negative_kappa_same_observables_for_single_chirality_start():
    k_max = 40
    pos = ModelParams(1.2, 1.0, 0.3, 0.1, k_max=k_max)
    neg = ModelParams(-1.2, 1.0, 0.3, 0.1, k_max=k_max)
    for name in ("m1", "m2", "P_g", "S"):
        np.testing.assert_allclose(evolve(ground(k_max), pos, 5).column(name),
                                   evolve(ground(k_max), neg, 5).column(name), atol=1e-12)


# multi-step invariants


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("kappa", [0.3, 1.0])
@pytest.mark.parametrize("n", [2, 7, 50])
def test_semigroup_at_resonance(backend, kappa, n):
    k_max = 110
    state = random_state(k_max, np.random.default_rng(n), support=3)
    many = propagate(state, ModelParams(kappa, TWO_PI, 0.0, k_max=k_max), n, backend)
    once = propagate(state, ModelParams(n * kappa, TWO_PI, 0.0, k_max=k_max), 1, backend)
    assert many.max_difference(once) < 1e-10


def test_semigroup_with_detuning_multiple_of_two_pi():
    k_max = 60
    state = random_state(k_max, np.random.default_rng(2), support=3)
    many = propagate(state, ModelParams(0.5, TWO_PI, 4 * math.pi, k_max=k_max), 20, Backend.BESSEL)
    once = propagate(state, ModelParams(10.0, TWO_PI, 0.0, k_max=k_max), 1, Backend.BESSEL)
    assert many.max_difference(once) < 1e-10


def test_parity_chirality_selection():
    k_max = 60
    params = ModelParams(1.0, TWO_PI, 0.0, k_max=k_max)
    op = StepOperator(params)
    state = ground(k_max)
    even = np.arange(-k_max, k_max + 1) % 2 == 0
    for _ in range(30):
        state = op.apply(state)
        assert np.all(state.a[even] == 0)
        assert np.all(state.b[~even] == 0)


def test_zero_steps_single_record():
    params = ModelParams(1.0, TWO_PI, 0.0, k_max=5)
    traj = evolve(ground(5), params, 0)
    assert len(traj) == 1
    rec = traj.steps[0]
    assert (rec.n, rec.m1, rec.m2, rec.norm, rec.leakage) == (0, 0.0, 0.0, 1.0, 0.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_resonant_second_moment_after_fifty_steps(backend):
    params = ModelParams(1.0, TWO_PI, 0.0, k_max=100)
    traj = evolve(ground(100), params, 50, backend)
    assert traj.steps[-1].m2 == pytest.approx(1250.0, rel=1e-8)
    assert [r.n for r in traj.steps] == list(range(51))


def test_antiresonant_records_repeat():
    params = ModelParams(1.0, TWO_PI, math.pi, k_max=30)
    state = random_state(30, np.random.default_rng(0), support=4)
    traj = evolve(state, params, 20)
    first = traj.steps[0]
    for rec in traj.steps[2::2]:
        for name in ("m1", "m2", "variance", "P_g", "P_e", "S", "norm"):
            assert getattr(rec, name) == pytest.approx(getattr(first, name), abs=1e-12)
        assert abs(rec.Q - first.Q) < 1e-12


def test_evolve_rejects_negative_steps():
    with pytest.raises(ConfigurationError):
        evolve(ground(5), ModelParams(1.0, 1.0, 0.0, k_max=5), -1)


def test_record_subset():
    traj = evolve(ground(20), ModelParams(1.0, 1.0, 0.0, k_max=20), 3, record=["m2"])
    rec = traj.steps[-1]
    assert not math.isnan(rec.m2) and math.isnan(rec.S) and math.isnan(rec.m1)
    with pytest.raises(ConfigurationError):
        evolve(ground(20), ModelParams(1.0, 1.0, 0.0, k_max=20), 3, record=["entropy"])


def test_deterministic_bit_identical():
    params = ModelParams(0.9, 1.7, 0.4, 0.2, k_max=80)
    state = random_state(80, np.random.default_rng(4), support=6)
    for backend in BACKENDS:
        one = evolve(state, params, 40, backend)
        two = evolve(state, params, 40, backend)
        for name in ("m1", "m2", "S", "norm", "leakage"):
            assert np.array_equal(one.column(name), two.column(name))
        assert np.array_equal(one.final_state.a, two.final_state.a)


# leakage


def test_leakage_examples():
    assert leakage(bloch_state(BlochInit(1.0, 0.0), 20), 10) == 0.0
    k_max, m = 12, 3
    size = 2 * k_max + 1
    uniform = SpinorState(np.full(size, 1 / math.sqrt(size)), np.zeros(size), k_max)
    assert leakage(uniform, m) == pytest.approx(2 * m / size, rel=1e-14)
    with pytest.raises(ConfigurationError):
        leakage(uniform, k_max)


def test_leakage_resonant_run_small():
    params = ModelParams(1.0, TWO_PI, 0.0, k_max=80)
    state = propagate(ground(80), params, 50)
    assert leakage(state, 5) < 1e-12


def test_leakage_breach_flags_without_aborting():
    params = ModelParams(1.0, TWO_PI, 0.0, k_max=20)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CapacityWarning)
        traj = evolve(ground(20), params, 40)
    assert len(traj) == 41
    assert traj.truncation_compromised
    assert traj.steps[0].flagged is False
    assert traj.steps[-1].flagged is True


def test_capacity_warning():
    with pytest.warns(CapacityWarning):
        evolve(ground(20), ModelParams(1.0, 1.0, 0.0, k_max=20), 5)
