import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkr2l.bessel import bessel_j, bessel_row, turning_order
from qkr2l.closed_form import (
    ResonantSolution,
    analytic_moments,
    analytic_variance_coefficients,
    antiresonant_state,
    closed_form_density,
    closed_form_occupations,
    is_antiresonant,
    is_resonant,
    localized_resonant_state,
    resonant_state,
)
from qkr2l.entanglement import (
    ReducedDensityMatrix,
    asymptotic_eigenvalues,
    asymptotic_entropy,
    entanglement_entropy,
    entropy_from_eigenvalues,
    reduced_density,
)
from qkr2l.errors import NumericIntegrityError, ResonanceConditionError
from qkr2l.evolution import Backend, evolve, propagate
from qkr2l.lattice import (
    BlochInit,
    ModelParams,
    SpinorState,
    bloch_state,
    moments,
    probability_distribution,
    random_state,
)

TWO_PI = 2 * math.pi


def ground(k_max):
    return SpinorState.from_sites(k_max, b={0: 1.0})


# resonance predicates


def test_resonance_predicates():
    assert is_resonant(ModelParams(1.0, TWO_PI, 0.0))
    assert is_resonant(ModelParams(1.0, TWO_PI, -4 * math.pi))
    assert not is_resonant(ModelParams(1.0, TWO_PI, math.pi))
    assert not is_resonant(ModelParams(1.0, TWO_PI, 0.0, 0.1))
    assert not is_resonant(ModelParams(1.0, 6.28, 0.0))
    assert is_antiresonant(ModelParams(1.0, TWO_PI, math.pi))
    assert is_antiresonant(ModelParams(1.0, TWO_PI, -3 * math.pi))
    assert not is_antiresonant(ModelParams(1.0, TWO_PI, 0.97 * math.pi))


def test_closed_forms_refuse_off_resonance():
    state = ground(5)
    with pytest.raises(ResonanceConditionError):
        resonant_state(state, 1.0, 3, params=ModelParams(1.0, TWO_PI, 0.5, k_max=5))
    with pytest.raises(ResonanceConditionError):
        antiresonant_state(state, 1.0, 3, params=ModelParams(1.0, TWO_PI, 0.0, k_max=5))
    with pytest.raises(ResonanceConditionError):
        ResonantSolution(1.0, state, ModelParams(1.0, 3.0, 0.0, k_max=5))


# resonant wave function


def test_resonant_state_n_zero_is_initial():
    state = random_state(10, np.random.default_rng(0), support=3)
    assert resonant_state(state, 1.0, 0) is state


def test_resonant_state_from_ground_three_steps():
    k_max = 25
    out = resonant_state(ground(k_max), 1.0, 3)
    for k in range(-k_max, k_max + 1):
        expected = (1j) ** (-k % 4) * bessel_j(-k, 3.0)
        a, b = out.amplitude(k)
        if k % 2:
            assert a == pytest.approx(expected, abs=1e-15) and b == 0
        else:
            assert b == pytest.approx(expected, abs=1e-15) and a == 0


@pytest.mark.parametrize("backend", [Backend.BESSEL, Backend.SPLIT_STEP])
def test_resonant_state_matches_iteration(backend):
    k_max = 60
    state = random_state(k_max, np.random.default_rng(1), support=4)
    iterated = propagate(state, ModelParams(1.0, TWO_PI, 0.0, k_max=k_max), 20, backend)
    assert resonant_state(state, 1.0, 20).max_difference(iterated) < 1e-10


def test_resonant_solution_object():
    state = random_state(40, np.random.default_rng(2), support=2)
    sol = ResonantSolution(0.5, state, ModelParams(0.5, TWO_PI, 0.0, k_max=40))
    assert sol.state(7).max_difference(resonant_state(state, 0.5, 7)) == 0.0
    assert sol.moments(7) == analytic_moments(state, 0.5, 7)


# antiresonant wave function


def test_antiresonant_state_periodic():
    state = random_state(30, np.random.default_rng(3), support=5)
    assert antiresonant_state(state, 1.1, 2) is state
    one = antiresonant_state(state, 1.1, 1)
    assert antiresonant_state(state, 1.1, 17).max_difference(one) == 0.0


@pytest.mark.parametrize("backend", [Backend.BESSEL, Backend.SPLIT_STEP])
def test_antiresonant_state_matches_iteration(backend):
    k_max = 40
    params = ModelParams(1.1, TWO_PI, math.pi, k_max=k_max)
    state = random_state(k_max, np.random.default_rng(4), support=6)
    for n in (1, 2, 3, 50, 99, 100):
        iterated = propagate(state, params, n, backend)
        assert antiresonant_state(state, 1.1, n).max_difference(iterated) < 1e-12


# localized start


def test_localized_north_pole():
    k_max, x = 30, 2.0
    out = localized_resonant_state(BlochInit(0.0, 0.3), 1.0, 2, k_max)
    for k in range(-k_max, k_max + 1):
        expected = (1j) ** (k % 4) * bessel_j(k, x)
        a, b = out.amplitude(k)
        if k % 2 == 0:
            assert a == pytest.approx(expected, abs=1e-15) and abs(b) < 1e-16
        else:
            assert b == pytest.approx(expected, abs=1e-15) and abs(a) < 1e-16


@settings(max_examples=40, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, TWO_PI), st.integers(0, 30), st.floats(0.1, 2.0))
def test_localized_distribution_is_bessel_squared(gamma, phi, n, kappa):
    k_max = 80
    out = localized_resonant_state(BlochInit(gamma, phi), kappa, n, k_max)
    expected = bessel_row(-k_max, k_max, n * kappa) ** 2
    np.testing.assert_allclose(probability_distribution(out), expected, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, TWO_PI), st.integers(0, 30))
def test_localized_equals_general_closed_form(gamma, phi, n):
    init = BlochInit(gamma, phi)
    k_max = 50
    special = localized_resonant_state(init, 1.0, n, k_max)
    general = resonant_state(bloch_state(init, k_max), 1.0, n)
    assert special.max_difference(general) < 1e-14


# moments


@pytest.mark.parametrize("n", [0, 1, 10, 100])
def test_ground_moments(n):
    k_max = 140
    m1, m2 = analytic_moments(ground(k_max), 1.0, n)
    assert m1 == 0.0
    assert m2 == pytest.approx(n * n / 2, rel=1e-15, abs=0)
    P = probability_distribution(propagate(ground(k_max), ModelParams(1.0, TWO_PI, 0.0, k_max=k_max), n))
    it1, it2, _ = moments(P)
    assert abs(it1) < 1e-10
    assert it2 == pytest.approx(n * n / 2, rel=1e-8, abs=1e-14)


def test_moments_superposition_example():
    s = 1 / math.sqrt(2)
    state = SpinorState.from_sites(60, a={0: s}, b={1: s})
    params = ModelParams(1.0, TWO_PI, 0.0, k_max=60)
    for n in (0, 1, 5, 25):
        m1, m2 = analytic_moments(state, 1.0, n)
        assert m1 == pytest.approx(0.5, abs=1e-15)
        it1, it2, _ = moments(probability_distribution(propagate(state, params, n)))
        assert it1 == pytest.approx(m1, abs=1e-10)
        assert it2 == pytest.approx(m2, rel=1e-8)


def test_moments_at_zero_steps():
    state = random_state(10, np.random.default_rng(5), support=4)
    m1, m2, _ = moments(probability_distribution(state))
    assert analytic_moments(state, 1.3, 0) == pytest.approx((m1, m2), abs=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_analytic_moments_match_iteration(seed):
    rng = np.random.default_rng(seed)
    kappa = float(rng.uniform(0.2, 1.5))
    k_max = int(100 * kappa) + 40
    state = random_state(k_max, rng, support=3)
    traj = evolve(state, ModelParams(kappa, TWO_PI, 0.0, k_max=k_max), 100)
    for n in (1, 17, 60, 100):
        m1, m2 = analytic_moments(state, kappa, n)
        rec = traj.steps[n]
        assert rec.m1 == pytest.approx(m1, rel=1e-8, abs=1e-10)
        assert rec.m2 == pytest.approx(m2, rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 3.0))
def test_variance_quadratic_with_positive_leading_coefficient(seed, kappa):
    state = random_state(12, np.random.default_rng(seed), support=4)
    c2, c1, c0 = analytic_variance_coefficients(state, kappa)
    assert c2 > 0
    for n in (0, 3, 11):
        m1, m2 = analytic_moments(state, kappa, n)
        assert c2 * n * n + c1 * n + c0 == pytest.approx(m2 - m1 * m1, rel=1e-9, abs=1e-12)


# occupations and entropy


def test_occupations_at_zero_steps():
    init = BlochInit(1.1, 0.7)
    P_g, P_e, Q = closed_form_occupations(init, 1.0, 0)
    assert P_g == pytest.approx(math.cos(0.55) ** 2)
    assert P_e == pytest.approx(math.sin(0.55) ** 2)
    assert Q == pytest.approx(math.sin(1.1) / 2 * complex(math.cos(0.7), -math.sin(0.7)))


@pytest.mark.parametrize("n", [0, 1, 7, 100])
def test_occupations_equator_half(n):
    P_g, P_e, _ = closed_form_occupations(BlochInit(math.pi / 2, 0.3), 1.3, n)
    assert P_g == pytest.approx(0.5, abs=1e-15) and P_e == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, TWO_PI), st.integers(0, 60), st.floats(0.1, 2.0))
def test_occupations_match_lattice_sums(gamma, phi, n, kappa):
    init = BlochInit(gamma, phi)
    k_max = int(turning_order(n * kappa)) + 2
    rho = reduced_density(localized_resonant_state(init, kappa, n, k_max))
    P_g, P_e, Q = closed_form_occupations(init, kappa, n)
    assert P_g + P_e == pytest.approx(1.0, abs=1e-15)
    assert rho.P_g == pytest.approx(P_g, abs=1e-12)
    assert rho.P_e == pytest.approx(P_e, abs=1e-12)
    assert abs(rho.Q - Q) < 1e-12


def test_reduced_density_examples():
    init = BlochInit(0.9, 2.0)
    rho = reduced_density(bloch_state(init, 3))
    assert rho.P_g == pytest.approx(math.cos(0.45) ** 2)
    assert rho.Q == pytest.approx(math.sin(0.9) / 2 * complex(math.cos(2.0), -math.sin(2.0)))
    np.testing.assert_allclose(rho.matrix(), rho.matrix().conj().T)
    u = np.random.default_rng(0).normal(size=9) + 0j
    u /= np.linalg.norm(u)
    c, s = 0.6, 0.8j
    rho = reduced_density(SpinorState(c * u, s * u, 4))
    assert abs(rho.Q) == pytest.approx(abs(c) * abs(s))
    assert rho.eigenvalues()[1] == pytest.approx(0.0, abs=1e-15)
    state = random_state(6, np.random.default_rng(1))
    assert reduced_density(state).trace == pytest.approx(1.0, abs=1e-14)


def test_entropy_examples():
    assert entropy_from_eigenvalues(1.0, 0.0) == 0.0
    assert entropy_from_eigenvalues(0.5, 0.5) == 1.0
    rho = ReducedDensityMatrix(0.5, 0.5, 0.25)
    lp, lm = rho.eigenvalues()
    assert (lp, lm) == pytest.approx((0.75, 0.25), abs=1e-15)
    assert entanglement_entropy(rho) == pytest.approx(2 - 0.75 * math.log2(3), abs=1e-15)
    assert entanglement_entropy(rho) == pytest.approx(0.8113, abs=1e-4)


def test_entropy_rejects_invalid_matrices():
    with pytest.raises(NumericIntegrityError):
        entanglement_entropy(ReducedDensityMatrix(0.5, 0.5, 0.6))
    with pytest.raises(NumericIntegrityError):
        entanglement_entropy(ReducedDensityMatrix(0.6, 0.6, 0.0))
    with pytest.raises(NumericIntegrityError):
        entropy_from_eigenvalues(1.0 + 1e-9, -1e-9)
    # rounding-level negativity is clamped
    assert entropy_from_eigenvalues(1.0, -1e-13) == 0.0


@settings(max_examples=100)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_entropy_in_unit_interval(k_max, seed):
    S = entanglement_entropy(reduced_density(random_state(k_max, np.random.default_rng(seed))))
    assert 0.0 <= S <= 1.0


def test_entropy_matches_matrix_eigenvalues():
    rng = np.random.default_rng(8)
    for _ in range(20):
        rho = reduced_density(random_state(5, rng))
        w = np.clip(np.linalg.eigvalsh(rho.matrix()), 0, 1)
        ref = -sum(v * math.log2(v) for v in w if v > 0)
        assert entanglement_entropy(rho) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 0.3, 1.0, math.pi / 2, 2.5, math.pi])
def test_asymptotic_entropy_phi_half_pi(gamma):
    assert asymptotic_entropy(BlochInit(gamma, math.pi / 2)) == 1.0


@pytest.mark.parametrize("phi", [0.0, 1.0, math.pi, 5.0])
def test_asymptotic_entropy_south_pole(phi):
    assert asymptotic_entropy(BlochInit(math.pi, phi)) == pytest.approx(1.0, abs=1e-15)


def test_asymptotic_entropy_pure_point():
    assert asymptotic_eigenvalues(BlochInit(math.pi / 2, 0.0)) == (1.0, 0.0)
    assert asymptotic_entropy(BlochInit(math.pi / 2, 0.0)) == 0.0


def test_entropy_converges_to_asymptotic_value():
    init = BlochInit(1.2, 0.4)
    S0 = asymptotic_entropy(init)
    for n in (50, 200, 800):
        k_max = int(turning_order(n)) + 2
        S = closed_form_density(init, 1.0, n).entropy
        deviation = abs(S - S0)
        # bounded by a constant times |J_0(2n kappa)|
        assert deviation <= 2.0 * abs(bessel_j(0, 2.0 * n)) + 1e-12
        rho = reduced_density(localized_resonant_state(init, 1.0, n, k_max))
        assert entanglement_entropy(rho) == pytest.approx(S, abs=1e-12)
