"""Exact solutions at resonance (tau = 2 pi, beta = 0, delta_tilde = 2 m pi) and
antiresonance (delta_tilde = (2m+1) pi), analytic moments and the closed-form
chirality occupations for a localized start.

None of these route through the evolution engine; they serve as its oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j, bessel_row, ipow
from .entanglement import ReducedDensityMatrix
from .errors import ResonanceConditionError
from .lattice import BlochInit, ModelParams, SpinorState, moments, probability_distribution

RESONANCE_TOL = 1e-12


def _distance_to_multiple(value: float, period: float, offset: float = 0.0) -> float:
    r = (value - offset) % period
    return min(r, period - r)


def is_resonant(params: ModelParams, tol: float = RESONANCE_TOL) -> bool:
    return (
        abs(params.tau - 2.0 * math.pi) <= tol
        and abs(params.beta) <= tol
        and _distance_to_multiple(params.delta_tilde, 2.0 * math.pi) <= tol
    )


def is_antiresonant(params: ModelParams, tol: float = RESONANCE_TOL) -> bool:
    return (
        abs(params.tau - 2.0 * math.pi) <= tol
        and abs(params.beta) <= tol
        and _distance_to_multiple(params.delta_tilde, 2.0 * math.pi, math.pi) <= tol
    )


def require_resonance(params: ModelParams):
    if not is_resonant(params):
        raise ResonanceConditionError(
            "closed form needs tau = 2pi, beta = 0 and delta_tilde a multiple of 2pi "
            f"(got tau={params.tau!r}, beta={params.beta!r}, delta_tilde={params.delta_tilde!r})"
        )


def require_antiresonance(params: ModelParams):
    if not is_antiresonant(params):
        raise ResonanceConditionError(
            "closed form needs tau = 2pi, beta = 0 and delta_tilde an odd multiple of pi "
            f"(got tau={params.tau!r}, beta={params.beta!r}, delta_tilde={params.delta_tilde!r})"
        )


def _kick_sum(initial: SpinorState, x: float) -> SpinorState:
    """``(a_k, b_k) = sum_j i^(j-k) J_(j-k)(x) [(a_j, b_j) if j-k even else (b_j, a_j)]``."""
    k_max = initial.k_max
    size = 2 * k_max + 1
    reach = size - 1
    J = bessel_row(-reach, reach, x)
    phase = np.array([ipow(m) for m in range(-reach, reach + 1)])
    coeff = phase * J
    k = np.arange(-k_max, k_max + 1)
    a = np.zeros(size, complex)
    b = np.zeros(size, complex)
    sources = np.nonzero((initial.a != 0) | (initial.b != 0))[0]
    for i in sources:
        j = i - k_max
        shift = j - k  # per destination
        c = coeff[shift + reach]
        even = shift % 2 == 0
        aj, bj = initial.a[i], initial.b[i]
        a += c * np.where(even, aj, bj)
        b += c * np.where(even, bj, aj)
    return SpinorState(a, b, k_max)


@dataclass(frozen=True)
class ResonantSolution:
    """Wave function at any step count for a resonant run."""

    kappa: float
    initial: SpinorState
    params: ModelParams | None = None

    def __post_init__(self):
        if self.params is not None:
            require_resonance(self.params)

    def state(self, n: int) -> SpinorState:
        return resonant_state(self.initial, self.kappa, n)

    def moments(self, n: int) -> tuple[float, float]:
        return analytic_moments(self.initial, self.kappa, n)


def resonant_state(initial: SpinorState, kappa: float, n: int, params: ModelParams | None = None) -> SpinorState:
    """State after ``n`` resonant periods: one kick of strength ``n * kappa``."""
    if params is not None:
        require_resonance(params)
    if n == 0:
        return initial
    return _kick_sum(initial, n * kappa)


def antiresonant_state(initial: SpinorState, kappa: float, n: int, params: ModelParams | None = None) -> SpinorState:
    """Period-two dynamics: even ``n`` returns ``initial``, odd ``n`` one step.

    The single step carries the ``exp(-i delta_tilde) = -1`` factor on the
    upper component; without it the two-step product would not be the identity.
    """
    if params is not None:
        require_antiresonance(params)
    if n % 2 == 0:
        return initial
    once = _kick_sum(initial, kappa)
    return SpinorState(-once.a, once.b, initial.k_max)


def localized_resonant_state(init: BlochInit, kappa: float, n: int, k_max: int) -> SpinorState:
    """Resonant state for a start at ``k = 0`` with Bloch angles ``(gamma, phi)``."""
    up, down = init.amplitudes()
    k = np.arange(-k_max, k_max + 1)
    base = bessel_row(-k_max, k_max, n * kappa) * np.array([ipow(int(v)) for v in k])
    even = k % 2 == 0
    a = base * np.where(even, up, down)
    b = base * np.where(even, down, up)
    return SpinorState(a, b, k_max)


def _initial_sums(initial: SpinorState):
    a, b = initial.a, initial.b
    j = initial.momenta.astype(float)
    fwd = a[:-1] * np.conj(b[1:])  # a_j b*_{j+1}
    bwd = a[1:] * np.conj(b[:-1])  # a_j b*_{j-1}
    drift = -(np.sum(fwd.imag) - np.sum(bwd.imag))
    linear = -(np.sum((2.0 * j[:-1] + 1.0) * fwd.imag) - np.sum((2.0 * j[1:] - 1.0) * bwd.imag))
    overlap = float(np.sum((a[:-2] * np.conj(a[2:]) + b[:-2] * np.conj(b[2:])).real))
    return float(drift), float(linear), overlap


def analytic_moments(initial: SpinorState, kappa: float, n: int) -> tuple[float, float]:
    """First and second momentum moments after ``n`` resonant periods.

    With ``x = kappa n``::

        m1(n) = m1(0) - x * sum_j Im[a_j b*_{j+1} - a_j b*_{j-1}]
        m2(n) = x^2/2 (1 - sum_j Re[a_j a*_{j+2} + b_j b*_{j+2}])
                - x * sum_j [(2j+1) Im(a_j b*_{j+1}) - (2j-1) Im(a_j b*_{j-1})]
                + m2(0)
    """
    m1_0, m2_0, _ = moments(probability_distribution(initial), initial.k_max)
    drift, linear, overlap = _initial_sums(initial)
    x = kappa * n
    return m1_0 + x * drift, 0.5 * x * x * (1.0 - overlap) + x * linear + m2_0


def analytic_variance_coefficients(initial: SpinorState, kappa: float) -> tuple[float, float, float]:
    """``(c2, c1, c0)`` with ``variance(n) = c2 n^2 + c1 n + c0`` at resonance."""
    m1_0, m2_0, _ = moments(probability_distribution(initial), initial.k_max)
    drift, linear, overlap = _initial_sums(initial)
    c2 = kappa * kappa * (0.5 * (1.0 - overlap) - drift * drift)
    c1 = kappa * (linear - 2.0 * m1_0 * drift)
    return c2, c1, m2_0 - m1_0 * m1_0


def closed_form_occupations(init: BlochInit, kappa: float, n: int) -> tuple[float, float, complex]:
    """``(P_g, P_e, Q)`` after ``n`` resonant periods from a localized start."""
    j0 = bessel_j(0, 2.0 * n * kappa)
    cg = math.cos(init.gamma)
    P_g = 0.5 * (1.0 + j0 * cg)
    P_e = 0.5 * (1.0 - j0 * cg)
    Q = 0.5 * math.sin(init.gamma) * complex(math.cos(init.phi), -math.sin(init.phi) * j0)
    return P_g, P_e, Q


def closed_form_density(init: BlochInit, kappa: float, n: int) -> ReducedDensityMatrix:
    return ReducedDensityMatrix(*closed_form_occupations(init, kappa, n))
