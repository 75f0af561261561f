"""Experiment drivers behind the command line: the second-moment study at
generic detuning, the entropy surface over initial Bloch angles, parameter
sweeps and the verification batteries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bessel
from .closed_form import (
    analytic_moments,
    antiresonant_state,
    closed_form_occupations,
    is_antiresonant,
    localized_resonant_state,
    resonant_state,
)
from .entanglement import asymptotic_entropy, entanglement_entropy, reduced_density
from .errors import ConfigurationError
from .evolution import (
    Backend,
    StepOperator,
    Trajectory,
    default_margin,
    evolve,
    iterate,
    leakage,
    propagate,
    step_bessel,
    step_splitstep,
)
from .lattice import BlochInit, ModelParams, SpinorState, random_state

MIN_FIT_STEPS = 64
TRANSIENT_TOLERANCE = 0.05


def suggest_k_max(n_steps: int, kappa: float, width: int = 1) -> int:
    """Half-width that keeps a ballistic front of speed ``kappa`` well inside the lattice."""
    return int(math.ceil(width / 2.0 + bessel.turning_order(n_steps * kappa))) + 10


# -- second moment growth ----------------------------------------------------


@dataclass
class GrowthFit:
    slope: float | None
    quadratic: tuple[float, float, float] | None
    transient_length: int | None
    oscillation_amplitude: float | None
    late_m2_over_n2: float
    diagnostic: str = "ok"

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "quadratic": list(self.quadratic) if self.quadratic is not None else None,
            "transient_length": self.transient_length,
            "oscillation_amplitude": self.oscillation_amplitude,
            "late_m2_over_n2": self.late_m2_over_n2,
            "diagnostic": self.diagnostic,
        }


def loglog_slope(n: np.ndarray, m2: np.ndarray) -> float:
    n = np.asarray(n, float)
    m2 = np.asarray(m2, float)
    if np.any(n <= 0) or np.any(m2 <= 0):
        raise ConfigurationError("log-log fit needs positive steps and moments")
    slope, _ = np.polyfit(np.log(n), np.log(m2), 1)
    return float(slope)


def analyse_growth(m2: np.ndarray, periodic: bool = False) -> GrowthFit:
    """Late-time growth diagnostics of a second-moment series ``m2[0..N]``.

    * ``slope``: least-squares log-log slope over the final half.
    * ``quadratic``: ``(a, b, c)`` of ``a n^2 + b n + c`` fitted there.
    * ``transient_length``: last step (>= 1) at which ``m2`` departs from that
      quadratic by more than 5 %; zero when it never does.
    * ``oscillation_amplitude``: largest deviation, over the first quarter of
      the run, of the second difference of ``m2`` from its late-time value
      ``2a``, in units of ``2a``.
    """
    m2 = np.asarray(m2, float)
    N = m2.size - 1
    if N < MIN_FIT_STEPS:
        raise ConfigurationError(f"run of {N} steps is too short for a fit (need at least {MIN_FIT_STEPS})")
    n = np.arange(N + 1, dtype=float)
    if periodic:
        return GrowthFit(None, None, None, None, float(m2[-1] / N**2), diagnostic="periodic regime")
    half = n >= N / 2.0
    slope = loglog_slope(n[half], m2[half])
    a, b, c = np.polyfit(n[half], m2[half], 2)
    fitted = a * n**2 + b * n + c
    bad = np.nonzero(np.abs(m2[1:] - fitted[1:]) > TRANSIENT_TOLERANCE * np.abs(fitted[1:]))[0]
    transient = int(bad[-1] + 1) if bad.size else 0
    second = m2[2:] - 2.0 * m2[1:-1] + m2[:-2]  # centred at n = 1 .. N-1
    early = second[: N // 4]
    osc = float(np.max(np.abs(early - 2.0 * a)) / abs(2.0 * a))
    return GrowthFit(
        slope=slope,
        quadratic=(float(a), float(b), float(c)),
        transient_length=transient,
        oscillation_amplitude=osc,
        late_m2_over_n2=float(m2[-1] / N**2),
    )


@dataclass
class Fig1Result:
    params: ModelParams
    trajectory: Trajectory
    fit: GrowthFit

    @property
    def m2(self) -> np.ndarray:
        return self.trajectory.column("m2")


def run_fig1(
    kappa: float = 1.0,
    delta_tilde: float = 0.97 * math.pi,
    n_steps: int = 500,
    *,
    tau: float = 2.0 * math.pi,
    beta: float = 0.0,
    k_max: int | None = None,
    backend=Backend.BESSEL,
    initial: SpinorState | None = None,
    leakage_threshold: float = 1e-10,
) -> Fig1Result:
    """Second moment from ``|k=0>|g>`` at generic detuning and its growth fit."""
    if n_steps < MIN_FIT_STEPS:
        raise ConfigurationError(f"fig1 needs at least {MIN_FIT_STEPS} steps, got {n_steps}")
    if k_max is None:
        k_max = suggest_k_max(n_steps, abs(kappa))
    params = ModelParams(kappa, tau, delta_tilde, beta, k_max)
    if initial is None:
        initial = SpinorState.from_sites(k_max, b={0: 1.0})
    traj = evolve(initial, params, n_steps, backend, init="k=0,g", leakage_threshold=leakage_threshold)
    fit = analyse_growth(traj.column("m2"), periodic=is_antiresonant(params))
    return Fig1Result(params, traj, fit)


# -- entropy surface ---------------------------------------------------------


@dataclass
class Fig2Result:
    gamma: np.ndarray
    phi: np.ndarray
    S_numeric: np.ndarray
    S0_analytic: np.ndarray
    params: ModelParams
    n_steps: int
    leakage: float

    @property
    def abs_diff(self) -> np.ndarray:
        return np.abs(self.S_numeric - self.S0_analytic)

    def rows(self):
        for g, p, s, s0, d in zip(self.gamma, self.phi, self.S_numeric, self.S0_analytic, self.abs_diff):
            yield g, p, s, s0, d


def run_fig2(
    grid_size: int = 33,
    kappa: float = 1.0,
    n_steps: int = 500,
    *,
    k_max: int | None = None,
    backend=Backend.BESSEL,
) -> Fig2Result:
    """Entanglement entropy after a long resonant run against its asymptote.

    The two chirality basis states at ``k = 0`` are evolved once; every grid
    point is their superposition, which is exact because the map is linear.
    """
    if grid_size < 2:
        raise ConfigurationError("grid_size must be at least 2")
    if k_max is None:
        k_max = suggest_k_max(n_steps, kappa)
    params = ModelParams(kappa, 2.0 * math.pi, 0.0, 0.0, k_max)
    up = propagate(SpinorState.from_sites(k_max, a={0: 1.0}), params, n_steps, backend)
    down = propagate(SpinorState.from_sites(k_max, b={0: 1.0}), params, n_steps, backend)
    margin = default_margin(StepOperator(params, backend))
    leak = max(leakage(up, margin), leakage(down, margin))
    gammas = np.linspace(0.0, math.pi, grid_size)
    phis = np.linspace(0.0, 2.0 * math.pi, grid_size)
    G, P = np.meshgrid(gammas, phis, indexing="ij")
    S = np.empty_like(G)
    S0 = np.empty_like(G)
    for idx in np.ndindex(G.shape):
        init = BlochInit(float(G[idx]), float(P[idx]))
        c, s = init.amplitudes()
        state = SpinorState(c * up.a + s * down.a, c * up.b + s * down.b, k_max)
        S[idx] = entanglement_entropy(reduced_density(state))
        S0[idx] = asymptotic_entropy(init)
    return Fig2Result(G.ravel(), P.ravel(), S.ravel(), S0.ravel(), params, n_steps, leak)


# -- verification batteries --------------------------------------------------


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tolerance) or (self.tolerance == 0.0 and self.residual == 0.0)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{status}  {self.name:<44s} max residual {self.residual:.3e}  tol {self.tolerance:.0e}{extra}"


def verify_bessel(rng: np.random.Generator) -> list[Check]:
    checks = []
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 60))
        x = float(rng.uniform(-80.0, 80.0))
        worst = max(worst, abs(bessel.bessel_j(-n, x) - (-1) ** n * bessel.bessel_j(n, x)))
    checks.append(Check("parity J_-n = (-1)^n J_n", worst, 0.0))
    xs = (0.5, 1.0, 5.0, 50.0, 500.0)
    checks.append(Check("completeness sum J_m^2 = 1", max(bessel.completeness_residual(x) for x in xs), 1e-13))
    checks.append(Check("Neumann sum J_0 + 2 sum J_2m = 1", max(bessel.neumann_residual(x) for x in xs), 1e-13))
    worst = 0.0
    for x in np.concatenate([rng.uniform(0.01, 30.0, 40), np.geomspace(30.0, 1e4, 12)]):
        start = int(math.floor(bessel.turning_order(x))) + 1
        worst = max(worst, float(np.max(np.abs(bessel.bessel_row(start, start + 40, x)))))
    checks.append(Check("turning-point decay |J_m| < 1e-16", worst, 1e-16))
    worst = 0.0
    recurrence = bessel.BesselEvaluator(method=bessel.Method.BACKWARD_RECURRENCE)
    asymptotic = bessel.BesselEvaluator(method=bessel.Method.ASYMPTOTIC)
    for x in np.linspace(bessel.ASYMPTOTIC_CROSSOVER, 60.0, 25):
        for n in range(4):
            worst = max(worst, abs(recurrence(n, x) - asymptotic(n, x)))
    checks.append(Check("recurrence/asymptotic overlap", worst, 1e-12))
    return checks


def verify_identities(rng: np.random.Generator) -> list[Check]:
    add = max(
        bessel.verify_addition_identity(float(rng.uniform(1e-3, 5.0)), int(rng.integers(-10, 11)))
        for _ in range(200)
    )
    par = 0.0
    for _ in range(200):
        k0, k2 = (int(v) for v in rng.integers(-10, 11, 2))
        par = max(par, *bessel.verify_parity_sums(float(rng.uniform(1e-3, 5.0)), k0, k2))
    mom = 0.0
    for kappa in (0.3, 1.0, 2.7):
        for j in range(-10, 11):
            for l in range(-10, 11):
                mom = max(mom, *bessel.verify_moment_sums(j, l, kappa))
    return [
        Check("addition identity", add, 1e-13),
        Check("even / doubly-even parity sums", par, 1e-13),
        Check("first and second moment sums", mom, 1e-12),
    ]


def random_params(rng: np.random.Generator, k_max: int) -> ModelParams:
    return ModelParams(
        kappa=float(rng.uniform(0.0, 3.0)),
        tau=float(rng.uniform(0.0, 4.0 * math.pi)),
        delta_tilde=float(rng.uniform(0.0, 2.0 * math.pi)),
        beta=float(rng.uniform(-0.5, 0.5)),
        k_max=k_max,
    )


def backend_deviation(state: SpinorState, params: ModelParams) -> float:
    one = step_bessel(state, StepOperator(params, Backend.BESSEL))
    two = step_splitstep(state, StepOperator(params, Backend.SPLIT_STEP))
    return one.max_difference(two)


def verify_backends(rng: np.random.Generator, cases: int = 100) -> list[Check]:
    worst = 0.0
    for _ in range(cases):
        k_max = int(rng.integers(4, 80))
        worst = max(worst, backend_deviation(random_state(k_max, rng), random_params(rng, k_max)))
    return [Check(f"bessel vs split-step ({cases} random cases)", worst, 1e-10)]


def verify_closedform(rng: np.random.Generator) -> list[Check]:
    checks = []
    worst = 0.0
    for kappa in (0.5, 1.0, 2.0):
        k_max = suggest_k_max(100, kappa, width=9)
        params = ModelParams(kappa, 2.0 * math.pi, 0.0, 0.0, k_max)
        initial = random_state(k_max, rng, support=4)
        op = StepOperator(params)
        for n, state in enumerate(iterate(initial, op, 100), start=1):
            if n % 10 == 0:
                worst = max(worst, state.max_difference(resonant_state(initial, kappa, n)))
    checks.append(Check("resonant closed form vs iteration (n<=100)", worst, 1e-10))

    worst = 0.0
    params = ModelParams(1.0, 2.0 * math.pi, math.pi, 0.0, 40)
    op = StepOperator(params)
    for _ in range(5):
        initial = random_state(40, rng, support=8)
        for n, state in enumerate(iterate(initial, op, 100), start=1):
            worst = max(worst, state.max_difference(antiresonant_state(initial, 1.0, n)))
    checks.append(Check("antiresonant closed form vs iteration", worst, 1e-12))

    worst = 0.0
    for _ in range(10):
        kappa = float(rng.uniform(0.1, 1.0))
        n = int(rng.integers(1, 51))
        k_max = suggest_k_max(n, kappa, width=9)
        params = ModelParams(kappa, 2.0 * math.pi, 0.0, 0.0, k_max)
        initial = random_state(k_max, rng, support=4)
        many = propagate(initial, params, n)
        once = propagate(initial, params.replace(kappa=n * kappa), 1)
        worst = max(worst, many.max_difference(once))
    checks.append(Check("semigroup n steps at kappa = 1 step at n kappa", worst, 1e-10))

    worst = 0.0
    for _ in range(20):
        kappa = float(rng.uniform(0.2, 2.0))
        k_max = suggest_k_max(100, kappa, width=9)
        params = ModelParams(kappa, 2.0 * math.pi, 0.0, 0.0, k_max)
        initial = random_state(k_max, rng, support=4)
        traj = evolve(initial, params, 100)
        for n in (1, 10, 50, 100):
            rec = traj.steps[n]
            m1, m2 = analytic_moments(initial, kappa, n)
            worst = max(worst, abs(rec.m2 - m2) / abs(m2), abs(rec.m1 - m1) / max(abs(m2), 1.0) ** 0.5)
    checks.append(Check("analytic moments vs iteration (relative)", worst, 1e-8))

    worst = 0.0
    for _ in range(20):
        init = BlochInit(float(rng.uniform(0, math.pi)), float(rng.uniform(0, 2 * math.pi)))
        kappa = float(rng.uniform(0.1, 2.0))
        n = int(rng.integers(0, 100))
        rho = reduced_density(localized_resonant_state(init, kappa, n, suggest_k_max(n, kappa)))
        P_g, P_e, Q = closed_form_occupations(init, kappa, n)
        worst = max(worst, abs(rho.P_g - P_g), abs(rho.P_e - P_e), abs(rho.Q - Q))
    checks.append(Check("closed-form occupations vs lattice sums", worst, 1e-12))
    return checks


SUITES = {
    "bessel": verify_bessel,
    "identities": verify_identities,
    "backends": verify_backends,
    "closedform": verify_closedform,
}


def run_verify(suite: str, seed: int = 0) -> list[Check]:
    names = list(SUITES) if suite == "all" else [suite]
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ConfigurationError(f"unknown verification suite {suite!r}; choose from {sorted(SUITES) + ['all']}")
    checks = []
    for name in names:
        rng = np.random.default_rng(seed)
        checks.extend(SUITES[name](rng))
    return checks
