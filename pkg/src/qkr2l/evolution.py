"""One-period Floquet step and trajectory iteration.

The step is ``U = exp(-i[delta_tilde |e><e| + tau (k + beta)^2]) exp(i kappa cos(theta) sigma_x)``,
applied right to left: kick first, then free evolution.  Two independent
backends implement the kick:

``bessel-matrix``
    Banded convolution in momentum space with coefficients
    ``i^m J_m(kappa)``; even orders keep the chirality, odd orders swap it.
``split-step``
    Transform each component to the angle grid, apply the 2x2 rotation
    pointwise, transform back.

Both use open boundaries: amplitude pushed beyond ``|k| = k_max`` is dropped.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft

from .bessel import bessel_band as _bessel_band
from .bessel import bessel_row, ipow
from .entanglement import ReducedDensityMatrix, entanglement_entropy, reduced_density
from .errors import ConfigurationError, DimensionError
from .lattice import BlochInit, ModelParams, SpinorState, moments, probability_distribution

DEFAULT_LEAKAGE_THRESHOLD = 1e-10
TWO_PI = 2.0 * math.pi


class Backend(str, enum.Enum):
    BESSEL = "bessel-matrix"
    SPLIT_STEP = "split-step"

    @classmethod
    def parse(cls, value) -> "Backend":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"bessel": cls.BESSEL, "bessel-matrix": cls.BESSEL, "matrix": cls.BESSEL,
                   "splitstep": cls.SPLIT_STEP, "split-step": cls.SPLIT_STEP, "split": cls.SPLIT_STEP}
        try:
            return aliases[key]
        except KeyError:
            raise ConfigurationError(f"unknown backend {value!r}; expected bessel or splitstep") from None


class CapacityWarning(UserWarning):
    """The lattice is probably too small for the requested number of steps."""


def kick_rotation(theta: float, kappa: float) -> np.ndarray:
    """``exp(i kappa cos(theta) sigma_x)`` as a 2x2 matrix."""
    arg = kappa * math.cos(theta)
    c, s = math.cos(arg), math.sin(arg)
    return np.array([[c, 1j * s], [1j * s, c]])


def _turns(x: np.ndarray) -> np.ndarray:
    return x - np.floor(x)


def free_phases(params: ModelParams) -> tuple[np.ndarray, complex]:
    """``exp(-i (k+beta)^2 tau)`` on the lattice and the detuning factor ``exp(-i delta_tilde)``.

    The kinetic phase is reduced modulo one turn piecewise so that
    ``tau = 2 pi``, ``beta = 0`` gives exactly one on every site.
    """
    k = params.momenta().astype(np.int64)
    beta = params.beta
    r = params.tau / TWO_PI
    cycles = _turns((k * k).astype(float) * r)
    if beta != 0.0:
        cycles = cycles + _turns(2.0 * beta * r * k.astype(float)) + _turns(beta * beta * r)
    kinetic = np.exp(-1j * TWO_PI * _turns(cycles))
    d = params.delta_tilde
    detuning = complex(math.cos(d), -math.sin(d))
    return kinetic, detuning


@dataclass(frozen=True, eq=False)
class StepOperator:
    """Immutable one-period propagator for a given parameter set and backend.

    ``bessel_band`` defaults to the largest order with ``|J_m(kappa)| >= 1e-16``.
    ``theta_grid_size`` (split-step only) defaults to a fast FFT length of at
    least ``2 k_max + 1 + 2 bessel_band``, enough zero padding that the
    periodic angle transform never folds amplitude back into the lattice.
    """

    params: ModelParams
    backend: Backend = Backend.BESSEL
    bessel_band: int | None = None
    theta_grid_size: int | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "backend", Backend.parse(self.backend))
        band = self.bessel_band
        if band is None:
            band = _bessel_band(self.params.kappa)
        if band < 0:
            raise ConfigurationError("bessel_band must be non-negative")
        object.__setattr__(self, "bessel_band", int(band))
        size = self.params.size
        grid = self.theta_grid_size
        if grid is None:
            grid = sp_fft.next_fast_len(size + 2 * self.bessel_band)
        if grid < size:
            raise ConfigurationError(f"theta grid of {grid} points is smaller than the lattice ({size} sites)")
        object.__setattr__(self, "theta_grid_size", int(grid))
        kinetic, detuning = free_phases(self.params)
        self._cache["kinetic"] = kinetic
        self._cache["detuning"] = detuning
        if self.backend is Backend.BESSEL:
            self._build_kernels()
        else:
            self._build_grid()

    def _build_kernels(self):
        band = min(self.bessel_band, self.params.size - 1)
        m = np.arange(-band, band + 1)
        coeff = bessel_row(-band, band, self.params.kappa) * np.array([ipow(int(v)) for v in m])
        odd = (m % 2) == 1
        even_kernel = np.where(odd, 0.0, coeff)
        odd_kernel = np.where(odd, coeff, 0.0) * self.params.kick_sign
        self._cache.update(band=band, even=even_kernel, odd=odd_kernel)

    def _build_grid(self):
        grid = self.theta_grid_size
        theta = -math.pi + TWO_PI * np.arange(grid) / grid
        arg = self.params.signed_kappa * np.cos(theta)
        k = self.params.momenta()
        self._cache.update(
            theta=theta,
            cos_kick=np.cos(arg),
            isin_kick=1j * np.sin(arg),
            index=k % grid,
            parity=np.where(k % 2 == 0, 1.0, -1.0),
        )

    @property
    def theta(self) -> np.ndarray:
        if "theta" not in self._cache:
            self._build_grid()
        return self._cache["theta"]

    def kick_field(self) -> np.ndarray:
        """Pointwise kick matrices on the angle grid, shape ``(G, 2, 2)``."""
        if "cos_kick" not in self._cache:
            self._build_grid()
        c, s = self._cache["cos_kick"], self._cache["isin_kick"]
        return np.stack([np.stack([c, s], -1), np.stack([s, c], -1)], -2)

    def apply(self, state: SpinorState) -> SpinorState:
        if self.backend is Backend.BESSEL:
            return step_bessel(state, self)
        return step_splitstep(state, self)

    def _free(self, a: np.ndarray, b: np.ndarray) -> SpinorState:
        kinetic = self._cache["kinetic"]
        return SpinorState(a * (kinetic * self._cache["detuning"]), b * kinetic, self.params.k_max)


def _check_lattice(state: SpinorState, op: StepOperator):
    if state.k_max != op.params.k_max:
        raise DimensionError(f"state has k_max={state.k_max} but operator expects {op.params.k_max}")


def _banded(x: np.ndarray, kernel: np.ndarray, band: int) -> np.ndarray:
    return np.convolve(x, kernel)[band: band + x.size]


def step_bessel(state: SpinorState, op: StepOperator) -> SpinorState:
    """One period with the banded Bessel kick matrix."""
    _check_lattice(state, op)
    if op.backend is not Backend.BESSEL:
        raise ConfigurationError("operator was built for the split-step backend")
    band, even, odd = op._cache["band"], op._cache["even"], op._cache["odd"]
    a, b = state.a, state.b
    new_a = _banded(a, even, band) + _banded(b, odd, band)
    new_b = _banded(b, even, band) + _banded(a, odd, band)
    return op._free(new_a, new_b)


def step_splitstep(state: SpinorState, op: StepOperator) -> SpinorState:
    """One period with the kick applied pointwise on the angle grid."""
    _check_lattice(state, op)
    if op.backend is not Backend.SPLIT_STEP:
        raise ConfigurationError("operator was built for the bessel-matrix backend")
    grid = op.theta_grid_size
    index, parity = op._cache["index"], op._cache["parity"]
    c, s = op._cache["cos_kick"], op._cache["isin_kick"]

    def to_angle(x):
        padded = np.zeros(grid, complex)
        padded[index] = x * parity
        return sp_fft.ifft(padded, norm="forward")

    def to_momentum(psi):
        return sp_fft.fft(psi, norm="forward")[index] * parity

    psi_a, psi_b = to_angle(state.a), to_angle(state.b)
    kicked_a = c * psi_a + s * psi_b
    kicked_b = s * psi_a + c * psi_b
    return op._free(to_momentum(kicked_a), to_momentum(kicked_b))


def leakage(state: SpinorState, margin: int) -> float:
    """Probability mass in the outer ``margin`` sites at each lattice edge."""
    margin = int(margin)
    if margin < 0 or margin >= state.k_max:
        raise ConfigurationError(f"margin must satisfy 0 <= margin < k_max={state.k_max}")
    if margin == 0:
        return 0.0
    P = probability_distribution(state)
    return float(np.sum(P[:margin]) + np.sum(P[-margin:]))


def default_margin(op: StepOperator) -> int:
    return max(1, min(op.bessel_band, op.params.k_max // 4))


def support_width(state: SpinorState) -> int:
    nonzero = np.nonzero(probability_distribution(state) > 0.0)[0]
    return int(nonzero[-1] - nonzero[0] + 1) if nonzero.size else 0


def required_k_max(width: int, n_steps: int, kappa: float) -> int:
    """Lattice half-width suggested for ``n_steps`` kicks from a support of ``width`` sites."""
    return int(math.ceil(width / 2.0 + n_steps * kappa + 40))


def iterate(state: SpinorState, op: StepOperator, n_steps: int):
    """Yield the state after 1, 2, ..., ``n_steps`` periods."""
    for _ in range(int(n_steps)):
        state = op.apply(state)
        yield state


OBSERVABLES = ("m1", "m2", "variance", "P_g", "P_e", "Q", "S", "norm", "leakage")


@dataclass(frozen=True)
class StepRecord:
    n: int
    m1: float
    m2: float
    variance: float
    P_g: float
    P_e: float
    Q: complex
    S: float
    norm: float
    leakage: float
    flagged: bool = False


def observe(n: int, state: SpinorState, margin: int, threshold: float, record=None) -> StepRecord:
    wanted = set(OBSERVABLES if record is None else record)
    unknown = wanted - set(OBSERVABLES)
    if unknown:
        raise ConfigurationError(f"unknown observables {sorted(unknown)}")
    nan = float("nan")
    P = probability_distribution(state)
    m1, m2, var = moments(P, state.k_max)
    rho = reduced_density(state)
    norm = rho.trace
    if norm > 0.0:
        normed = ReducedDensityMatrix(rho.P_g / norm, rho.P_e / norm, rho.Q / norm)
        S = entanglement_entropy(normed)
    else:
        S = nan
    leak = leakage(state, margin) if margin < state.k_max else float(np.sum(P))
    values = dict(m1=m1, m2=m2, variance=var, P_g=rho.P_g, P_e=rho.P_e, Q=rho.Q, S=S, norm=norm, leakage=leak)
    for name in OBSERVABLES:
        if name not in wanted and name != "leakage":
            values[name] = complex(nan, nan) if name == "Q" else nan
    return StepRecord(n=n, flagged=leak > threshold, **values)


@dataclass
class Trajectory:
    steps: list[StepRecord]
    params: ModelParams
    init: BlochInit | str | None
    backend: Backend = Backend.BESSEL
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD
    final_state: SpinorState | None = None

    @property
    def truncation_compromised(self) -> bool:
        return any(rec.flagged for rec in self.steps)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in self.steps])

    def __len__(self):
        return len(self.steps)


def evolve(
    state: SpinorState,
    params: ModelParams,
    n_steps: int,
    backend=Backend.BESSEL,
    record=None,
    *,
    init: BlochInit | str | None = None,
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD,
    margin: int | None = None,
    bessel_band: int | None = None,
    theta_grid_size: int | None = None,
) -> Trajectory:
    """Iterate the Floquet map and record observables after every period.

    The returned trajectory has ``n_steps + 1`` records (the initial state
    first).  A record whose edge leakage exceeds ``leakage_threshold`` is
    flagged; the run is not aborted.
    """
    n_steps = int(n_steps)
    if n_steps < 0:
        raise ConfigurationError("n_steps must be non-negative")
    if state.k_max != params.k_max:
        raise DimensionError(f"state has k_max={state.k_max} but params have k_max={params.k_max}")
    op = StepOperator(params, backend, bessel_band=bessel_band, theta_grid_size=theta_grid_size)
    needed = required_k_max(support_width(state), n_steps, params.kappa)
    if needed > params.k_max:
        warnings.warn(
            f"k_max={params.k_max} is below the suggested {needed} for {n_steps} steps at kappa={params.kappa:g}; "
            "relying on leakage monitoring",
            CapacityWarning,
            stacklevel=2,
        )
    if margin is None:
        margin = default_margin(op)
    records = [observe(0, state, margin, leakage_threshold, record)]
    for n, state in enumerate(iterate(state, op, n_steps), start=1):
        records.append(observe(n, state, margin, leakage_threshold, record))
    return Trajectory(
        steps=records,
        params=params,
        init=init,
        backend=op.backend,
        leakage_threshold=leakage_threshold,
        final_state=state,
    )


def propagate(state: SpinorState, params: ModelParams, n_steps: int, backend=Backend.BESSEL, **op_kwargs) -> SpinorState:
    """State after ``n_steps`` periods without recording observables."""
    if state.k_max != params.k_max:
        raise DimensionError(f"state has k_max={state.k_max} but params have k_max={params.k_max}")
    op = StepOperator(params, backend, **op_kwargs)
    for state in iterate(state, op, n_steps):
        pass
    return state
