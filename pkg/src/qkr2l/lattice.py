"""Dimensionless parameters and spinor states on the truncated momentum lattice.

Momentum ``k`` runs over ``[-k_max, k_max]`` and is stored in one contiguous
array with offset ``k_max`` (index ``i`` holds ``k = i - k_max``).  The upper
component ``a`` pairs with the excited level, ``b`` with the ground level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidParameterError


def reduce_quasimomentum(beta: float) -> float:
    """Map ``beta`` into ``[-1/2, 1/2)``."""
    reduced = (float(beta) + 0.5) % 1.0 - 0.5
    if reduced >= 0.5:  # floating-point edge of the modulo
        reduced -= 1.0
    return reduced


@dataclass(frozen=True)
class ModelParams:
    """Everything that fixes one Floquet step.

    A negative ``kappa`` is stored as ``|kappa|`` with ``kick_sign = -1``.
    Flipping the kick sign is the same as conjugating the step with
    ``sigma_z`` in chirality space, which the evolution engine applies.  Runs
    from a start with a single chirality component (or any ``sigma_z``
    eigenstate) therefore give the same ``P_k``, moments and entropy.
    """

    kappa: float
    tau: float
    delta_tilde: float
    beta: float = 0.0
    k_max: int = 64
    kick_sign: int = field(default=1)

    def __post_init__(self):
        for name in ("kappa", "tau", "delta_tilde", "beta"):
            value = getattr(self, name)
            if not math.isfinite(float(value)):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise InvalidParameterError(f"k_max must be a positive integer, got {self.k_max!r}")
        if self.kick_sign not in (1, -1):
            raise InvalidParameterError("kick_sign must be +1 or -1")
        sign = self.kick_sign
        if self.kappa < 0:
            sign = -sign
        object.__setattr__(self, "kappa", abs(float(self.kappa)))
        object.__setattr__(self, "kick_sign", sign)
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "delta_tilde", float(self.delta_tilde))
        object.__setattr__(self, "beta", reduce_quasimomentum(self.beta))
        object.__setattr__(self, "k_max", int(self.k_max))

    @property
    def size(self) -> int:
        return 2 * self.k_max + 1

    @property
    def signed_kappa(self) -> float:
        return self.kick_sign * self.kappa

    def momenta(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    def replace(self, **changes) -> "ModelParams":
        values = dict(
            kappa=self.signed_kappa,
            tau=self.tau,
            delta_tilde=self.delta_tilde,
            beta=self.beta,
            k_max=self.k_max,
        )
        values.update(changes)
        return ModelParams(**values)


def make_params(K, hbar, k_L, M, T, Delta, beta=0.0, k_max=64) -> ModelParams:
    """Reduce the physical kick, recoil and detuning data to dimensionless form.

    ``kappa = K/hbar``, ``tau = k_L^2 hbar T / (2M)``, ``delta_tilde = T Delta``.
    """
    if not M > 0:
        raise InvalidParameterError(f"mass must be positive, got {M!r}")
    if not T > 0:
        raise InvalidParameterError(f"kick period must be positive, got {T!r}")
    if not hbar > 0:
        raise InvalidParameterError(f"hbar must be positive, got {hbar!r}")
    if k_L == 0:
        raise InvalidParameterError("laser wave vector must be non-zero")
    return ModelParams(
        kappa=K / hbar,
        tau=k_L * k_L * hbar * T / (2.0 * M),
        delta_tilde=T * Delta,
        beta=beta,
        k_max=k_max,
    )


@dataclass(frozen=True)
class BlochInit:
    """Chirality qubit angles for a state sharply localized at ``k = 0``."""

    gamma: float
    phi: float

    def __post_init__(self):
        eps = 1e-12
        if not (-eps <= self.gamma <= math.pi + eps):
            raise InvalidParameterError(f"gamma must lie in [0, pi], got {self.gamma!r}")
        if not (-eps <= self.phi <= 2.0 * math.pi + eps):
            raise InvalidParameterError(f"phi must lie in [0, 2pi], got {self.phi!r}")

    def amplitudes(self) -> tuple[complex, complex]:
        return (
            complex(math.cos(self.gamma / 2.0)),
            complex(math.cos(self.phi), math.sin(self.phi)) * math.sin(self.gamma / 2.0),
        )


@dataclass(frozen=True, eq=False)
class SpinorState:
    """Two complex amplitude arrays on ``k = -k_max .. k_max``."""

    a: np.ndarray
    b: np.ndarray
    k_max: int

    def __post_init__(self):
        a = np.array(self.a, dtype=complex)
        b = np.array(self.b, dtype=complex)
        size = 2 * int(self.k_max) + 1
        if a.shape != (size,) or b.shape != (size,):
            raise DimensionError(
                f"components must have shape ({size},) for k_max={self.k_max}, got {a.shape} and {b.shape}"
            )
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "k_max", int(self.k_max))

    @classmethod
    def zeros(cls, k_max: int) -> "SpinorState":
        size = 2 * k_max + 1
        return cls(np.zeros(size, complex), np.zeros(size, complex), k_max)

    @classmethod
    def from_sites(cls, k_max: int, a: dict | None = None, b: dict | None = None) -> "SpinorState":
        """Build a state from ``{k: amplitude}`` maps (not normalised)."""
        size = 2 * k_max + 1
        arrays = []
        for sites in (a or {}, b or {}):
            arr = np.zeros(size, complex)
            for k, value in sites.items():
                if abs(k) > k_max:
                    raise DimensionError(f"momentum {k} outside lattice of half-width {k_max}")
                arr[k + k_max] = value
            arrays.append(arr)
        return cls(arrays[0], arrays[1], k_max)

    @property
    def momenta(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    def amplitude(self, k: int) -> tuple[complex, complex]:
        return complex(self.a[k + self.k_max]), complex(self.b[k + self.k_max])

    def scaled(self, factor: complex) -> "SpinorState":
        return SpinorState(self.a * factor, self.b * factor, self.k_max)

    def normalized(self) -> "SpinorState":
        norm = total_norm(self)
        if norm == 0.0:
            raise InvalidParameterError("cannot normalise the zero state")
        return self.scaled(1.0 / math.sqrt(norm))

    def max_difference(self, other: "SpinorState") -> float:
        if other.k_max != self.k_max:
            raise DimensionError("states live on different lattices")
        return float(max(np.max(np.abs(self.a - other.a)), np.max(np.abs(self.b - other.b))))

    def distance(self, other: "SpinorState") -> float:
        """Euclidean norm of the difference."""
        if other.k_max != self.k_max:
            raise DimensionError("states live on different lattices")
        diff = np.concatenate([self.a - other.a, self.b - other.b])
        return float(np.linalg.norm(diff))


def bloch_state(init: BlochInit, k_max: int) -> SpinorState:
    up, down = init.amplitudes()
    return SpinorState.from_sites(k_max, a={0: up}, b={0: down})


def random_state(k_max: int, rng: np.random.Generator, support: int | None = None) -> SpinorState:
    """Normalised state with complex Gaussian amplitudes on ``|k| <= support``."""
    size = 2 * k_max + 1
    support = k_max if support is None else min(support, k_max)
    mask = np.abs(np.arange(-k_max, k_max + 1)) <= support
    a = np.zeros(size, complex)
    b = np.zeros(size, complex)
    n = int(mask.sum())
    a[mask] = rng.normal(size=n) + 1j * rng.normal(size=n)
    b[mask] = rng.normal(size=n) + 1j * rng.normal(size=n)
    return SpinorState(a, b, k_max).normalized()


def total_norm(state: SpinorState) -> float:
    return float(np.sum(np.abs(state.a) ** 2) + np.sum(np.abs(state.b) ** 2))


def probability_distribution(state: SpinorState) -> np.ndarray:
    """``P_k = |a_k|^2 + |b_k|^2`` indexed like the state arrays."""
    return np.abs(state.a) ** 2 + np.abs(state.b) ** 2


def moments(P: np.ndarray, k_max: int | None = None) -> tuple[float, float, float]:
    """First and second moments and variance of a lattice distribution.

    ``P`` is assumed centred on ``k = 0`` (length ``2*k_max + 1``).
    """
    P = np.asarray(P, dtype=float)
    if k_max is None:
        if P.size % 2 != 1:
            raise DimensionError("distribution length must be odd")
        k_max = P.size // 2
    k = np.arange(-k_max, k_max + 1, dtype=float)
    m1 = float(np.dot(k, P))
    m2 = float(np.dot(k * k, P))
    return m1, m2, max(m2 - m1 * m1, 0.0)
