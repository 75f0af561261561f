"""Chirality reduced density matrix and entanglement entropy (base-2 logarithm).

Naming follows the closed forms: ``P_g`` is the weight of the upper (``a``)
component and ``P_e`` that of the lower (``b``) component, even though the
upper component is the one carrying the detuning phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericIntegrityError
from .lattice import BlochInit, SpinorState

EIGENVALUE_SLACK = 1e-12


@dataclass(frozen=True)
class ReducedDensityMatrix:
    P_g: float
    P_e: float
    Q: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.P_g, self.Q], [self.Q.conjugate(), self.P_e]], dtype=complex)

    @property
    def trace(self) -> float:
        return self.P_g + self.P_e

    def eigenvalues(self) -> tuple[float, float]:
        """``(lambda_plus, lambda_minus)`` from the trace-one closed form."""
        det = self.P_g * self.P_e - abs(self.Q) ** 2
        disc = 1.0 - 4.0 * det
        if disc < 0.0:
            if disc < -4.0 * EIGENVALUE_SLACK:
                raise NumericIntegrityError(f"reduced density matrix has complex spectrum (disc={disc:g})")
            disc = 0.0
        root = math.sqrt(disc)
        return 0.5 * (1.0 + root), 0.5 * (1.0 - root)

    @property
    def entropy(self) -> float:
        return entanglement_entropy(self)


def reduced_density(state: SpinorState) -> ReducedDensityMatrix:
    """Partial trace over momentum of ``|psi><psi|``."""
    a, b = state.a, state.b
    return ReducedDensityMatrix(
        P_g=float(np.vdot(a, a).real),
        P_e=float(np.vdot(b, b).real),
        Q=complex(np.vdot(b, a)),  # sum_k a_k conj(b_k)
    )


def _binary_entropy(lam_plus: float, lam_minus: float) -> float:
    total = 0.0
    for lam in (lam_plus, lam_minus):
        if lam < -EIGENVALUE_SLACK or lam > 1.0 + EIGENVALUE_SLACK:
            raise NumericIntegrityError(f"eigenvalue {lam!r} outside [0, 1]")
        lam = min(max(lam, 0.0), 1.0)
        if lam > 0.0:
            total -= lam * math.log2(lam)
    return total


def entanglement_entropy(rho: ReducedDensityMatrix) -> float:
    """von Neumann entropy of the 2x2 reduced matrix, ``0 log 0 = 0``."""
    if abs(rho.trace - 1.0) > 1e-10:
        raise NumericIntegrityError(f"reduced density matrix has trace {rho.trace!r}")
    return _binary_entropy(*rho.eigenvalues())


def entropy_from_eigenvalues(lam_plus: float, lam_minus: float) -> float:
    return _binary_entropy(lam_plus, lam_minus)


def asymptotic_eigenvalues(init: BlochInit) -> tuple[float, float]:
    c = math.cos(init.phi) * math.sin(init.gamma)
    return 0.5 * (1.0 + c), 0.5 * (1.0 - c)


def asymptotic_entropy(init: BlochInit) -> float:
    """Long-time entropy for a localized start at resonance."""
    return _binary_entropy(*asymptotic_eigenvalues(init))
