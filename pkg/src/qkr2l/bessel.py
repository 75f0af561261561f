"""Integer-order Bessel functions of the first kind and the sum identities
built on them.

Two evaluation routes are provided:

* Miller backward recurrence, normalised with the Neumann sum
  ``J_0 + 2 * sum(J_2m) = 1``.  Stable for every order because the start
  order is placed far beyond the turning point ``m ~ x``.
* The Hankel large-argument expansion, used for small orders at large
  arguments (``x >= ASYMPTOTIC_CROSSOVER``) where the recurrence would
  need O(x) steps for a single value.

Every ``verify_*`` helper returns a residual rather than a boolean so that
callers can log margins.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BesselRangeError

MAX_ARGUMENT = 1e8
ASYMPTOTIC_CROSSOVER = 25.0
NEGLIGIBLE = 1e-16
SERIES_BELOW = 1e-3

# ln-magnitude head room between the Miller start order and the smallest
# value that must come out accurate (45 nats ~ 3e-20).
_START_MARGIN = 45.0
_RESCALE_ABOVE = 1e250
_SQRT_HALF = math.sqrt(0.5)
# (cos, sin) of pi/4 + r*pi/2 for r = n mod 4.
_PHASE_TABLE = (
    (_SQRT_HALF, _SQRT_HALF),
    (-_SQRT_HALF, _SQRT_HALF),
    (-_SQRT_HALF, -_SQRT_HALF),
    (_SQRT_HALF, -_SQRT_HALF),
)


class Method(str, enum.Enum):
    BACKWARD_RECURRENCE = "backward-recurrence"
    ASYMPTOTIC = "asymptotic-large-argument"


def turning_order(x: float) -> float:
    """Order beyond which ``|J_m(x)| < 1e-16`` for every larger ``m``.

    Past the turning point the decay follows the Airy tail, whose width
    scales as ``x**(1/3)``; the constant 13 is the smallest integer that
    keeps the bound valid up to ``x = 2e4``.
    """
    x = abs(x)
    return x + max(20.0, 13.0 * x ** (1.0 / 3.0))


def ipow(m: int) -> complex:
    """Exact ``1j**m`` for integer ``m``."""
    return (1, 1j, -1, -1j)[m % 4]


def _check_argument(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or abs(x) >= MAX_ARGUMENT:
        raise BesselRangeError(f"argument {x!r} outside supported range |x| < {MAX_ARGUMENT:g}")
    return x


def _decay_exponent(m: float, x: float) -> float:
    # Debye estimate of ln|J_m(x) / J_peak| for m > x; zero in the oscillatory region.
    if m <= x:
        return 0.0
    alpha = math.acosh(m / x)
    return -m * (alpha - math.tanh(alpha))


def _miller_start(n_top: int, x: float) -> int:
    base = max(float(n_top), x)
    target = _decay_exponent(base, x) - _START_MARGIN
    start = int(base) + 2
    while _decay_exponent(start, x) > target:
        start += 1
    return start + 10


def _series_row(n_top: int, x: float) -> np.ndarray:
    # ascending series, only used for tiny x where 2m/x would overflow the recurrence
    n = np.arange(n_top + 1, dtype=float)
    lead = np.empty(n_top + 1)
    lead[0] = 1.0
    for m in range(1, n_top + 1):
        lead[m] = lead[m - 1] * (x / 2.0) / m
    q = -(x / 2.0) ** 2
    total = np.ones(n_top + 1)
    term = np.ones(n_top + 1)
    for s in range(1, 6):
        term = term * q / (s * (s + n))
        total += term
    return lead * total


def _miller_row(n_top: int, x: float) -> np.ndarray:
    """``J_0(x) .. J_n_top(x)`` for ``x > 0`` by normalised backward recurrence."""
    if x < SERIES_BELOW:
        return _series_row(n_top, x)
    start = _miller_start(n_top, x)
    out = np.zeros(n_top + 1)
    upper, current = 0.0, 1e-30
    norm = 0.0
    for m in range(start, 0, -1):
        # current holds J_m, upper holds J_{m+1}
        if m <= n_top:
            out[m] = current
        if m % 2 == 0:
            norm += 2.0 * current
        lower = (2.0 * m / x) * current - upper
        upper, current = current, lower
        if abs(current) > _RESCALE_ABOVE:
            upper /= _RESCALE_ABOVE
            current /= _RESCALE_ABOVE
            norm /= _RESCALE_ABOVE
            if m <= n_top:
                out[m:] /= _RESCALE_ABOVE
    out[0] = current
    norm += current
    return out / norm


def _hankel(n: int, x: float, tol: float = 1e-17) -> float | None:
    """Large-argument expansion for ``n >= 0``; None when the series will not
    reach ``tol`` before its terms start growing."""
    mu = 4.0 * n * n
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    smallest = math.inf
    for k in range(1, 400):
        term *= (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        size = abs(term)
        if size < tol:
            break
        if size > smallest:
            return None
        smallest = size
        if k % 2:
            q_sum += term if (k // 2) % 2 == 0 else -term
        else:
            p_sum += term if (k // 2) % 2 == 0 else -term
    else:
        return None
    cos_t, sin_t = _PHASE_TABLE[n % 4]
    cx, sx = math.cos(x), math.sin(x)
    cos_chi = cx * cos_t + sx * sin_t
    sin_chi = sx * cos_t - cx * sin_t
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * cos_chi - q_sum * sin_chi)


def _order_sign(n: int, x: float) -> int:
    # J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x)
    flips = (n < 0) + (x < 0)
    return -1 if (flips % 2 == 1 and n % 2 == 1) else 1


@dataclass(frozen=True)
class BesselEvaluator:
    """Configurable evaluator.

    ``method=None`` picks the route automatically: the Hankel expansion for
    ``|x| >= crossover`` when it converges to ``target_accuracy``, the Miller
    recurrence otherwise.
    """

    method: Method | None = None
    target_accuracy: float = 1e-14
    crossover: float = ASYMPTOTIC_CROSSOVER

    def method_for(self, n: int, x: float) -> Method:
        if self.method is not None:
            return Method(self.method)
        ax = abs(x)
        if ax >= self.crossover and _hankel(abs(n), ax, self.target_accuracy * 1e-3) is not None:
            return Method.ASYMPTOTIC
        return Method.BACKWARD_RECURRENCE

    def __call__(self, n: int, x: float) -> float:
        n = int(n)
        x = _check_argument(x)
        if x == 0.0:
            return 1.0 if n == 0 else 0.0
        ax, an = abs(x), abs(n)
        sign = _order_sign(n, x)
        if self.method_for(n, x) is Method.ASYMPTOTIC:
            value = _hankel(an, ax, self.target_accuracy * 1e-3)
            if value is None:
                raise BesselRangeError(f"asymptotic series does not converge for n={n}, x={x}")
        else:
            value = float(_miller_row(an, ax)[an])
        return sign * value

    def row(self, n_min: int, n_max: int, x: float) -> np.ndarray:
        """``J_n(x)`` for ``n = n_min .. n_max`` from a single recurrence sweep."""
        n_min, n_max = int(n_min), int(n_max)
        if n_min > n_max:
            raise BesselRangeError(f"empty order range [{n_min}, {n_max}]")
        x = _check_argument(x)
        orders = np.arange(n_min, n_max + 1)
        if x == 0.0:
            return (orders == 0).astype(float)
        top = max(abs(n_min), abs(n_max))
        base = _miller_row(top, abs(x))
        values = base[np.abs(orders)]
        odd = (orders % 2) == 1
        flip = odd & ((orders < 0) ^ (x < 0))
        values[flip] *= -1.0
        return values


_DEFAULT = BesselEvaluator()


def bessel_j(n: int, x: float) -> float:
    """J_n(x) for integer ``n`` and real ``|x| < 1e8``."""
    return _DEFAULT(n, x)


def bessel_row(n_min: int, n_max: int, x: float) -> np.ndarray:
    return _DEFAULT.row(n_min, n_max, x)


def bessel_band(x: float, eps: float = NEGLIGIBLE) -> int:
    """Largest order ``m`` with ``|J_m(x)| >= eps``; all higher orders are below ``eps``."""
    top = int(math.ceil(turning_order(x)))
    row = np.abs(bessel_row(0, top, x))
    significant = np.nonzero(row >= eps)[0]
    return int(significant[-1]) if significant.size else 0


# -- identity checks ---------------------------------------------------------


def _default_band(kappa: float, extra: int = 0) -> int:
    return int(math.ceil(turning_order(kappa))) + extra


def completeness_residual(x: float) -> float:
    """``|sum_m J_m(x)^2 - 1|`` over all significant orders."""
    top = int(math.ceil(turning_order(x)))
    row = bessel_row(0, top, x)
    return abs(math.fsum([row[0] ** 2] + list(2.0 * row[1:] ** 2)) - 1.0)


def neumann_residual(x: float) -> float:
    """``|J_0(x) + 2 sum_m J_2m(x) - 1|``."""
    top = int(math.ceil(turning_order(x)))
    row = bessel_row(0, top, x)
    return abs(math.fsum([row[0]] + list(2.0 * row[2::2])) - 1.0)


def verify_addition_identity(kappa: float, mu: int, band: int | None = None) -> float:
    """Residual of ``sum_nu J_{mu-nu}(k) J_nu(k) = J_mu(2k)`` truncated at ``|nu| <= band``."""
    mu = int(mu)
    if band is None:
        band = _default_band(kappa)
    reach = band + abs(mu)
    row = bessel_row(-reach, reach, kappa)
    nu = np.arange(-band, band + 1)
    terms = row[nu + reach] * row[mu - nu + reach]
    return abs(math.fsum(terms) - bessel_j(mu, 2.0 * kappa))


def verify_parity_sums(kappa: float, k0: int, k2: int, band: int | None = None) -> tuple[float, float]:
    """Residuals of the even-restricted and doubly-restricted convolution sums.

    With ``mu = k2 - k0`` and ``nu = k1 - k0`` the sums over even ``nu``
    (and, for the second, also even ``mu - nu``) are checked against
    ``(J_mu(2k) + delta_{mu,0}) / 2``, the second carrying an extra
    even-``mu`` selector.
    """
    mu = int(k2) - int(k0)
    if band is None:
        band = _default_band(kappa)
    reach = band + abs(mu)
    row = bessel_row(-reach, reach, kappa)
    nu = np.arange(-band, band + 1)
    terms = row[nu + reach] * row[mu - nu + reach]
    even = nu % 2 == 0
    both = even & ((mu - nu) % 2 == 0)
    target = 0.5 * (bessel_j(mu, 2.0 * kappa) + (1.0 if mu == 0 else 0.0))
    residual_even = abs(math.fsum(terms[even]) - target)
    residual_both = abs(math.fsum(terms[both]) - (target if mu % 2 == 0 else 0.0))
    return residual_even, residual_both


def moment_sum_I1(j: int, l: int, kappa: float) -> complex:
    """Closed form of ``i^(l-j) sum_k k J_{k-j}(kappa) J_{k-l}(kappa)``."""
    value = complex(j if j == l else 0)
    if l == j + 1:
        value += 0.5j * kappa
    elif l == j - 1:
        value -= 0.5j * kappa
    return value


def moment_sum_I2(j: int, l: int, kappa: float) -> complex:
    """Closed form of ``i^(l-j) sum_k k^2 J_{k-j}(kappa) J_{k-l}(kappa)``."""
    k2 = kappa * kappa
    value = 0j
    if l == j:
        value += 0.5 * k2 + l * l
    elif abs(l - j) == 2:
        value -= 0.25 * k2
    elif l == j + 1:
        value += 1j * kappa * (0.5 + j)
    elif l == j - 1:
        value += 1j * kappa * (0.5 - j)
    return value


def moment_sum_direct(power: int, j: int, l: int, kappa: float, band: int | None = None) -> complex:
    """Truncated defining sum ``i^(l-j) sum_k k^power J_{k-j}(kappa) J_{k-l}(kappa)``."""
    if band is None:
        band = _default_band(kappa)
    lo, hi = min(j, l) - band, max(j, l) + band
    reach = max(abs(lo - j), abs(hi - j), abs(lo - l), abs(hi - l))
    row = bessel_row(-reach, reach, kappa)
    k = np.arange(lo, hi + 1)
    terms = k.astype(float) ** power * row[k - j + reach] * row[k - l + reach]
    return ipow(l - j) * math.fsum(terms)


def verify_moment_sums(j: int, l: int, kappa: float, band: int | None = None) -> tuple[float, float]:
    """Residuals ``|closed form - defining sum|`` for the first and second moment sums."""
    r1 = abs(moment_sum_I1(j, l, kappa) - moment_sum_direct(1, j, l, kappa, band))
    r2 = abs(moment_sum_I2(j, l, kappa) - moment_sum_direct(2, j, l, kappa, band))
    return r1, r2
