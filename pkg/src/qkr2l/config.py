"""Run configuration: ``key = value`` files merged with command-line overrides.

Every key is validated before anything runs and unknown keys are rejected.
Real-valued keys accept multiples of pi (``0.97pi``, ``pi/2``, ``-2pi``).
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigurationError
from .evolution import OBSERVABLES, Backend

_PI_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)?\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?$")


def parse_number(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace("π", "pi")
    if "pi" in s:
        sign = 1.0
        if s.startswith("-"):
            sign, s = -1.0, s[1:].lstrip()
        elif s.startswith("+"):
            s = s[1:].lstrip()
        match = _PI_RE.match(s)
        if not match:
            raise ConfigurationError(f"cannot parse {text!r} as a multiple of pi")
        coef = float(match.group(1)) if match.group(1) else 1.0
        den = float(match.group(2)) if match.group(2) else 1.0
        if den == 0.0:
            raise ConfigurationError(f"division by zero in {text!r}")
        return sign * coef * math.pi / den
    try:
        value = float(s)
    except ValueError:
        raise ConfigurationError(f"cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise ConfigurationError(f"{text!r} is not finite")
    return value


def parse_int(text) -> int:
    if isinstance(text, int) and not isinstance(text, bool):
        return text
    try:
        value = float(str(text).strip())
    except ValueError:
        raise ConfigurationError(f"cannot parse {text!r} as an integer") from None
    if value != int(value):
        raise ConfigurationError(f"{text!r} is not an integer")
    return int(value)


def parse_amplitudes(text) -> tuple:
    """``"k:a:b; k:a:b"`` with complex ``a``, ``b`` (Python syntax, e.g. ``0.5j``)."""
    if isinstance(text, (list, tuple)):
        entries = []
        for item in text:
            k, a, b = item
            entries.append((int(k), _complex(a), _complex(b)))
        return tuple(entries)
    entries = []
    for chunk in re.split(r"[;\s]+", str(text).strip()):
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"amplitude entry {chunk!r} must look like k:a:b")
        try:
            entries.append((int(parts[0]), complex(parts[1]), complex(parts[2])))
        except ValueError:
            raise ConfigurationError(f"cannot parse amplitude entry {chunk!r}") from None
    if not entries:
        raise ConfigurationError("empty amplitude list")
    return tuple(entries)


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def parse_record(text) -> tuple:
    names = text if isinstance(text, (list, tuple)) else [s for s in re.split(r"[,\s]+", str(text).strip()) if s]
    unknown = [name for name in names if name not in OBSERVABLES]
    if unknown:
        raise ConfigurationError(f"unknown observables {unknown}; choose from {list(OBSERVABLES)}")
    return tuple(names)


def parse_backend(text) -> str:
    return Backend.parse(text).value


def parse_sweep_key(text) -> str:
    keys = [s for s in re.split(r"[,\s]+", str(text).strip()) if s]
    if len(keys) != 1:
        raise ConfigurationError(f"exactly one swept key is allowed, got {keys}")
    key = _canonical_key(keys[0])
    if key not in SWEEPABLE:
        raise ConfigurationError(f"cannot sweep {key!r}; sweepable keys are {sorted(SWEEPABLE)}")
    return key


def parse_values(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    values = tuple(parse_number(s) for s in re.split(r"[,;]+|\s+", str(text).strip()) if s)
    if not values:
        raise ConfigurationError("sweep value list is empty")
    return values


SWEEPABLE = {"kappa", "tau", "delta_tilde", "beta", "gamma", "phi"}

_PARSERS = {
    "kappa": parse_number,
    "tau": parse_number,
    "delta_tilde": parse_number,
    "beta": parse_number,
    "k_max": parse_int,
    "gamma": parse_number,
    "phi": parse_number,
    "amplitudes": parse_amplitudes,
    "steps": parse_int,
    "backend": parse_backend,
    "record": parse_record,
    "out": str,
    "leakage_threshold": parse_number,
    "seed": parse_int,
    "jobs": parse_int,
    "grid_size": parse_int,
    "sweep": parse_sweep_key,
    "values": parse_values,
}

_ALIASES = {"kmax": "k_max", "delta": "delta_tilde", "n_steps": "steps", "output": "out"}


def _canonical_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return _ALIASES.get(key, key)


@dataclass(frozen=True)
class RunConfig:
    """All run settings; ``None`` means "use the command's default"."""

    kappa: float | None = None
    tau: float | None = None
    delta_tilde: float | None = None
    beta: float | None = None
    k_max: int | None = None
    gamma: float | None = None
    phi: float | None = None
    amplitudes: tuple | None = None
    steps: int | None = None
    backend: str | None = None
    record: tuple | None = None
    out: str | None = None
    leakage_threshold: float | None = None
    seed: int | None = None
    jobs: int | None = None
    grid_size: int | None = None
    sweep: str | None = None
    values: tuple | None = None

    def __post_init__(self):
        has_bloch = self.gamma is not None or self.phi is not None
        if has_bloch and self.amplitudes is not None:
            raise ConfigurationError("give either gamma/phi or an amplitude list, not both")
        if has_bloch and (self.gamma is None or self.phi is None):
            raise ConfigurationError("gamma and phi must be given together")
        if self.steps is not None and self.steps < 0:
            raise ConfigurationError("steps must be non-negative")
        if self.k_max is not None and self.k_max < 1:
            raise ConfigurationError("k_max must be at least 1")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigurationError("jobs must be at least 1")
        if self.leakage_threshold is not None and not self.leakage_threshold > 0:
            raise ConfigurationError("leakage_threshold must be positive")
        if self.values is not None and len(self.values) == 0:
            raise ConfigurationError("sweep value list is empty")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        parsed = {}
        for raw_key, value in mapping.items():
            key = _canonical_key(raw_key)
            if key not in _PARSERS:
                raise ConfigurationError(f"unknown configuration key {raw_key!r}")
            if key in parsed:
                raise ConfigurationError(f"duplicate configuration key {raw_key!r}")
            if value is None:
                continue
            parsed[key] = _PARSERS[key](value)
        return cls(**parsed)

    def merged(self, overrides: "RunConfig") -> "RunConfig":
        changes = {f.name: getattr(overrides, f.name) for f in fields(self) if getattr(overrides, f.name) is not None}
        if "gamma" in changes or "phi" in changes:
            changes.setdefault("amplitudes", None)
        elif "amplitudes" in changes:
            changes.update(gamma=None, phi=None)
        return replace(self, **changes)

    def with_defaults(self, **defaults) -> "RunConfig":
        changes = {key: value for key, value in defaults.items() if getattr(self, key) is None}
        if self.gamma is not None or self.amplitudes is not None:
            changes.pop("amplitudes", None)
            changes.pop("gamma", None)
            changes.pop("phi", None)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        data = {}
        for key, value in asdict(self).items():
            if value is None:
                continue
            if key == "amplitudes":
                value = [[k, [a.real, a.imag], [b.real, b.imag]] for k, a, b in value]
            elif isinstance(value, tuple):
                value = list(value)
            data[key] = value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return cls.from_mapping(data)


def _value_text(key: str, value) -> str:
    if key == "amplitudes":
        return "; ".join(f"{k}:{complex(a)!r}:{complex(b)!r}".replace(" ", "") for k, a, b in value)
    if isinstance(value, (tuple, list)):
        return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_file_text(config: RunConfig) -> str:
    """``key = value`` lines that :func:`read_config_file` parses back exactly."""
    lines = [f"{f.name} = {_value_text(f.name, getattr(config, f.name))}"
             for f in fields(config) if getattr(config, f.name) is not None]
    return "\n".join(lines) + "\n"


def read_config_file(path) -> RunConfig:
    text = Path(path).read_text()
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        canonical = _canonical_key(key)
        if canonical in mapping:
            raise ConfigurationError(f"{path}:{lineno}: duplicate key {key!r}")
        mapping[canonical] = value
    try:
        return RunConfig.from_mapping(mapping)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
