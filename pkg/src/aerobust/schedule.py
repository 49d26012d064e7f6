"""Severity schedule: per-kind corruption parameters for severities 1..5.

The schedule lives in a YAML file (one mapping per kind, every value an
array of 5 entries) so parameterizations are versioned config rather
than code.  The loader validates shape and records a sha256 checksum of
the file bytes for job reports.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigurationError, ParameterError

CORRUPTION_CATEGORIES: dict[str, tuple[str, ...]] = {
    "noise": ("gaussian_noise", "shot_noise", "impulse_noise", "speckle_noise"),
    "blur": ("defocus_blur", "glass_blur", "motion_blur", "zoom_blur", "gaussian_blur"),
    "weather": ("snow", "frost", "fog", "brightness", "spatter"),
    "digital": ("contrast", "elastic_transform", "pixelate", "jpeg_compression", "saturate"),
}

CORRUPTION_KINDS: tuple[str, ...] = tuple(
    kind for kinds in CORRUPTION_CATEGORIES.values() for kind in kinds
)

SEVERITIES: tuple[int, ...] = (1, 2, 3, 4, 5)


def category_of(kind: str) -> str:
    for category, kinds in CORRUPTION_CATEGORIES.items():
        if kind in kinds:
            return category
    raise ParameterError(f"unknown corruption kind {kind!r}; valid: {', '.join(CORRUPTION_KINDS)}")


@dataclass(frozen=True)
class SeveritySchedule:
    """Validated parameter tables plus the checksum of their source file."""

    params: dict[str, dict[str, list]]
    checksum: str = ""
    source: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def for_spec(self, kind: str, severity: int) -> dict:
        """Parameter dict for one (kind, severity) cell."""
        if kind not in self.params:
            raise ParameterError(
                f"unknown corruption kind {kind!r}; valid: {', '.join(CORRUPTION_KINDS)}"
            )
        if severity not in SEVERITIES:
            raise ParameterError(f"severity {severity} outside 1..5")
        key = (kind, severity)
        if key not in self._cache:
            table = self.params[kind]
            self._cache[key] = {name: values[severity - 1] for name, values in table.items()}
        return self._cache[key]


def _validate(raw: object, source: str) -> dict[str, dict[str, list]]:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{source}: schedule must be a mapping of kind tables")
    missing = [k for k in CORRUPTION_KINDS if k not in raw]
    if missing:
        raise ConfigurationError(f"{source}: missing kinds: {', '.join(missing)}")
    unknown = [k for k in raw if k not in CORRUPTION_KINDS]
    if unknown:
        raise ConfigurationError(f"{source}: unknown kinds: {', '.join(unknown)}")
    params: dict[str, dict[str, list]] = {}
    for kind, table in raw.items():
        if not isinstance(table, dict) or not table:
            raise ConfigurationError(f"{source}: {kind} must map parameter names to arrays")
        clean: dict[str, list] = {}
        for name, values in table.items():
            if not isinstance(values, list) or len(values) != len(SEVERITIES):
                raise ConfigurationError(
                    f"{source}: {kind}.{name} must be an array of {len(SEVERITIES)} entries"
                )
            clean[name] = list(values)
        params[kind] = clean
    return params


def load_schedule(path: str | Path) -> SeveritySchedule:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read schedule {p}: {exc}") from exc
    try:
        raw = yaml.safe_load(data)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{p}: invalid YAML: {exc}") from exc
    return SeveritySchedule(
        params=_validate(raw, str(p)),
        checksum=hashlib.sha256(data).hexdigest(),
        source=str(p),
    )


def default_schedule() -> SeveritySchedule:
    """The packaged schedule file."""
    ref = resources.files("aerobust").joinpath("data/schedule.yaml")
    data = ref.read_bytes()
    raw = yaml.safe_load(data)
    return SeveritySchedule(
        params=_validate(raw, "builtin schedule"),
        checksum=hashlib.sha256(data).hexdigest(),
        source="builtin",
    )
