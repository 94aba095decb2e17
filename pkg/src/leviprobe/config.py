"""JSON scenario configs.

Complex numbers are written as ``[re, im]`` pairs. Jet literals are the
``exponent-tuple : coefficient`` line format of :mod:`leviprobe.jetcalc`,
either inline (``"rho": "..."``) or by file (``"rho_file": "path"``, relative to
the config's directory).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .hypersurface import SamplingConfig
from .probe import ProbeConfig

GEOMETRY_TAGS = ("siegel", "cylinder", "perturbed-siegel")
GROUP_TAGS = ("heisenberg-subgroup", "full-heisenberg", "cylinder-phic")
FILE_KEYS = ("rho_file", "tail_file", "h_file")


def complex_from_json(v) -> np.ndarray:
    """``[re, im]`` pairs (arbitrarily nested) to a complex array; bare reals pass through."""
    a = np.asarray(v, dtype=float)
    if a.ndim and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    return a.astype(complex)


def complex_to_json(z) -> list:
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1).tolist()


def _dataclass_from(cls, data: dict | None, what: str):
    data = dict(data or {})
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    return cls(**data)


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one pipeline run.

    ``geometry`` holds ``{"builtin": tag, ...params}`` or ``{"rho": literal, "n": n}``.
    ``group`` holds ``{"builtin": tag, ...}`` or ``{"generators": [[literal, ...], ...]}``;
    it may be ``None`` when ``planted`` describes the orbit family directly.
    ``kernel`` entries are keyword arguments of :class:`leviprobe.probe.Kernel`;
    a missing ``r2`` falls back to ``chart_radius``.
    """

    name: str = "scenario"
    geometry: dict = field(default_factory=lambda: {"builtin": "siegel", "n": 1})
    group: dict | None = None
    planted: dict | None = None
    base_point: list | None = None
    chart_radius: float = 1.0
    degree: int = 4
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    kernel: dict = field(default_factory=dict)
    support: SamplingConfig = field(default_factory=SamplingConfig)
    tol: float = 1e-9
    seed: int | None = None
    randomized: bool = False
    out_dir: str | None = None
    stem: str | None = None
    override_checks: bool = False
    expected: dict = field(default_factory=dict)
    base_dir: str | None = None

    def __post_init__(self):
        if isinstance(self.probe, dict):
            self.probe = _dataclass_from(ProbeConfig, self.probe, "probe")
        if isinstance(self.support, dict):
            self.support = _dataclass_from(SamplingConfig, self.support, "support")
        self.validate()

    def validate(self) -> None:
        if self.randomized and self.seed is None:
            raise ConfigError("randomized scenarios need an explicit seed")
        if self.degree < 1:
            raise ConfigError("jet degree must be positive")
        if self.chart_radius <= 0:
            raise ConfigError("chart radius must be positive")
        g = self.geometry
        if not isinstance(g, dict) or ("builtin" not in g and "rho" not in g and "rho_file" not in g):
            raise ConfigError("geometry needs a builtin tag or a rho literal")
        if "builtin" in g and g["builtin"] not in GEOMETRY_TAGS:
            raise ConfigError(f"unknown geometry {g['builtin']!r}; choose from {GEOMETRY_TAGS}")
        if self.group is not None:
            if "builtin" in self.group and self.group["builtin"] not in GROUP_TAGS:
                raise ConfigError(f"unknown group {self.group['builtin']!r}; choose from {GROUP_TAGS}")
            if "builtin" not in self.group and "generators" not in self.group:
                raise ConfigError("group needs a builtin tag or generator literals")
        for block in (self.geometry, self.group or {}, self.planted or {}):
            for key in FILE_KEYS:
                if key in block and not self.resolve(block[key]).is_file():
                    raise ConfigError(f"{key} {block[key]!r} does not exist")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if not p.is_absolute() and self.base_dir is not None:
            p = Path(self.base_dir) / p
        return p

    def read_literal(self, block: dict, key: str) -> str | None:
        if f"{key}_file" in block:
            return self.resolve(block[f"{key}_file"]).read_text()
        return block.get(key)

    @property
    def output_stem(self) -> str:
        return self.stem or self.name

    def output_paths(self) -> dict[str, Path] | None:
        if self.out_dir is None:
            return None
        d = self.resolve(self.out_dir)
        stem = self.output_stem
        return {"csv": d / f"{stem}.csv", "fit": d / f"{stem}.fit.json", "report": d / f"{stem}.report.json"}

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | None = None) -> "ScenarioConfig":
        data = dict(data)
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data.setdefault("base_dir", base_dir)
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {str(path)!r} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {str(path)!r} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(data, base_dir=str(path.parent))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def with_overrides(self, **kw) -> "ScenarioConfig":
        """Copy with CLI overrides; ``probe_*`` keys go to the probe block."""
        probe_kw = {k[6:]: v for k, v in kw.items() if k.startswith("probe_") and v is not None}
        top = {k: v for k, v in kw.items() if not k.startswith("probe_") and v is not None}
        probe = replace(self.probe, **probe_kw) if probe_kw else self.probe
        if top.get("override_checks"):
            probe = replace(probe, override=True)
        return replace(self, probe=probe, **top)
