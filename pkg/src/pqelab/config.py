"""Experiment configuration: schema, validation, and manifest resolution.

Config files are JSON documents mirroring :class:`ExperimentConfig`.  Every
field has an explicit default, and the resolved configuration (defaults
filled in) is echoed verbatim into the run manifest so an experiment is
reproducible from its output directory alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

__all__ = [
    "ConfigError",
    "HubbardSystem",
    "SystemConfig",
    "NoiseConfig",
    "ZneSection",
    "ProtocolSection",
    "OutputConfig",
    "ExperimentConfig",
    "load_config",
]

SOLVER_CHOICES = ("pqe", "nfc-adpqe", "feedback-adpqe")
FORMAT_CHOICES = ("csv", "json")


class ConfigError(ValueError):
    """A configuration document violates the schema."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _check_keys(section: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed - {"description"}
    _require(not unknown, f"unknown {where} keys: {sorted(unknown)}")


@dataclass(frozen=True)
class HubbardSystem:
    sites: int
    t: float
    u: float
    nelec: int

    def __post_init__(self) -> None:
        _require(self.sites >= 2, "hubbard: need at least two sites")
        _require(1 <= self.nelec <= 2 * self.sites, "hubbard: bad electron count")


@dataclass(frozen=True)
class SystemConfig:
    """Either one or more FCIDUMP paths (several = a geometry sweep) or an
    inline Hubbard chain definition."""

    fcidump_paths: tuple[str, ...] = ()
    hubbard: HubbardSystem | None = None

    def __post_init__(self) -> None:
        _require(
            bool(self.fcidump_paths) != (self.hubbard is not None),
            "system: give exactly one of 'fcidump' or 'hubbard'",
        )

    @property
    def is_sweep(self) -> bool:
        return len(self.fcidump_paths) > 1

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "SystemConfig":
        _check_keys(raw, {"fcidump", "hubbard"}, "system")
        _require(
            ("fcidump" in raw) != ("hubbard" in raw),
            "system: give exactly one of 'fcidump' or 'hubbard'",
        )
        if "fcidump" in raw:
            paths = raw["fcidump"]
            if isinstance(paths, str):
                paths = [paths]
            _require(
                isinstance(paths, list) and paths
                and all(isinstance(p, str) for p in paths),
                "system.fcidump: expected a path or a non-empty list of paths",
            )
            return cls(fcidump_paths=tuple(paths))
        if "hubbard" in raw:
            hub = raw["hubbard"]
            _check_keys(hub, {"sites", "t", "u", "nelec"}, "system.hubbard")
            try:
                return cls(
                    hubbard=HubbardSystem(
                        sites=int(hub["sites"]),
                        t=float(hub["t"]),
                        u=float(hub["u"]),
                        nelec=int(hub["nelec"]),
                    )
                )
            except KeyError as missing:
                raise ConfigError(f"system.hubbard: missing {missing}") from None
        raise ConfigError("system: give exactly one of 'fcidump' or 'hubbard'")

    def to_dict(self) -> dict[str, Any]:
        if self.hubbard is not None:
            return {
                "hubbard": {
                    "sites": self.hubbard.sites,
                    "t": self.hubbard.t,
                    "u": self.hubbard.u,
                    "nelec": self.hubbard.nelec,
                }
            }
        return {"fcidump": list(self.fcidump_paths)}


@dataclass(frozen=True)
class NoiseConfig:
    enabled: bool = False
    p1: float = 1e-3
    p2: float = 1e-2
    shots: int = 5000
    trajectories: int = 48

    def __post_init__(self) -> None:
        _require(0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0,
                 "noise: probabilities must lie in [0, 1]")
        _require(self.shots >= 0, "noise: shots must be non-negative")
        _require(self.trajectories >= 1, "noise: need at least one trajectory")

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "NoiseConfig":
        _check_keys(raw, {"enabled", "p1", "p2", "shots", "trajectories"}, "noise")
        defaults = cls()
        return cls(
            enabled=bool(raw.get("enabled", defaults.enabled)),
            p1=float(raw.get("p1", defaults.p1)),
            p2=float(raw.get("p2", defaults.p2)),
            shots=int(raw.get("shots", defaults.shots)),
            trajectories=int(raw.get("trajectories", defaults.trajectories)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "enabled": self.enabled,
            "p1": self.p1,
            "p2": self.p2,
            "shots": self.shots,
            "trajectories": self.trajectories,
        }


@dataclass(frozen=True)
class ZneSection:
    scale_factors: tuple[float, ...] = (1.0, 2.0, 3.0)
    order: int | None = None

    def __post_init__(self) -> None:
        _require(len(self.scale_factors) >= 2, "zne: need at least two scale factors")
        _require(all(c >= 1.0 for c in self.scale_factors), "zne: scales must be >= 1")
        _require(
            all(b > a for a, b in zip(self.scale_factors, self.scale_factors[1:])),
            "zne: scales must be strictly increasing",
        )
        if self.order is not None:
            _require(
                1 <= self.order <= len(self.scale_factors) - 1,
                "zne: order needs at least order+1 scale factors",
            )

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ZneSection":
        _check_keys(raw, {"scale_factors", "order"}, "zne")
        defaults = cls()
        scales = raw.get("scale_factors", list(defaults.scale_factors))
        _require(isinstance(scales, list), "zne.scale_factors: expected a list")
        order = raw.get("order", defaults.order)
        return cls(
            scale_factors=tuple(float(c) for c in scales),
            order=None if order is None else int(order),
        )

    def to_dict(self) -> dict[str, Any]:
        return {"scale_factors": list(self.scale_factors), "order": self.order}


@dataclass(frozen=True)
class ProtocolSection:
    terminate_at: int = 40
    average_last: int = 10
    repeats: int = 10
    seed: int = 20240822

    def __post_init__(self) -> None:
        _require(self.terminate_at >= 1, "protocol: need at least one iteration")
        _require(
            1 <= self.average_last <= self.terminate_at,
            "protocol: average window must fit in the iteration count",
        )
        _require(self.repeats >= 1, "protocol: need at least one repeat")

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ProtocolSection":
        _check_keys(
            raw, {"terminate_at", "average_last", "repeats", "seed"}, "protocol"
        )
        defaults = cls()
        return cls(
            terminate_at=int(raw.get("terminate_at", defaults.terminate_at)),
            average_last=int(raw.get("average_last", defaults.average_last)),
            repeats=int(raw.get("repeats", defaults.repeats)),
            seed=int(raw.get("seed", defaults.seed)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "terminate_at": self.terminate_at,
            "average_last": self.average_last,
            "repeats": self.repeats,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class OutputConfig:
    path: str = "out"
    format: str = "csv"

    def __post_init__(self) -> None:
        _require(self.format in FORMAT_CHOICES,
                 f"output.format: expected one of {FORMAT_CHOICES}")

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "OutputConfig":
        _check_keys(raw, {"path", "format"}, "output")
        defaults = cls()
        return cls(
            path=str(raw.get("path", defaults.path)),
            format=str(raw.get("format", defaults.format)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {"path": self.path, "format": self.format}


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig
    solver: str = "pqe"
    f_pps: float | None = None
    max_iterations: int = 200
    residue_tolerance: float = 1e-5
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    zne: ZneSection = field(default_factory=ZneSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self) -> None:
        _require(self.solver in SOLVER_CHOICES,
                 f"solver: expected one of {SOLVER_CHOICES}")
        if self.f_pps is not None:
            _require(0.0 < self.f_pps <= 1.0, "f_pps: must lie in (0, 1]")
        _require(self.max_iterations >= 1, "max_iterations: must be >= 1")
        _require(self.residue_tolerance > 0, "residue_tolerance: must be positive")
        if self.noise.enabled:
            _require(
                not self.system.is_sweep,
                "noisy protocol runs take a single system, not a sweep",
            )

    @property
    def effective_f_pps(self) -> float:
        """The partition fraction actually used (decoupled solvers default
        to the whole pool when none is given)."""
        return 1.0 if self.f_pps is None else self.f_pps

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ExperimentConfig":
        _require(isinstance(raw, Mapping), "config root must be an object")
        _check_keys(
            raw,
            {
                "system", "solver", "f_pps", "max_iterations",
                "residue_tolerance", "noise", "zne", "protocol", "output",
            },
            "config",
        )
        _require("system" in raw, "config: missing 'system'")
        f_pps = raw.get("f_pps")
        return cls(
            system=SystemConfig.from_dict(raw["system"]),
            solver=str(raw.get("solver", "pqe")),
            f_pps=None if f_pps is None else float(f_pps),
            max_iterations=int(raw.get("max_iterations", 200)),
            residue_tolerance=float(raw.get("residue_tolerance", 1e-5)),
            noise=NoiseConfig.from_dict(raw.get("noise", {})),
            zne=ZneSection.from_dict(raw.get("zne", {})),
            protocol=ProtocolSection.from_dict(raw.get("protocol", {})),
            output=OutputConfig.from_dict(raw.get("output", {})),
        )

    def resolved(self) -> dict[str, Any]:
        """Fully explicit configuration for the run manifest."""
        return {
            "system": self.system.to_dict(),
            "solver": self.solver,
            "f_pps": self.f_pps,
            "max_iterations": self.max_iterations,
            "residue_tolerance": self.residue_tolerance,
            "noise": self.noise.to_dict(),
            "zne": self.zne.to_dict(),
            "protocol": self.protocol.to_dict(),
            "output": self.output.to_dict(),
        }

    def with_overrides(
        self,
        out: str | None = None,
        fmt: str | None = None,
        seed: int | None = None,
    ) -> "ExperimentConfig":
        output = self.output
        if out is not None or fmt is not None:
            output = OutputConfig(
                path=out if out is not None else output.path,
                format=fmt if fmt is not None else output.format,
            )
        protocol = self.protocol
        if seed is not None:
            protocol = ProtocolSection(
                terminate_at=protocol.terminate_at,
                average_last=protocol.average_last,
                repeats=protocol.repeats,
                seed=seed,
            )
        return ExperimentConfig(
            system=self.system,
            solver=self.solver,
            f_pps=self.f_pps,
            max_iterations=self.max_iterations,
            residue_tolerance=self.residue_tolerance,
            noise=self.noise,
            zne=self.zne,
            protocol=protocol,
            output=output,
        )


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file is not valid JSON: {err}") from None
    return ExperimentConfig.from_dict(raw)
