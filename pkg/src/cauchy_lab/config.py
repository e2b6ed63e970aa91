"""Configuration management for cauchy-lab.

An experiment is described by one file, either YAML or the flat bracketed
``key = value`` format. Both feed the same pydantic models. Exponents and
weight factors are written in a small line grammar:

    constant <value>
    radial t=<x,y> base=<p0> amplitude=<a>

    factor anchor=<x,y> kind=power gamma=<g>
    factor anchor=<x,y> kind=log-power gamma=<g> beta=<b>
    factor anchor=<x,y> kind=oscillating gamma=<g> amp=<A> freq=<B>
    factor anchor=<x,y> kind=wave gamma=<g> amp=<A> freq=<B>
    factor anchor=<x,y> kind=table file=<path>
"""

import configparser
import hashlib
import json
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, Field, PrivateAttr, ValidationError, field_validator
from pydantic_settings import BaseSettings

from cauchy_lab.core.errors import ConfigError
from cauchy_lab.core.types import GridSpec
from cauchy_lab.exponent import ExponentFunction
from cauchy_lab.geometry import CurvePath, circle, read_curve, segment, spiral_example
from cauchy_lab.weights import CompositeWeight, RadialFactor


def parse_point(text: str) -> complex:
    """`x,y` -> x + iy."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected a point 'x,y', got '{text}'")
    return complex(float(parts[0]), float(parts[1]))


def _keywords(tokens: List[str], line: str) -> Dict[str, str]:
    pairs = {}
    for token in tokens:
        if "=" not in token:
            raise ValueError(f"expected key=value, got '{token}' in '{line}'")
        key, value = token.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def _require(pairs: Dict[str, str], keys: Tuple[str, ...], line: str) -> List[float]:
    missing = [k for k in keys if k not in pairs]
    if missing:
        raise ValueError(f"missing {', '.join(missing)} in '{line}'")
    return [float(pairs[k]) for k in keys]


@dataclass(frozen=True)
class ExponentSpec:
    kind: str
    value: float = 2.0
    center: complex = 0j
    amplitude: float = 0.0

    def build(self, curve: CurvePath) -> ExponentFunction:
        if self.kind == "constant":
            return ExponentFunction.constant(curve, self.value)
        return ExponentFunction.radial(curve, self.center, self.value, self.amplitude)


def parse_exponent_spec(line: str) -> ExponentSpec:
    tokens = line.split()
    if not tokens:
        raise ValueError("empty exponent spec")
    if tokens[0] == "constant" and len(tokens) == 2:
        value = float(tokens[1])
        if value <= 1.0:
            raise ValueError(f"constant exponent must be > 1, got {value}")
        return ExponentSpec("constant", value=value)
    if tokens[0] == "radial":
        pairs = _keywords(tokens[1:], line)
        base, amplitude = _require(pairs, ("base", "amplitude"), line)
        return ExponentSpec(
            "radial", value=base, center=parse_point(pairs.get("t", "0,0")), amplitude=amplitude
        )
    raise ValueError(f"unknown exponent spec '{line}'")


@dataclass(frozen=True)
class FactorSpec:
    anchor: complex
    kind: str
    params: Tuple[float, ...] = ()
    file: Optional[str] = None

    def build(self, base_dir: Path = Path(".")) -> RadialFactor:
        if self.kind == "power":
            return RadialFactor.power(*self.params)
        if self.kind == "log-power":
            return RadialFactor.log_power(*self.params)
        if self.kind == "oscillating":
            return RadialFactor.oscillating(*self.params)
        if self.kind == "wave":
            return RadialFactor.wave(*self.params)
        return RadialFactor.from_file(base_dir / self.file)


FACTOR_PARAMS = {
    "power": ("gamma",),
    "log-power": ("gamma", "beta"),
    "oscillating": ("gamma", "amp", "freq"),
    "wave": ("gamma", "amp", "freq"),
}


def parse_factor_spec(line: str) -> FactorSpec:
    tokens = line.split()
    if not tokens or tokens[0] != "factor":
        raise ValueError(f"weight lines start with 'factor': '{line}'")
    pairs = _keywords(tokens[1:], line)
    if "anchor" not in pairs or "kind" not in pairs:
        raise ValueError(f"factor needs anchor= and kind=: '{line}'")
    anchor = parse_point(pairs["anchor"])
    kind = pairs["kind"]
    if kind == "table":
        if "file" not in pairs:
            raise ValueError(f"table factor needs file=: '{line}'")
        return FactorSpec(anchor, kind, file=pairs["file"])
    if kind not in FACTOR_PARAMS:
        raise ValueError(f"unknown factor kind '{kind}'")
    return FactorSpec(anchor, kind, tuple(_require(pairs, FACTOR_PARAMS[kind], line)))


class CurveConfig(BaseModel):
    """Curve selection: builtin family or file."""

    kind: str = "segment"
    start: str = "0,0"
    end: str = "1,0"
    center: str = "0,0"
    radius: float = 1.0
    alpha: float = 2.0
    nodes: int = 257
    path: Optional[str] = None

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in ("segment", "circle", "spiral", "file"):
            raise ValueError(f"unknown curve kind '{value}'")
        return value

    @field_validator("start", "end", "center")
    @classmethod
    def _point(cls, value: str) -> str:
        parse_point(value)
        return value

    def factory(self, base_dir: Path = Path(".")) -> Callable[[int], CurvePath]:
        """Curve at a requested resolution."""
        if self.kind == "segment":
            a, b = parse_point(self.start), parse_point(self.end)
            return lambda n: segment(a, b, n)
        if self.kind == "circle":
            c = parse_point(self.center)
            return lambda n: circle(c, self.radius, n)
        if self.kind == "spiral":
            return lambda n: spiral_example(self.alpha, n)
        if self.path is None:
            raise ConfigError("curve kind 'file' needs a path")
        stored = read_curve(base_dir / self.path)
        return lambda n: stored if n == stored.node_count else stored.resample(n)

    def build(self, base_dir: Path = Path("."), nodes: Optional[int] = None) -> CurvePath:
        return self.factory(base_dir)(nodes or self.nodes)


class ExponentConfig(BaseModel):
    """Exponent line, e.g. ``constant 2``."""

    spec: str = "constant 2"

    @field_validator("spec")
    @classmethod
    def _grammar(cls, value: str) -> str:
        parse_exponent_spec(value)
        return value

    def parsed(self) -> ExponentSpec:
        return parse_exponent_spec(self.spec)


class WeightConfig(BaseModel):
    """Weight factor lines; empty means w ≡ 1."""

    factors: List[str] = Field(default_factory=list)

    @field_validator("factors")
    @classmethod
    def _grammar(cls, value: List[str]) -> List[str]:
        anchors = [parse_factor_spec(line).anchor for line in value]
        if len(set(anchors)) != len(anchors):
            raise ValueError("weight anchors must be distinct")
        return value

    def build(self, base_dir: Path = Path(".")) -> CompositeWeight:
        specs = [parse_factor_spec(line) for line in self.factors]
        return CompositeWeight(tuple((s.anchor, s.build(base_dir)) for s in specs))


class GridConfig(BaseModel):
    """Supremum grid and Carleson sampling."""

    t_random: int = 16
    r_count: int = 24
    r_min: Optional[float] = None
    halvings: int = 4
    floor_ratio: float = 1e-3
    finite_tolerance: float = 0.01
    divergence_growth: float = 1.3
    carleson_t_samples: int = 64
    carleson_r_samples: int = 48
    carleson_resolutions: List[int] = Field(default_factory=lambda: [1024, 2048])

    def to_spec(self, seed: int) -> GridSpec:
        return GridSpec(
            t_random=self.t_random,
            r_count=self.r_count,
            r_min=self.r_min,
            halvings=self.halvings,
            floor_ratio=self.floor_ratio,
            finite_tolerance=self.finite_tolerance,
            divergence_growth=self.divergence_growth,
            seed=seed,
        )


class OperatorConfig(BaseModel):
    """Operator probe settings."""

    meshes: List[int] = Field(default_factory=lambda: [256, 512, 1024, 2048])
    trials: int = 64

    @field_validator("meshes")
    @classmethod
    def _increasing(cls, value: List[int]) -> List[int]:
        if len(value) < 3 or any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("meshes must be strictly increasing with at least 3 entries")
        return value


class SweepConfig(BaseModel):
    """Khvedelidze boundary sweep over (p, λ) with one anchor."""

    anchor: str = "0,0"
    p_values: List[float] = Field(default_factory=lambda: [1.5, 2.0, 3.0])
    lambdas: List[float] = Field(default_factory=lambda: [-0.75, -0.25, 0.0, 0.25, 0.4, 0.6, 0.75])
    conditions: bool = True

    @field_validator("anchor")
    @classmethod
    def _point(cls, value: str) -> str:
        parse_point(value)
        return value


class StabilityConfig(BaseModel):
    """ε grid for w -> w^(1+ε)."""

    epsilons: List[float] = Field(
        default_factory=lambda: [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]
    )
    probe: bool = True


class LoggingConfig(BaseModel):
    """Logging configuration; --log-level and CAUCHY_LAB_LOG_LEVEL take precedence."""

    level: str = "INFO"

    @field_validator("level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"unknown logging level '{value}'")
        return level


class ExperimentConfig(BaseModel):
    """Main experiment configuration."""

    seed: int = 0
    output: Optional[str] = None
    function: str = "constant 1"
    curve: CurveConfig = Field(default_factory=CurveConfig)
    exponent: ExponentConfig = Field(default_factory=ExponentConfig)
    weight: WeightConfig = Field(default_factory=WeightConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    operator: OperatorConfig = Field(default_factory=OperatorConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    stability: StabilityConfig = Field(default_factory=StabilityConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    _base_dir: Path = PrivateAttr(default_factory=lambda: Path("."))

    @field_validator("function")
    @classmethod
    def _function_grammar(cls, value: str) -> str:
        parse_function_spec(value)
        return value

    @property
    def base_dir(self) -> Path:
        return self._base_dir

    def with_base_dir(self, base_dir: Path) -> "ExperimentConfig":
        self._base_dir = Path(base_dir)
        return self

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def grid_spec(self) -> GridSpec:
        return self.grid.to_spec(self.seed)

    @classmethod
    def from_data(cls, data: Dict[str, Any], lines: Optional[Dict[tuple, int]] = None):
        try:
            return cls(**(data or {}))
        except ValidationError as e:
            first = e.errors()[0]
            loc = tuple(str(part) for part in first["loc"])
            line = _line_for(loc, lines or {})
            raise ConfigError(f"{'.'.join(loc)}: {first['msg']}", line=line) from e

    @classmethod
    def from_yaml(cls, path: Path) -> "ExperimentConfig":
        """Load configuration from YAML file."""
        try:
            with open(path, "r") as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(f"invalid YAML: {e}", line=mark.line + 1 if mark else None) from e

        # Replace environment variables
        data = cls._replace_env_vars(data)

        return cls.from_data(data).with_base_dir(Path(path).parent)

    @classmethod
    def from_ini(cls, path: Path) -> "ExperimentConfig":
        """Load configuration from the bracketed key = value format."""
        data, lines = parse_ini(Path(path).read_text())
        return cls.from_data(data, lines).with_base_dir(Path(path).parent)

    @staticmethod
    def _replace_env_vars(data: Any) -> Any:
        """Recursively replace ${VAR} patterns with environment variables."""
        if isinstance(data, dict):
            return {k: ExperimentConfig._replace_env_vars(v) for k, v in data.items()}
        elif isinstance(data, list):
            return [ExperimentConfig._replace_env_vars(item) for item in data]
        elif isinstance(data, str):
            pattern = re.compile(r"\$\{([^}]+)\}")
            for var in pattern.findall(data):
                data = data.replace(f"${{{var}}}", os.getenv(var, ""))
            return data
        else:
            return data


def _line_for(loc: Tuple[str, ...], lines: Dict[tuple, int]) -> Optional[int]:
    for depth in range(len(loc), 0, -1):
        if loc[:depth] in lines:
            return lines[loc[:depth]]
    return None


INI_SECTIONS = (
    "experiment", "curve", "exponent", "weight", "grid",
    "operator", "sweep", "stability", "logging",
)
LIST_KEYS = {
    ("grid", "carleson_resolutions"),
    ("operator", "meshes"),
    ("sweep", "p_values"),
    ("sweep", "lambdas"),
    ("stability", "epsilons"),
}


# Sections holding raw spec lines instead of key = value pairs.
RAW_SECTIONS = ("exponent", "weight")


def _ini_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=None,
        strict=True,
        interpolation=None,
    )
    parser.optionxform = str
    return parser


def parse_ini(text: str) -> Tuple[Dict[str, Any], Dict[tuple, int]]:
    """Parse the flat format into model data plus a (section, key) -> line map.

    ``[exponent]`` holds one raw exponent line and ``[weight]`` one raw
    factor line per factor; every other section holds ``key = value`` lines
    read by configparser. Keys of ``[experiment]`` land at the top level.
    A first pass records line numbers and lifts out the raw sections.
    """
    lines: Dict[tuple, int] = {}
    raw: Dict[str, List[Tuple[int, str]]] = {name: [] for name in RAW_SECTIONS}
    kept: List[str] = []
    section: Optional[str] = None
    for number, source in enumerate(text.splitlines(), start=1):
        line = source.strip()
        kept.append(line)
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header '{line}'", line=number)
            section = line[1:-1].strip()
            if section not in INI_SECTIONS:
                raise ConfigError(f"unknown section [{section}]", line=number)
            continue
        if section is None:
            raise ConfigError("entry outside of any section", line=number)
        if section in RAW_SECTIONS:
            raw[section].append((number, line))
            kept[-1] = ""
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{line}'", line=number)
        key = line.split("=", 1)[0].strip()
        lines[(key,) if section == "experiment" else (section, key)] = number

    parser = _ini_parser()
    try:
        parser.read_string("\n".join(kept))
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key '{e.option}' in [{e.section}]", line=e.lineno) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", line=e.lineno) from e
    except configparser.Error as e:
        raise ConfigError(str(e)) from e

    data: Dict[str, Any] = {}
    for name in parser.sections():
        if name in RAW_SECTIONS:
            continue
        target = data if name == "experiment" else data.setdefault(name, {})
        for key, value in parser.items(name):
            if (name, key) in LIST_KEYS:
                target[key] = [v.strip() for v in value.split(",") if v.strip()]
            else:
                target[key] = value

    if len(raw["exponent"]) > 1:
        raise ConfigError("[exponent] takes a single spec line", line=raw["exponent"][1][0])
    for number, line in raw["exponent"]:
        data["exponent"] = {"spec": line}
        lines[("exponent", "spec")] = number
    for index, (number, line) in enumerate(raw["weight"]):
        data.setdefault("weight", {}).setdefault("factors", []).append(line)
        lines[("weight", "factors", str(index))] = number
        lines.setdefault(("weight", "factors"), number)
    return data, lines


def parse_function_spec(line: str) -> Tuple[str, complex, float]:
    """`constant <c>` or `power t=<x,y> s=<s>` for the norm command."""
    tokens = line.split()
    if tokens and tokens[0] == "constant" and len(tokens) == 2:
        return "constant", 0j, float(tokens[1])
    if tokens and tokens[0] == "power":
        pairs = _keywords(tokens[1:], line)
        (s,) = _require(pairs, ("s",), line)
        return "power", parse_point(pairs.get("t", "0,0")), s
    raise ValueError(f"unknown function spec '{line}'")


class EnvSettings(BaseSettings):
    """Environment-based settings."""

    log_level: Optional[str] = None
    seed: Optional[int] = None
    workers: int = 4

    class Config:
        env_prefix = "CAUCHY_LAB_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"  # Allow extra fields in .env


def load_config(config_path: Optional[Path] = None) -> ExperimentConfig:
    """
    Load an experiment configuration.

    Args:
        config_path: Path to config file (default: ./experiment.yaml)

    Returns:
        ExperimentConfig object
    """
    if config_path is None:
        config_path = Path("experiment.yaml")
    config_path = Path(config_path)

    if not config_path.exists():
        raise ConfigError(f"Config file not found: {config_path}")

    if config_path.suffix in (".yaml", ".yml"):
        return ExperimentConfig.from_yaml(config_path)
    return ExperimentConfig.from_ini(config_path)
