"""Configuration defaults and experiment config loading."""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)

# Default locations; can be overridden via CLI args.
DEFAULT_OUT_DIR = Path("results")
DEFAULT_CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

ORACLE_TOLERANCE = 1e-9
ZERO_ANGLE_TOLERANCE = 1e-12
MAX_GATE_QUBITS = 14
MAX_DENSE_QUBITS = 10

SCHEMES = ("jacobi", "gauss-seidel", "q-form")
BACKENDS = ("gate", "emulation")
INITIAL_GUESSES = ("b", "zero", "random")


@dataclass
class ExperimentConfig:
    """Flat parameter set shared by every experiment.

    Fields not used by a given command are ignored by it.
    """

    experiment: str = "solve"
    scheme: str = "jacobi"
    backend: str = "emulation"
    system: Optional[Path] = None
    rhs: Optional[Path] = None
    builtin: str = "demo2"
    initial_guess: str = "b"
    k: int = 10
    K: int = 30
    L: int = 5
    mu: float = 0.08
    Lx: float = 1.0
    T: float = 0.5
    N: int = 128
    M: int = 150
    Nx: int = 128
    Ny: int = 128
    x_min: float = -2.0
    x_max: float = 2.0
    y_min: float = -2.0
    y_max: float = 2.0
    omega: float = 2.0
    rho_bar: float = 1.0
    dt: float = 0.0
    threshold: float = 1e-6
    kappa_min: float = 3.0
    kappa_max: float = 70.0
    kappa_points: int = 12
    kappa_target: float = 24.0
    L_values: str = "5,10,15,20"
    mode: str = "multiplication"
    workers: int = 4
    plots: bool = False
    force: bool = False
    out: Path = DEFAULT_OUT_DIR
    seed: int = 0

    def validate(self) -> "ExperimentConfig":
        if self.scheme not in SCHEMES:
            raise ConfigError(f"Unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"Unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if self.initial_guess not in INITIAL_GUESSES:
            raise ConfigError(f"Unknown initial_guess {self.initial_guess!r}")
        if self.mode not in ("multiplication", "q-form"):
            raise ConfigError(f"Unknown resource mode {self.mode!r}")
        for name in ("k", "K", "L"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.N < 2 or self.M < 1:
            raise ConfigError("N must be >= 2 and M >= 1")
        if self.Nx < 4 or self.Ny < 4:
            raise ConfigError("Nx and Ny must be >= 4")
        if self.mu < 0:
            raise ConfigError("mu must be non-negative")
        if self.rho_bar <= 0:
            raise ConfigError("rho_bar must be positive")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if not 1 <= self.kappa_min <= self.kappa_max or self.kappa_points < 1:
            raise ConfigError("kappa sweep needs 1 <= kappa_min <= kappa_max and kappa_points >= 1")
        if self.kappa_target <= 1:
            raise ConfigError("kappa_target must exceed 1")
        self.l_values()
        return self

    def l_values(self) -> list[int]:
        try:
            values = [int(item) for item in self.L_values.split(",") if item.strip()]
        except ValueError as exc:
            raise ConfigError(f"Invalid L_values {self.L_values!r}") from exc
        if not values or min(values) < 0:
            raise ConfigError("L_values must list non-negative integers")
        return values


def _coerce(name: str, raw: str) -> Any:
    annotation = {f.name: f.type for f in fields(ExperimentConfig)}[name]
    raw = raw.strip()
    try:
        if "bool" in str(annotation):
            lowered = raw.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return lowered in ("true", "1", "yes")
        if "Path" in str(annotation):
            return Path(raw) if raw else None
        if "int" in str(annotation):
            return int(raw)
        if "float" in str(annotation):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"Invalid value for {name}: {raw!r}") from exc
    return raw


def parse_config_text(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Parse flat ``key = value`` lines onto ``base`` (or the defaults)."""
    config = base if base is not None else ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"Line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            raise ConfigError(f"Line {lineno}: unknown key {key!r}")
        setattr(config, key, _coerce(key, value))
    return config


def load_config(path: Path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    if not path.exists():
        raise ConfigError(f"Config file does not exist: {path}")
    logger.info("Loading config %s", path)
    return parse_config_text(path.read_text(encoding="utf-8"), base)
