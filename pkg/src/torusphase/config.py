"""Flat key-value run configuration: parsing, schema validation, assembly.

The file format is one `key = value` per line, with `#` comments and blank
lines ignored.  Unknown keys are rejected before any computation starts so a
typo cannot silently fall back to a default.  Hermitian matrices are four
numbers `m11 m12_re m12_im m22`; mode lists are one or more groups of
dims integers separated by `;`, each group contributing the product of
sin(2 pi k_d x_d) over its nonzero entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import GridSpec, ScalarField, grid_coords
from .flow import SCHEMES, FlowConfig
from .functionals import BackgroundData, make_background


class ConfigError(ValueError):
    pass


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _parse_matrix(raw: str) -> np.ndarray:
    parts = raw.split()
    if len(parts) != 4:
        raise ConfigError(f"matrix needs 4 numbers 'm11 m12_re m12_im m22', got {raw!r}")
    m11, m12r, m12i, m22 = (float(p) for p in parts)
    return np.array([[m11, m12r + 1j * m12i], [m12r - 1j * m12i, m22]])

def _parse_modes(raw: str) -> list[tuple[int, ...]]:
    raw = raw.strip()
    if not raw:
        return []
    groups = []
    for chunk in raw.split(";"):
        nums = chunk.split()
        if len(nums) != 4:
            raise ConfigError(f"each mode group needs 4 integers, got {chunk!r}")
        groups.append(tuple(int(x) for x in nums))
    return groups


# key -> (parser, default); default None means required.
_SCHEMA = {
    "grid_n": (int, None),
    "scheme": (str, "explicit-rk4"),
    "cfl_sigma": (float, 0.2),
    "t_max": (float, None),
    "residual_tol": (float, None),
    "sample_interval": (float, None),
    "seed": (int, 0),
    "require_hypercritical": (_parse_bool, True),
    "alpha": (_parse_matrix, np.eye(2, dtype=complex)),
    "f_hat": (_parse_matrix, None),
    "bump_amplitude": (float, 0.0),
    "bump_modes": (_parse_modes, []),
    "phi0_amplitude": (float, 0.0),
    "phi0_modes": (_parse_modes, []),
    "phi0_random_max_mode": (int, 0),
}


@dataclass
class RunConfig:
    grid_n: int
    scheme: str
    cfl_sigma: float
    t_max: float
    residual_tol: float
    sample_interval: float
    seed: int
    require_hypercritical: bool
    alpha: np.ndarray
    f_hat: np.ndarray
    bump_amplitude: float
    bump_modes: list = field(default_factory=list)
    phi0_amplitude: float = 0.0
    phi0_modes: list = field(default_factory=list)
    phi0_random_max_mode: int = 0

    def flow_config(self) -> FlowConfig:
        return FlowConfig(
            grid_n=self.grid_n,
            scheme=self.scheme,
            cfl_sigma=self.cfl_sigma,
            t_max=self.t_max,
            residual_tol=self.residual_tol,
            sample_interval=self.sample_interval,
            seed=self.seed,
            require_hypercritical=self.require_hypercritical,
        )


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and validate a config file; overrides (already typed) win."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = text.partition("=")
            key = key.strip()
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in raw:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value.strip()

    values = {}
    for key, text in raw.items():
        parser = _SCHEMA[key][0]
        try:
            values[key] = parser(text)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc

    if overrides:
        for key, val in overrides.items():
            if val is not None:
                values[key] = val

    for key, (_, default) in _SCHEMA.items():
        if key in values:
            continue
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        values[key] = default.copy() if hasattr(default, "copy") else default

    cfg = RunConfig(**values)
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}")
    if cfg.grid_n < 4 or cfg.grid_n % 2:
        raise ConfigError("grid_n must be even and >= 4")
    return cfg


def _mode_field(grid: GridSpec, amplitude: float, modes) -> ScalarField | None:
    if amplitude == 0.0 or not modes:
        return None
    xs = grid_coords(grid)
    vals = np.zeros(grid.shape)
    for group in modes:
        term = np.ones(grid.shape)
        for x, k in zip(xs, group):
            if k:
                term = term * np.sin(2.0 * np.pi * k * x)
        vals += term
    return ScalarField(grid, amplitude * vals)


def build_background(cfg: RunConfig) -> BackgroundData:
    grid = GridSpec(cfg.grid_n)
    bump = _mode_field(grid, cfg.bump_amplitude, cfg.bump_modes)
    return make_background(grid, cfg.alpha, cfg.f_hat, bump)


def build_phi0(cfg: RunConfig, grid: GridSpec) -> ScalarField:
    from .fields import random_bandlimited

    if cfg.phi0_random_max_mode > 0:
        rng = np.random.default_rng(cfg.seed)
        return random_bandlimited(grid, cfg.phi0_random_max_mode, cfg.phi0_amplitude, rng)
    f = _mode_field(grid, cfg.phi0_amplitude, cfg.phi0_modes)
    return f if f is not None else ScalarField(grid, np.zeros(grid.shape))
