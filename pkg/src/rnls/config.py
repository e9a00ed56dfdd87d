"""Run configuration: a flat, strict key=value grammar.

Grammar (exact):
  - one ``key = value`` assignment per line;
  - ``#`` starts a comment (full-line or trailing); blank lines are ignored;
  - keys are flat identifiers; the initial-condition descriptor uses
    ``init.``-prefixed keys (still one flat namespace, no section syntax);
  - unknown keys are rejected, and validation reports *all* violations at
    once, not just the first.

Keys, types, and defaults (the table below is the single source of truth):

  sigma                  float   (required)     nonlinearity power, 1/2 <= sigma <= 4
  lambda                 float   -1.0           coupling: -1 focusing, +1 defocusing
  N_hermite              int     16             max Hermite level per y-axis
  M_quad                 int     24             Gauss-Hermite nodes per y-axis
  N_z                    int     128            Fourier modes in z
  L_z                    float   40*pi          z-period
  N_theta                int     64             averaging-quadrature nodes
  scheme                 str     lawson_rk4     lawson_rk4 | strang_rk4
  dt                     float   1e-3           time step
  T                      float   1.0            final time
  diagnostics_every      int     10             steps between diagnostic rows
  blowup_factor          float   1e4            gradient-growth abort threshold
  checkpoint_every       int     0              steps between checkpoints (0 = none)
  model                  str     nls            nls | nls2
  init                   str     gaussian       gaussian | checkpoint | ground_state_scaled
  init.amplitude         float   1.0            gaussian peak amplitude
  init.y_width           float   1.0            gaussian y width
  init.z_width           float   2.0            gaussian z width
  init.z_velocity        float   0.0            gaussian z phase velocity
  init.path              str     ""             checkpoint path (checkpoint init, or a
                                                precomputed ground state for
                                                ground_state_scaled; empty = solve here)
  init.amplitude_factor  float   1.0            ground_state_scaled multiplier
  output_dir             str     out            where diagnostics/checkpoints land
  virial_weight          str     none           none | z2 | truncated
  virial_R               float   0.0            truncation radius (truncated weight)
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields

from .basis import BasisSpec
from .evolution import SchemeConfig
from .nonlinearity import NonlinearityParams, theta_quadrature

__all__ = [
    "ConfigError",
    "SimulationConfig",
    "parse_config",
    "serialize_config",
    "validate_config",
    "build_objects",
]


class ConfigError(ValueError):
    """Carries every violation found, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.violations))


@dataclass(frozen=True)
class SimulationConfig:
    sigma: float
    lam: float = -1.0
    N_hermite: int = 16
    M_quad: int = 24
    N_z: int = 128
    L_z: float = 40.0 * math.pi
    N_theta: int = 64
    scheme: str = "lawson_rk4"
    dt: float = 1e-3
    T: float = 1.0
    diagnostics_every: int = 10
    blowup_factor: float = 1e4
    checkpoint_every: int = 0
    model: str = "nls"
    init: str = "gaussian"
    init_amplitude: float = 1.0
    init_y_width: float = 1.0
    init_z_width: float = 2.0
    init_z_velocity: float = 0.0
    init_path: str = ""
    init_amplitude_factor: float = 1.0
    output_dir: str = "out"
    virial_weight: str = "none"
    virial_R: float = 0.0


# file key -> (attribute, type); the attribute names differ only where the
# key is not a Python identifier.
_KEYS = {
    "sigma": ("sigma", float),
    "lambda": ("lam", float),
    "N_hermite": ("N_hermite", int),
    "M_quad": ("M_quad", int),
    "N_z": ("N_z", int),
    "L_z": ("L_z", float),
    "N_theta": ("N_theta", int),
    "scheme": ("scheme", str),
    "dt": ("dt", float),
    "T": ("T", float),
    "diagnostics_every": ("diagnostics_every", int),
    "blowup_factor": ("blowup_factor", float),
    "checkpoint_every": ("checkpoint_every", int),
    "model": ("model", str),
    "init": ("init", str),
    "init.amplitude": ("init_amplitude", float),
    "init.y_width": ("init_y_width", float),
    "init.z_width": ("init_z_width", float),
    "init.z_velocity": ("init_z_velocity", float),
    "init.path": ("init_path", str),
    "init.amplitude_factor": ("init_amplitude_factor", float),
    "output_dir": ("output_dir", str),
    "virial_weight": ("virial_weight", str),
    "virial_R": ("virial_R", float),
}
_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}


def parse_config(text: str, overrides: dict | None = None) -> SimulationConfig:
    """Parse and validate; raises ConfigError listing every problem.

    overrides: attribute -> value pairs (already typed) applied after the
    document — this is how command-line flags win over file keys.
    """
    violations = []
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KEYS:
            violations.append(f"line {lineno}: unknown key {key!r}")
            continue
        attr, typ = _KEYS[key]
        if attr in values:
            violations.append(f"line {lineno}: duplicate key {key!r}")
            continue
        if typ is str:
            values[attr] = val
        else:
            try:
                values[attr] = typ(val)
            except ValueError:
                violations.append(
                    f"line {lineno}: {key} expects {typ.__name__}, got {val!r}"
                )
    if overrides:
        values.update(overrides)
    if "sigma" not in values:
        violations.append("missing required key 'sigma'")
    if violations:
        raise ConfigError(violations)
    cfg = SimulationConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: SimulationConfig) -> None:
    """Semantic validation; raises ConfigError with the full violation list."""
    v = []
    try:
        NonlinearityParams(sigma=cfg.sigma, lam=cfg.lam)
    except ValueError as exc:
        v.append(str(exc))
    try:
        BasisSpec(N_hermite=cfg.N_hermite, M_quad=cfg.M_quad, N_z=cfg.N_z, L_z=cfg.L_z)
    except ValueError as exc:
        v.append(str(exc))
    try:
        SchemeConfig(
            scheme=cfg.scheme,
            dt=cfg.dt,
            T=cfg.T,
            conservation_check_every=cfg.diagnostics_every,
            blowup_factor=cfg.blowup_factor,
            checkpoint_every=cfg.checkpoint_every,
        )
    except ValueError as exc:
        v.append(str(exc))
    if cfg.N_theta < 2:
        v.append(f"N_theta={cfg.N_theta} must be >= 2")
    if cfg.model not in ("nls", "nls2"):
        v.append(f"model={cfg.model!r} must be 'nls' or 'nls2'")
    if cfg.init not in ("gaussian", "checkpoint", "ground_state_scaled"):
        v.append(
            f"init={cfg.init!r} must be one of gaussian, checkpoint, ground_state_scaled"
        )
    if cfg.init == "checkpoint":
        if not cfg.init_path:
            v.append("init=checkpoint requires init.path")
        elif not os.path.exists(cfg.init_path):
            v.append(f"init.path does not exist: {cfg.init_path!r}")
    if cfg.init == "ground_state_scaled":
        if cfg.init_path and not os.path.exists(cfg.init_path):
            v.append(f"init.path does not exist: {cfg.init_path!r}")
        if cfg.lam != -1.0:
            v.append("init=ground_state_scaled requires lambda = -1 (focusing)")
    if cfg.virial_weight not in ("none", "z2", "truncated"):
        v.append(f"virial_weight={cfg.virial_weight!r} must be none, z2, or truncated")
    if cfg.virial_weight == "truncated":
        if not cfg.virial_R > 0:
            v.append("virial_weight=truncated requires virial_R > 0")
        elif not 2.0 * cfg.virial_R < cfg.L_z / 2.0:
            v.append(
                f"virial_R={cfg.virial_R} too large: need 2 R < L_z/2 = {cfg.L_z / 2.0}"
            )
    if v:
        raise ConfigError(v)


def serialize_config(cfg: SimulationConfig) -> str:
    """Emit a document that reparses to an equal config (floats via repr)."""
    lines = []
    for f in fields(SimulationConfig):
        val = getattr(cfg, f.name)
        rendered = val if isinstance(val, str) else repr(val)
        lines.append(f"{_ATTR_TO_KEY[f.name]} = {rendered}")
    return "\n".join(lines) + "\n"


def build_objects(cfg: SimulationConfig):
    """Construct the runtime pieces: (table, params, quad, scheme_config).

    The table build is the expensive part; callers share it.
    """
    from .basis import build_basis

    table = build_basis(
        BasisSpec(N_hermite=cfg.N_hermite, M_quad=cfg.M_quad, N_z=cfg.N_z, L_z=cfg.L_z)
    )
    params = NonlinearityParams(sigma=cfg.sigma, lam=cfg.lam)
    quad = theta_quadrature(cfg.N_theta)
    scfg = SchemeConfig(
        scheme=cfg.scheme,
        dt=cfg.dt,
        T=cfg.T,
        conservation_check_every=cfg.diagnostics_every,
        blowup_factor=cfg.blowup_factor,
        checkpoint_every=cfg.checkpoint_every,
    )
    return table, params, quad, scfg
