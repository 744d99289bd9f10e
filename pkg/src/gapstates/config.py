"""Run configuration: versioned JSON schema with strict key checking.

Unknown keys are rejected with a pointer to the offending key so a typo
in a tolerance name cannot silently fall back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .lattice import PerturbationSpec, PotentialSpec

__all__ = ["SCHEMA_VERSION", "ConfigError", "Numerics", "RunConfig",
           "load_config", "parse_config"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid run configuration (maps to CLI exit code 2)."""


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {where} "
                              f"(allowed: {sorted(allowed)})")


@dataclass(frozen=True)
class Numerics:
    cutoff: int | None = None          # plane-wave cutoff; None = per-d default
    n_bands: int = 6
    momentum_grid: int = 33            # quasi-momentum samples per axis
    box_half_width: float = 40.0       # truncated-box half-width (cells)
    h: float = 1.0 / 64.0              # finite-difference spacing
    gap_index: int = 0                 # 0 = semi-infinite gap, else j-th finite
    n_branches: int = 6
    n_lambda: int = 21                 # geometric lambda samples towards edge
    gap_tolerance: float = 1e-6
    bloch_grid_points: int = 64
    n_want: int = 10                   # oracle eigenvalue budget
    seed: int = 0

    def __post_init__(self):
        for name in ("h", "gap_tolerance", "box_half_width"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"numerics.{name} must be positive")
        for name in ("n_bands", "momentum_grid", "n_branches", "n_lambda",
                     "bloch_grid_points", "n_want"):
            if getattr(self, name) < 1:
                raise ConfigError(f"numerics.{name} must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    d: int
    V: PotentialSpec
    W: PerturbationSpec
    gammas: tuple
    numerics: Numerics
    raw: dict = field(repr=False, default_factory=dict)


_POTENTIAL_KEYS = {"kind", "amplitude", "axis", "coefficients"}
_BUMP_KEYS = {"kind", "amplitude", "half_width", "sigma", "center"}


def _parse_potential(obj: dict, d: int) -> PotentialSpec:
    _check_keys(obj, _POTENTIAL_KEYS, "problem.potential")
    kind = obj.get("kind", "zero")
    if kind == "zero":
        return PotentialSpec.zero(d)
    if kind == "cosine":
        return PotentialSpec.cosine(d, amplitude=float(obj.get("amplitude", 1.0)),
                                    axis=int(obj.get("axis", 0)))
    if kind == "fourier":
        coeffs = {tuple(int(v) for v in json.loads(f"[{key}]")): complex(val)
                  for key, val in obj.get("coefficients", {}).items()}
        return PotentialSpec(d=d, coefficients=coeffs)
    raise ConfigError(f"unknown potential kind '{kind}' in problem.potential")


def _parse_perturbation(obj: dict, d: int) -> PerturbationSpec:
    bumps_in = obj.get("bumps")
    if not bumps_in:
        raise ConfigError("problem.perturbation.bumps must be a nonempty list")
    _check_keys(obj, {"bumps"}, "problem.perturbation")
    spec = None
    for i, b in enumerate(bumps_in):
        _check_keys(b, _BUMP_KEYS, f"problem.perturbation.bumps[{i}]")
        kind = b.get("kind")
        amp = float(b.get("amplitude", 1.0))
        center = tuple(float(c) for c in b.get("center", (0.0,) * d))
        if kind == "box":
            one = PerturbationSpec.box(d, amplitude=amp,
                                       half_width=float(b.get("half_width", 0.5)),
                                       center=center)
        elif kind == "gaussian":
            one = PerturbationSpec.gaussian(d, amplitude=amp,
                                            sigma=float(b.get("sigma", 1.0)),
                                            center=center)
        else:
            raise ConfigError(f"unknown bump kind '{kind}' in "
                              f"problem.perturbation.bumps[{i}]")
        spec = one if spec is None else spec.plus(one)
    return spec


def parse_config(doc: dict) -> RunConfig:
    _check_keys(doc, {"schema_version", "problem", "numerics"}, "config root")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, "
                          f"got {version!r}")
    prob = doc.get("problem")
    if not isinstance(prob, dict):
        raise ConfigError("missing 'problem' section")
    _check_keys(prob, {"d", "potential", "perturbation", "gammas"}, "problem")
    d = prob.get("d")
    if d not in (1, 2, 3):
        raise ConfigError("problem.d must be 1, 2 or 3")
    V = _parse_potential(prob.get("potential", {}), d)
    W = _parse_perturbation(prob.get("perturbation", {}), d)
    gammas = tuple(float(g) for g in prob.get("gammas", ()))
    if any(g == 0 for g in gammas):
        raise ConfigError("problem.gammas must be nonzero")
    num_in = dict(doc.get("numerics", {}))
    _check_keys(num_in, set(Numerics.__dataclass_fields__), "numerics")
    try:
        numerics = Numerics(**num_in)
    except TypeError as exc:
        raise ConfigError(f"invalid numerics section: {exc}") from exc
    return RunConfig(d=d, V=V, W=W, gammas=gammas, numerics=numerics, raw=doc)


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(doc)
