"""Simulation configuration: JSON schema, validation, object construction.

A single JSON file configures every command; it is schema-checked before
any compute runs.  Amounts are in cell units (the periodic cell has side
one), pressures in the units of the Lame constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from .elasticity import ElasticTensor
from .errors import ConfigError
from .flow import FlowModel, StepperConfig
from .grid import Grid, HeightField, band_limited_noise, flat_height

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

SCHEMA = {
    "type": "object",
    "required": ["mode", "n", "m", "d", "e0", "lame", "stepper", "t_end",
                 "perturbation", "output"],
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": ["reduced", "full"]},
        "n": {"type": "integer", "minimum": 8},
        "m": {"type": "integer", "minimum": 4},
        "d": _POS,
        "e0": {"type": "number"},
        "lame": {
            "type": "object",
            "required": ["lambda", "mu"],
            "additionalProperties": False,
            "properties": {"lambda": _POS, "mu": _POS},
        },
        "sigma": {"enum": [1, -1]},
        "stepper": {
            "type": "object",
            "required": ["tau0"],
            "additionalProperties": False,
            "properties": {
                "tau0": _POS,
                "tau_min": _POS,
                "tau_max": _POS,
                "growth": {"type": "number", "minimum": 1.0},
                "coupling": {"enum": ["lagged", "picard"]},
                "tol": _POS,
                "max_iter": {"type": "integer", "minimum": 1},
            },
        },
        "t_end": _NONNEG,
        "perturbation": {
            "type": "object",
            "required": ["kind", "amplitude"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["single_mode", "random"]},
                "amplitude": _NONNEG,
                "k": {"anyOf": [
                    {"type": "integer"},
                    {"type": "array", "items": {"type": "integer"},
                     "minItems": 2, "maxItems": 2},
                ]},
                "seed": {"type": "integer", "minimum": 0},
                "band": {"type": "integer", "minimum": 1},
            },
        },
        "forcing": {
            "type": "object",
            "required": ["kind", "amplitude", "k"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["single_mode"]},
                "amplitude": {"type": "number"},
                "k": {"anyOf": [
                    {"type": "integer"},
                    {"type": "array", "items": {"type": "integer"},
                     "minItems": 2, "maxItems": 2},
                ]},
                "func": {"enum": ["sin", "cos"]},
                "decay": {"type": "number"},
            },
        },
        "output": {
            "type": "object",
            "required": ["dir"],
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "checkpoint_every": {"type": "integer", "minimum": 0},
            },
        },
        "h_min": _NONNEG,
        "solver_rtol": _POS,
        "scan": {
            "type": "object",
            "required": ["d_list"],
            "additionalProperties": False,
            "properties": {
                "d_list": {"type": "array", "items": _POS, "minItems": 1},
                "cutoff": {"type": "integer", "minimum": 1},
            },
        },
        "psi": {
            "type": "object",
            "required": ["modes"],
            "additionalProperties": False,
            "properties": {
                "modes": {"type": "array", "items": {"type": "integer", "minimum": 1},
                          "minItems": 1},
                "epsilon": _POS,
                "fd_check": {"type": "boolean"},
            },
        },
        "identity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "steps": {"type": "integer", "minimum": 3},
                "taus": {"type": "array", "items": _POS, "minItems": 1},
            },
        },
    },
}


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    amplitude: float
    k: tuple | None = None
    seed: int = 0
    band: int = 4


@dataclass(frozen=True)
class ForcingSpec:
    amplitude: float
    k: tuple
    func: str = "sin"
    decay: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    mode: str
    n: int
    m: int
    d: float
    e0: float
    lam: float
    mu: float
    sigma: float
    t_end: float
    perturbation: PerturbationSpec
    output_dir: str
    checkpoint_every: int
    h_min: float
    solver_rtol: float
    tau0: float
    tau_min: float
    tau_max: float
    growth: float
    coupling: str
    coupling_tol: float
    coupling_max_iter: int
    forcing: ForcingSpec | None = None
    scan_d_list: tuple | None = None
    scan_cutoff: int = 8
    psi_modes: tuple | None = None
    psi_epsilon: float = 1e-3
    psi_fd_check: bool = True
    identity_steps: int = 12
    identity_taus: tuple | None = None
    raw: dict = field(default=None, repr=False, compare=False)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        if jsonschema is not None:
            try:
                jsonschema.validate(data, SCHEMA)
            except jsonschema.ValidationError as exc:
                raise ConfigError(f"config schema violation: {exc.message}") from exc
        mode = data["mode"]
        sdim = 1 if mode == "reduced" else 2
        n = data["n"]
        if n % 2:
            raise ConfigError("n must be even")
        d = float(data["d"])
        pert = data["perturbation"]
        kind = pert["kind"]
        k = pert.get("k")
        if kind == "single_mode":
            if k is None:
                raise ConfigError("single_mode perturbation requires k")
            kvec = (int(k),) if isinstance(k, int) else tuple(int(v) for v in k)
            if len(kvec) != sdim:
                raise ConfigError(
                    f"perturbation k has {len(kvec)} components, mode needs {sdim}"
                )
            spec = PerturbationSpec(kind=kind, amplitude=float(pert["amplitude"]),
                                    k=kvec)
        else:
            spec = PerturbationSpec(
                kind=kind, amplitude=float(pert["amplitude"]),
                seed=int(pert.get("seed", 0)), band=int(pert.get("band", 4)),
            )
            if spec.band > n // 3:
                raise ConfigError("perturbation band must be at most n//3")

        forcing = None
        if "forcing" in data:
            fc = data["forcing"]
            fk = fc["k"]
            kvec = (int(fk),) if isinstance(fk, int) else tuple(int(v) for v in fk)
            if len(kvec) != sdim:
                raise ConfigError("forcing k dimensionality mismatch")
            forcing = ForcingSpec(
                amplitude=float(fc["amplitude"]), k=kvec,
                func=fc.get("func", "sin"), decay=float(fc.get("decay", 0.0)),
            )

        stepper = data["stepper"]
        tau0 = float(stepper["tau0"])
        tau_min = float(stepper.get("tau_min", min(1e-12, tau0)))
        tau_max = float(stepper.get("tau_max", max(tau0, 1.0)))
        if not (tau_min <= tau0 <= tau_max):
            raise ConfigError("need tau_min <= tau0 <= tau_max")

        scan = data.get("scan")
        psi = data.get("psi")
        identity = data.get("identity", {})

        return cls(
            mode=mode,
            n=n,
            m=int(data["m"]),
            d=d,
            e0=float(data["e0"]),
            lam=float(data["lame"]["lambda"]),
            mu=float(data["lame"]["mu"]),
            sigma=float(data.get("sigma", 1)),
            t_end=float(data["t_end"]),
            perturbation=spec,
            output_dir=data["output"]["dir"],
            checkpoint_every=int(data["output"].get("checkpoint_every", 0)),
            h_min=float(data.get("h_min", 1e-3 * d)),
            solver_rtol=float(data.get("solver_rtol", 1e-10)),
            tau0=tau0,
            tau_min=tau_min,
            tau_max=tau_max,
            growth=float(stepper.get("growth", 1.2)),
            coupling=stepper.get("coupling", "lagged"),
            coupling_tol=float(stepper.get("tol", 1e-10)),
            coupling_max_iter=int(stepper.get("max_iter", 12)),
            forcing=forcing,
            scan_d_list=tuple(float(v) for v in scan["d_list"]) if scan else None,
            scan_cutoff=int(scan.get("cutoff", 8)) if scan else 8,
            psi_modes=tuple(int(v) for v in psi["modes"]) if psi else None,
            psi_epsilon=float(psi.get("epsilon", 1e-3)) if psi else 1e-3,
            psi_fd_check=bool(psi.get("fd_check", True)) if psi else True,
            identity_steps=int(identity.get("steps", 12)),
            identity_taus=tuple(float(v) for v in identity["taus"]) if identity.get("taus") else None,
            raw=data,
        )

    # -- derived objects ------------------------------------------------------

    @property
    def surface_dim(self) -> int:
        return 1 if self.mode == "reduced" else 2

    def grid(self) -> Grid:
        return Grid(self.surface_dim, self.n)

    def tensor(self) -> ElasticTensor:
        return ElasticTensor.isotropic(self.lam, self.mu)

    def initial_height(self, seed: int | None = None) -> HeightField:
        grid = self.grid()
        p = self.perturbation
        if p.amplitude == 0.0:
            return flat_height(grid, self.d)
        if p.kind == "single_mode":
            coords = grid.coords()
            phase = 2.0 * np.pi * sum(k * x for k, x in zip(p.k, coords))
            values = self.d + p.amplitude * np.sin(phase)
        else:
            use_seed = p.seed if seed is None else seed
            noise = band_limited_noise(grid, use_seed, p.band)
            values = self.d + p.amplitude * noise
        return HeightField(grid, values)

    def forcing_callable(self):
        if self.forcing is None:
            return None
        spec = self.forcing
        fn = np.sin if spec.func == "sin" else np.cos

        def forcing(grid: Grid, t: float) -> np.ndarray:
            coords = grid.coords()
            phase = 2.0 * np.pi * sum(k * x for k, x in zip(spec.k, coords))
            return spec.amplitude * fn(phase) * math.exp(-spec.decay * t)

        return forcing

    def stepper_config(self, *, growth: float | None = None,
                       tau0: float | None = None) -> StepperConfig:
        return StepperConfig(
            tau0=self.tau0 if tau0 is None else tau0,
            tau_min=min(self.tau_min, tau0 if tau0 is not None else self.tau0),
            tau_max=self.tau_max,
            growth=self.growth if growth is None else growth,
            coupling=self.coupling,
            picard_tol=self.coupling_tol,
            picard_max_iter=self.coupling_max_iter,
            sigma=self.sigma,
            forcing=self.forcing_callable(),
            h_min=self.h_min,
        )

    def flow_model(self, **stepper_overrides) -> FlowModel:
        return FlowModel(
            stepper=self.stepper_config(**stepper_overrides),
            tensor=self.tensor(),
            e0=self.e0,
            m=self.m,
            solver_rtol=self.solver_rtol,
        )
