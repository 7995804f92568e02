"""TOML run-configuration parsing for the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:             # Python < 3.11
    import tomli as tomllib

from .problems import TaylorGreenParams, ViscousShockParams
from .rhs import SchemeConfig
from .timeloop import IntegratorConfig

_DEFAULTS = {
    "problem": {"kind": "tgv", "mach": None, "reynolds": None, "gamma": None,
                "prandtl": None, "shock_speed": None},
    "mesh": {"cells": 4, "p_min": 2, "p_max": 3, "seed": 7, "perturb": True},
    "scheme": {"mode": "es", "ip": True, "ip_coefficient": 1.0,
               "dissipation": 1.0, "viscous": True},
    "time": {"t_end": 1.0, "rtol": 1e-8, "atol": 1e-8, "fixed_dt": 0.0,
             "monitor_interval": 0.0, "dt_initial": 0.0},
}


@dataclass
class RunConfig:
    kind: str
    problem: object
    mesh: dict
    scheme: SchemeConfig
    integrator: IntegratorConfig
    t_end: float
    raw: dict = field(default_factory=dict)


def _merged(data: dict, section: str) -> dict:
    out = dict(_DEFAULTS[section])
    out.update(data.get(section, {}))
    return out


def load_config(path) -> RunConfig:
    """Read a TOML run configuration (documented in the README)."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    prob = _merged(data, "problem")
    mesh = _merged(data, "mesh")
    sch = _merged(data, "scheme")
    tm = _merged(data, "time")

    kind = prob["kind"]
    keys = {k: v for k, v in prob.items() if k not in ("kind",) and v is not None}
    if kind == "tgv":
        problem = TaylorGreenParams(**{k: v for k, v in keys.items()
                                       if k in ("mach", "reynolds", "gamma",
                                                "prandtl")})
    elif kind == "viscous-shock":
        problem = ViscousShockParams(**{k: v for k, v in keys.items()
                                        if k in ("mach", "reynolds", "gamma",
                                                 "prandtl", "shock_speed")})
    elif kind == "freestream":
        problem = None
    else:
        raise ValueError(f"unknown problem kind {kind!r}")

    scheme = SchemeConfig(mode=sch["mode"], dissipation=sch["dissipation"],
                          ip=sch["ip"], ip_coefficient=sch["ip_coefficient"],
                          viscous=sch["viscous"])
    integ = IntegratorConfig(
        rtol=tm["rtol"], atol=tm["atol"],
        fixed_dt=tm["fixed_dt"] or None,
        dt_initial=tm["dt_initial"] or None,
        monitor_interval=tm["monitor_interval"],
    )
    return RunConfig(kind=kind, problem=problem, mesh=mesh, scheme=scheme,
                     integrator=integ, t_end=float(tm["t_end"]), raw=data)
