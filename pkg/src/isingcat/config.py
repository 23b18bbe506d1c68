"""Run configuration: JSON parsing, validation and the named parameter sets
used by the tests, demos and CLI.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

from .bath import BathSpec, CouplingSpec
from .chain import ChainSpec, ChainSpecError

MODES = ("uniform", "thermal", "driven-direct", "driven-perturbative", "two-bath")
DRIVEN = ("driven-direct", "driven-perturbative")


class ConfigError(ValueError):
    """Configuration fails validation; the message names the constraint."""


# Reference chain: levels -3, -1.6, -1.4, -0.6, -0.4, ... for J = 1
FIG2_CHAIN = {"n_half": 2, "J": 1.0, "h": [0.2, 0.1]}

# Cat regime at T = omega/8 with eps/eps_f = 0.01 and eps_f/e = 0.1.
# Rates scale with e^2 eta only; eta is chosen so that the drive stays weak
# against the c- <-> a decay (eps_f/gamma ~ 2e-3) and the full Redfield
# generator keeps positivity to 1e-6.
CAT = {
    "chain": dict(FIG2_CHAIN),
    "bath": {"T": 0.025, "model": "ohmic", "eta": 6.25e5, "cutoff": 10.0,
             "lamb_shifts": False},
    "coupling": {"e": 2e-5, "eps": 2e-8, "eps_f": 2e-6, "omega": "resonant"},
    "solver": {"P": 1, "dps": 100},
    "oracle": {"steps_per_period": 100, "max_periods": 2 ** 40, "tol": 1e-6,
               "rtol": 1e-10, "atol": 1e-13, "initial": "mixed"},
    "mode": "driven-direct",
}

# Thermalisation check: weak local coupling, no drive
THERMAL = {
    "chain": dict(FIG2_CHAIN),
    "bath": {"T": 0.5, "model": "ohmic", "eta": 1.0, "cutoff": 10.0, "lamb_shifts": False},
    "coupling": {"e": 0.02, "eps": 0.001, "eps_f": 0.0},
    "oracle": {"steps_per_period": 20, "max_periods": 2 ** 30, "tol": 1e-9,
               "rtol": 1e-10, "atol": 1e-13, "initial": "up", "period": 10.0},
    "mode": "thermal",
}

# Two baths at T = h_1/20 and T' = T/100
TWO_BATH = {
    "chain": dict(FIG2_CHAIN),
    "bath": {"T": 0.01, "model": "ohmic", "eta": 1.0, "cutoff": 10.0, "lamb_shifts": False},
    "bath2": {"T": 1e-4, "model": "ohmic", "eta": 1.0, "cutoff": 10.0, "lamb_shifts": False},
    "coupling": {"e": 0.1, "eps": 0.0, "eps_f": 0.0, "eps2": 0.01},
    "mode": "two-bath",
}

PRESETS = {"fig2": {"chain": dict(FIG2_CHAIN), "mode": "uniform",
                    "bath": {"T": 0.1}, "coupling": {"e": 0.1}},
           "cat": CAT, "thermal": THERMAL, "two-bath": TWO_BATH}


def preset(name: str) -> dict:
    return copy.deepcopy(PRESETS[name])


@dataclass
class RunConfig:
    raw: dict
    chain: ChainSpec
    bath: BathSpec | None
    bath2: BathSpec | None
    coupling: CouplingSpec | None
    mode: str
    solver: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    sweep: dict | None = None
    seed: int = 0


def _bath(d: dict) -> BathSpec:
    try:
        return BathSpec(float(d["T"]), eta=float(d.get("eta", 1.0)),
                        cutoff=float(d.get("cutoff", 10.0)),
                        include_shifts=bool(d.get("lamb_shifts", False)),
                        model=d.get("model", "ohmic"))
    except KeyError as exc:
        raise ConfigError(f"bath needs key {exc}") from None


def _coupling(d: dict) -> CouplingSpec:
    weights = None
    if d.get("drive_weights") is not None:
        weights = {(int(s), str(a)): complex(re, im) for s, a, re, im in d["drive_weights"]}
    om = d.get("omega", "resonant")
    return CouplingSpec(float(d.get("e", 0.0)), eps_local=float(d.get("eps", 0.0)),
                        eps_drive=float(d.get("eps_f", 0.0)),
                        drive_frequency=om if om == "resonant" else float(om),
                        drive_weights=weights, local_axes=d.get("local_axes", "xyz"),
                        eps_bath2=float(d.get("eps2", 0.0)))


def parse(raw: dict, mode: str | None = None) -> RunConfig:
    """Build and validate a RunConfig. Raises ConfigError on any violation."""
    raw = copy.deepcopy(raw)
    if mode is not None:
        raw["mode"] = mode
    try:
        c = raw["chain"]
        chain = ChainSpec(int(c["n_half"]), float(c["J"]), tuple(c["h"]))
    except KeyError as exc:
        raise ConfigError(f"chain needs key {exc}") from None
    except ChainSpecError as exc:
        raise ConfigError(str(exc)) from None
    md = raw.get("mode", "uniform")
    if md not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    try:
        bath = _bath(raw["bath"]) if "bath" in raw else None
        bath2 = _bath(raw["bath2"]) if "bath2" in raw else None
        coupling = _coupling(raw.get("coupling", {}))
        if coupling.eps_drive:
            coupling.check_drive_weights(chain.n_half)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if bath is None:
        raise ConfigError("a bath section is required")
    if md in DRIVEN:
        if bath.temperature == 0:
            raise ConfigError("T = 0 in driven mode: the steady state is not unique "
                              "(every set touching the ground doublet is absorbing)")
        if not coupling.eps_drive:
            raise ConfigError("driven mode needs eps_f > 0")
        if coupling.omega(chain) <= 0:
            raise ConfigError("drive frequency must be > 0")
    if md == "thermal" and bath.temperature == 0:
        raise ConfigError("thermal mode needs T > 0")
    if md == "two-bath":
        if bath2 is None:
            raise ConfigError("two-bath mode needs a bath2 section")
        if not coupling.eps_bath2:
            raise ConfigError("two-bath mode needs eps2 > 0")
    if not coupling.e_uniform and md != "two-bath":
        raise ConfigError("e (uniform coupling) must be > 0")
    sweep = raw.get("sweep")
    if sweep is not None and ("parameter" not in sweep or "values" not in sweep):
        raise ConfigError("sweep needs 'parameter' and 'values'")
    return RunConfig(raw, chain, bath, bath2, coupling, md, dict(raw.get("solver", {})),
                     dict(raw.get("oracle", {})), sweep, int(raw.get("seed", 0)))


def load(path: str, mode: str | None = None) -> RunConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse(raw, mode)


def set_path(raw: dict, path: str, value) -> dict:
    """Return a copy of ``raw`` with the dotted ``path`` set to ``value``.

    ``coupling.omega`` style paths address dict keys; a trailing integer
    indexes a list, as in ``chain.h.1``.
    """
    out = copy.deepcopy(raw)
    keys = path.split(".")
    node = out
    for k in keys[:-1]:
        node = node[int(k)] if isinstance(node, list) else node.setdefault(k, {})
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return out
