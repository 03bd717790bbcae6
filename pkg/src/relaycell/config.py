"""Run-configuration ingestion with strict unit checking.

The configuration is a TOML file in which every physical quantity carries an
explicit unit suffix (``e_r_max = "500 mJ"``); bare numbers are accepted for
dimensionless quantities only.  Unknown keys are rejected with the full key
path, so silent unit or spelling mistakes cannot pass.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from relaycell.channel import AntennaPattern, ScenarioConfig, load_link_models, noise_dbm_to_watts
from relaycell.geometry import CellLayout
from relaycell.schemes import EnergyProfile, SchemeKind


class ConfigError(ValueError):
    """Configuration problem, reported with the offending key (or line)."""


_ENERGY_UNITS = {"J": 1.0, "mJ": 1e-3, "uJ": 1e-6}
_LENGTH_UNITS = {"m": 1.0, "km": 1e3}
_FREQ_UNITS = {"GHz": 1.0, "MHz": 1e-3}

_SCHEMES = {k.value: k for k in SchemeKind}


def _parse_quantity(value, units: dict, kind: str, key: str) -> float:
    if not isinstance(value, str):
        raise ConfigError(f"{key}: {kind} values need an explicit unit string, got {value!r}")
    parts = value.split()
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected '<number> <unit>', got {value!r}")
    try:
        number = float(parts[0])
    except ValueError as exc:
        raise ConfigError(f"{key}: {parts[0]!r} is not a number") from exc
    if parts[1] not in units:
        raise ConfigError(f"{key}: unit {parts[1]!r} invalid here (allowed: {sorted(units)})")
    return number * units[parts[1]]


def _energy(value, key):
    return _parse_quantity(value, _ENERGY_UNITS, "energy", key)


def _length(value, key):
    return _parse_quantity(value, _LENGTH_UNITS, "length", key)


def _noise(value, key):
    if not isinstance(value, str) or not value.strip().endswith("dBm"):
        raise ConfigError(f"{key}: noise must be given in dBm, got {value!r}")
    try:
        return noise_dbm_to_watts(float(value.strip()[: -len("dBm")]))
    except ValueError as exc:
        raise ConfigError(f"{key}: malformed dBm value {value!r}") from exc


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a bare number, got {value!r}")
    return float(value)


def _take(section: dict, key: str, path: str, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"{path}.{key}: missing required key")
        return default
    return section.pop(key)


def _reject_unknown(section: dict, path: str):
    if section:
        raise ConfigError(f"{path}: unknown keys {sorted(section)}")


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    profile: EnergyProfile
    layout: CellLayout
    p_t: tuple = (0.5,)
    e_t: tuple = ()
    e_t_r: tuple = ()
    samples: int = 20000
    seed: int = 0
    scheme: SchemeKind = SchemeKind.TWO_HOP
    objective: str = "psi"
    opt_n_r: int = 2
    search_step: float = 25.0
    symmetric: bool = True
    map_candidates: tuple = (SchemeKind.TWO_HOP, SchemeKind.EO_PDF, SchemeKind.IR_PDF)
    mc_samples: int = 512
    config_hash: str = ""


def _scenario(raw: dict) -> ScenarioConfig:
    sec = dict(raw)
    rate = _number(_take(sec, "rate", "scenario", required=True), "scenario.rate")
    noise = _noise(_take(sec, "noise", "scenario", required=True), "scenario.noise")
    f_c = _parse_quantity(_take(sec, "f_c", "scenario", required=True), _FREQ_UNITS, "frequency", "scenario.f_c")
    p_out = _number(_take(sec, "p_out", "scenario", required=True), "scenario.p_out")
    link_path = _take(sec, "link_params", "scenario")
    links = load_link_models(None if link_path in (None, "builtin") else link_path)
    ant = _take(sec, "antenna", "scenario", default={})
    if not isinstance(ant, dict):
        raise ConfigError("scenario.antenna: expected a table")
    ant = dict(ant)
    antenna = AntennaPattern(
        g_max_db=_number(_take(ant, "g_max_db", "scenario.antenna", default=18.0), "scenario.antenna.g_max_db"),
        theta_3db_deg=_number(_take(ant, "theta_3db_deg", "scenario.antenna", default=65.0), "scenario.antenna.theta_3db_deg"),
        a_max_db=_number(_take(ant, "a_max_db", "scenario.antenna", default=20.0), "scenario.antenna.a_max_db"),
        omni=bool(_take(ant, "omni", "scenario.antenna", default=False)),
    )
    _reject_unknown(ant, "scenario.antenna")
    _reject_unknown(sec, "scenario")
    try:
        return ScenarioConfig(rate=rate, noise_w=noise, f_c_ghz=f_c, p_out=p_out, links=links, antenna=antenna)
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc


def _profile(raw: dict) -> EnergyProfile:
    sec = dict(raw)
    kwargs = {}
    for key in ("e_b_max", "e_r_max", "e_b_tx_plus_u_rx", "e_b_idle", "e_r_idle", "e_dsp_2hop", "e_dsp_plus_pdf"):
        if key in sec:
            kwargs[key] = _energy(_take(sec, key, "profile"), f"profile.{key}")
    for key in ("eta_b", "eta_r"):
        if key in sec:
            kwargs[key] = _number(_take(sec, key, "profile"), f"profile.{key}")
    _reject_unknown(sec, "profile")
    try:
        return EnergyProfile(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"profile: {exc}") from exc


def _layout(raw: dict) -> CellLayout:
    sec = dict(raw)
    d_b = _length(_take(sec, "d_b", "layout", required=True), "layout.d_b")
    grid_step = _length(_take(sec, "grid_step", "layout", default="25 m"), "layout.grid_step")
    relays_raw = _take(sec, "relays", "layout", default=[])
    relays = []
    for i, pair in enumerate(relays_raw):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"layout.relays[{i}]: expected a pair of lengths")
        relays.append((_length(pair[0], f"layout.relays[{i}].x"), _length(pair[1], f"layout.relays[{i}].y")))
    _reject_unknown(sec, "layout")
    try:
        return CellLayout(d_b=d_b, relays=tuple(relays), grid_step=grid_step)
    except ValueError as exc:
        raise ConfigError(f"layout: {exc}") from exc


def _scheme_kind(name, key) -> SchemeKind:
    if name not in _SCHEMES:
        raise ConfigError(f"{key}: unknown scheme {name!r} (allowed: {sorted(_SCHEMES)})")
    return _SCHEMES[name]


def parse_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    digest = hashlib.sha256(json.dumps(raw, sort_keys=True, default=str).encode()).hexdigest()[:16]
    top = dict(raw)
    scenario = _scenario(_take(top, "scenario", "<root>", required=True))
    profile = _profile(_take(top, "profile", "<root>", default={}))
    layout = _layout(_take(top, "layout", "<root>", required=True))

    thr = dict(_take(top, "thresholds", "<root>", default={}))
    p_t = tuple(_number(v, "thresholds.p_t[]") for v in _take(thr, "p_t", "thresholds", default=[]))
    e_t = tuple(_energy(v, "thresholds.e_t[]") for v in _take(thr, "e_t", "thresholds", default=[]))
    e_t_r = tuple(_energy(v, "thresholds.e_t_r[]") for v in _take(thr, "e_t_r", "thresholds", default=[]))
    _reject_unknown(thr, "thresholds")
    for p in p_t:
        if not 0.0 < p < 1.0:
            raise ConfigError(f"thresholds.p_t: {p} outside (0, 1)")

    orc = dict(_take(top, "oracle", "<root>", default={}))
    samples = int(_number(_take(orc, "samples", "oracle", default=20000), "oracle.samples"))
    seed = int(_number(_take(orc, "seed", "oracle", default=0), "oracle.seed"))
    _reject_unknown(orc, "oracle")
    if samples < 1:
        raise ConfigError("oracle.samples: must be >= 1")

    run = dict(_take(top, "run", "<root>", default={}))
    scheme = _scheme_kind(_take(run, "scheme", "run", default="TwoHop"), "run.scheme")
    _reject_unknown(run, "run")

    opt = dict(_take(top, "optimize", "<root>", default={}))
    objective = _take(opt, "objective", "optimize", default="psi")
    if objective not in ("psi", "gamma"):
        raise ConfigError(f"optimize.objective: {objective!r} not in ('psi', 'gamma')")
    opt_n_r = int(_number(_take(opt, "n_r", "optimize", default=2), "optimize.n_r"))
    search_step = _length(_take(opt, "search_step", "optimize", default="25 m"), "optimize.search_step")
    symmetric = bool(_take(opt, "symmetric", "optimize", default=True))
    _reject_unknown(opt, "optimize")

    smap = dict(_take(top, "scheme_map", "<root>", default={}))
    cands = _take(smap, "schemes", "scheme_map", default=["TwoHop", "EoPdf", "IrPdf"])
    map_candidates = tuple(_scheme_kind(c, "scheme_map.schemes[]") for c in cands)
    mc_samples = int(_number(_take(smap, "mc_samples", "scheme_map", default=512), "scheme_map.mc_samples"))
    _reject_unknown(smap, "scheme_map")

    _reject_unknown(top, "<root>")
    return RunConfig(
        scenario=scenario,
        profile=profile,
        layout=layout,
        p_t=p_t,
        e_t=e_t,
        e_t_r=e_t_r,
        samples=samples,
        seed=seed,
        scheme=scheme,
        objective=objective,
        opt_n_r=opt_n_r,
        search_step=search_step,
        symmetric=symmetric,
        map_candidates=map_candidates,
        mc_samples=mc_samples,
        config_hash=digest,
    )
