"""Path loss, sector-antenna gain and per-link RF energy requirements.

The path loss of link class k is gamma_k = K_k * d^alpha_k with

    alpha_k = a_k / 10
    10*log10(K_k) = b_k + c_k*log10(f_c/5) + d_k*log10((H_tx-1)(H_rx-1))

so the channel gain is shadowing/gamma_k.  The per-link RF transmit energies
for a rate-R downlink block split into two equal phases are

    E_d = (2^R  - 1) * N * gamma_d / s_d          (direct, both phases)
    E_b = (2^2R - 1) * N * gamma_b / (2 s_b)      (backhaul, phase 1)
    E_r = (2^2R - 1) * N * gamma_r / (2 s_r)      (access, phase 2)

each wrapped as LogNormal(ln E^(0), sigma_nat) with E^(0) the shadow-free
value.  Links originating at a base station additionally see the sectored
antenna gain.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from relaycell.stats import DB_TO_NAT, LogNormal

LINK_LABELS = ("direct", "backhaul", "access", "interference")

# WINNER-style models are not meant below a few meters; distances are floored
# here so grid points coinciding with a relay stay evaluable.
MIN_DISTANCE_M = 10.0


class LinkParameterError(ValueError):
    """Malformed link-parameter file (reported with section/key context)."""


@dataclass(frozen=True)
class LinkModel:
    """Path-loss parameters of one link class (dB domain) plus heights."""

    a: float
    b: float
    c: float
    d: float
    sigma_db: float
    h_tx: float
    h_rx: float
    label: str = "direct"

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("path-loss slope a must be > 0 (alpha = a/10)")
        if self.sigma_db < 0:
            raise ValueError("sigma_db must be >= 0")
        if self.h_tx <= 1.0 or self.h_rx <= 1.0:
            raise ValueError("antenna heights must exceed 1 m")
        if self.label not in LINK_LABELS:
            raise ValueError(f"unknown link label {self.label!r}")

    @property
    def alpha(self) -> float:
        return self.a / 10.0

    @property
    def sigma_nat(self) -> float:
        return self.sigma_db * DB_TO_NAT


@dataclass(frozen=True)
class AntennaPattern:
    """Sectored gain G(theta) = g_max - min(12*(theta/theta_3db)^2, a_max) dB.

    ``omni = True`` collapses the pattern to 0 dB everywhere (oracle/bound
    comparisons where the gain must cancel).
    """

    g_max_db: float = 18.0
    theta_3db_deg: float = 65.0
    a_max_db: float = 20.0
    omni: bool = False

    def gain_db(self, theta_rad):
        if self.omni:
            return np.zeros_like(np.asarray(theta_rad, dtype=float))
        theta_deg = np.rad2deg(np.abs(np.asarray(theta_rad, dtype=float)))
        return self.g_max_db - np.minimum(12.0 * (theta_deg / self.theta_3db_deg) ** 2, self.a_max_db)

    def gain_linear(self, theta_rad):
        return 10.0 ** (self.gain_db(theta_rad) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Rate, noise, carrier, outage target and the four link models."""

    rate: float
    noise_w: float
    f_c_ghz: float
    p_out: float
    links: dict = field(default_factory=dict)
    antenna: AntennaPattern = AntennaPattern()

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be > 0 bit/channel use (R = 0 is degenerate: all RF energies vanish)")
        if self.noise_w <= 0:
            raise ValueError("noise must be > 0 W")
        if not 0.0 < self.p_out < 1.0:
            raise ValueError("p_out must lie in (0, 1)")
        missing = [k for k in LINK_LABELS if k not in self.links]
        if missing:
            raise ValueError(f"missing link models: {missing}")

    def link(self, label: str) -> LinkModel:
        return self.links[label]


def noise_dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def path_loss(link: LinkModel, dist, f_c_ghz: float):
    """Linear attenuation gamma = K * d^alpha (>= 1 nominally, unchecked)."""
    dist = np.asarray(dist, dtype=float)
    if np.any(dist <= 0.0):
        raise ValueError("distance must be > 0")
    pl_db = (
        link.a * np.log10(dist)
        + link.b
        + link.c * np.log10(f_c_ghz / 5.0)
        + link.d * np.log10((link.h_tx - 1.0) * (link.h_rx - 1.0))
    )
    out = 10.0 ** (pl_db / 10.0)
    if out.ndim == 0:
        return float(out)
    return out


def _load_link_table(raw: dict, source: str) -> dict:
    links = {}
    for label in LINK_LABELS:
        if label not in raw:
            raise LinkParameterError(f"{source}: missing section [{label}]")
        section = raw[label]
        fields = {}
        for key in ("a", "b", "c", "d", "sigma_db", "h_tx", "h_rx"):
            if key not in section:
                raise LinkParameterError(f"{source}: [{label}] misses key {key!r}")
            value = section[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise LinkParameterError(f"{source}: [{label}].{key} must be a number, got {value!r}")
            fields[key] = float(value)
        extra = set(section) - {"a", "b", "c", "d", "sigma_db", "h_tx", "h_rx"}
        if extra:
            raise LinkParameterError(f"{source}: [{label}] has unknown keys {sorted(extra)}")
        try:
            links[label] = LinkModel(label=label, **fields)
        except ValueError as exc:
            raise LinkParameterError(f"{source}: [{label}]: {exc}") from exc
    extra_sections = set(raw) - set(LINK_LABELS) - {"version"}
    if extra_sections:
        raise LinkParameterError(f"{source}: unknown sections {sorted(extra_sections)}")
    return links


def load_link_models(path=None) -> dict:
    """Parse a link-parameter file; defaults to the packaged transcription."""
    if path is None:
        ref = importlib.resources.files("relaycell.data").joinpath("winner_links.toml")
        raw = tomllib.loads(ref.read_text())
        return _load_link_table(raw, "winner_links.toml")
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise LinkParameterError(f"{path}: {exc}") from exc
    return _load_link_table(raw, str(path))


def bs_gain_linear(cfg: ScenarioConfig, bs_pos: np.ndarray, targets: np.ndarray, boresight: np.ndarray):
    """Antenna gain from a BS toward target points (linear)."""
    vec = np.asarray(targets, dtype=float).reshape(-1, 2) - np.asarray(bs_pos, dtype=float)
    theta = np.arctan2(vec[:, 1], vec[:, 0]) - np.arctan2(boresight[1], boresight[0])
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return cfg.antenna.gain_linear(theta)


def _distances(points: np.ndarray, anchor: np.ndarray):
    d = np.linalg.norm(np.asarray(points, dtype=float).reshape(-1, 2) - np.asarray(anchor, dtype=float), axis=1)
    return np.maximum(d, MIN_DISTANCE_M)


def shadow_free_energies(users: np.ndarray, relay: np.ndarray, cfg: ScenarioConfig, bs_pos, boresight=None):
    """Shadow-free (E_d0, E_b0, E_r0) arrays for users and one relay position.

    ``relay`` may be None (direct-only evaluation: E_b0/E_r0 returned as inf).
    """
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    bs_pos = np.asarray(bs_pos, dtype=float)
    if boresight is None:
        boresight = -bs_pos if np.linalg.norm(bs_pos) > 0 else np.array([-1.0, 0.0])
    n = cfg.noise_w
    amp_d = (2.0**cfg.rate - 1.0) * n
    amp_2 = (2.0 ** (2.0 * cfg.rate) - 1.0) * n / 2.0

    gain_d = bs_gain_linear(cfg, bs_pos, users, boresight)
    e_d0 = amp_d * path_loss(cfg.link("direct"), _distances(users, bs_pos), cfg.f_c_ghz) / gain_d
    if relay is None:
        inf = np.full(len(users), np.inf)
        return e_d0, inf, inf
    relay = np.asarray(relay, dtype=float)
    gain_b = bs_gain_linear(cfg, bs_pos, relay.reshape(1, 2), boresight)[0]
    e_b0 = amp_2 * path_loss(cfg.link("backhaul"), _distances(relay.reshape(1, 2), bs_pos), cfg.f_c_ghz)[0] / gain_b
    e_r0 = amp_2 * path_loss(cfg.link("access"), _distances(users, relay), cfg.f_c_ghz)
    return e_d0, np.full(len(users), e_b0), e_r0


def rf_energies(u, relay, cfg: ScenarioConfig, layout):
    """Per-link energies for one user as LogNormals (E_d, E_b, E_r).

    ``u`` is a UserPos or (x, y) pair, ``relay`` a position or None.  The
    direct and backhaul links carry the configured BS antenna gain; sigma of
    each returned distribution is the link's configured shadowing spread
    (distance independent).
    """
    point = np.asarray([u.x, u.y] if hasattr(u, "x") else u, dtype=float).reshape(1, 2)
    e_d0, e_b0, e_r0 = shadow_free_energies(point, None if relay is None else np.asarray(relay), cfg, layout.bs_pos)
    s_d = cfg.link("direct").sigma_nat
    s_b = cfg.link("backhaul").sigma_nat
    s_r = cfg.link("access").sigma_nat
    e_d = LogNormal(float(np.log(e_d0[0])), s_d)
    if relay is None:
        return e_d, None, None
    return (
        e_d,
        LogNormal(float(np.log(e_b0[0])), s_b),
        LogNormal(float(np.log(e_r0[0])), s_r),
    )
