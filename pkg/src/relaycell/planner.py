"""Deployment planning: energy-per-area metric, placement search, scheme maps.

Two deployment objectives are supported:

* ``psi``: worst-case expected consumption over the covered sector (caps
  active) plus the transmission-independent offsets, per square meter of
  sector area.  Lower is better; full-sector coverage is required.
* ``gamma``: ratio of the mean relative energy saving of the served sector
  to the mean relative energy increase of the six neighbor cells (direct
  transmission evaluated without a power cap so coverage extension is
  credited as energy).  Higher is better.

The placement search is exhaustive over a polar candidate grid; by default
layouts are mirror-symmetric about the sector axis (matching the structure
of the optima), which allows evaluating the upper half grid only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from relaycell import eea, ici, rea
from relaycell.channel import ScenarioConfig, shadow_free_energies
from relaycell.geometry import (
    NO_RELAY,
    CellLayout,
    hexagon_grid,
    in_sector,
    neighbor_cells,
    sector_grid,
    serving_bs_relative,
)
from relaycell.oracle import point_rng, sample_shadowing
from relaycell.schemes import EnergyProfile, SchemeKind, pdf_energy_samples
from relaycell.stats import LogNormal


@dataclass(frozen=True)
class PointMetrics:
    """Per-point model values for one relay candidate over a fixed user grid."""

    covered: np.ndarray
    relaying: np.ndarray
    consumption: np.ndarray
    relay_rf_raw: np.ndarray
    assign_cost: np.ndarray
    direct_mean_uncapped: np.ndarray


@dataclass(frozen=True)
class PsiReport:
    """Energy-per-unit-area summary of one layout/scheme."""

    feasible: bool
    psi: float
    e_max: float
    e_idle: float
    d_b: float
    n_r: int
    relays: tuple
    failing_point: tuple = None


@dataclass(frozen=True)
class OptimizeResult:
    feasible: bool
    objective: str
    value: float
    layout: CellLayout = None


@dataclass(frozen=True)
class SchemeMap:
    """Per-location scheme choice maximizing the deployment ratio."""

    points: np.ndarray
    kinds: tuple
    candidates: tuple
    layout: CellLayout
    dsp_plus: float

    def region(self, kind: SchemeKind) -> np.ndarray:
        return np.array([k is kind for k in self.kinds])


def _idle_offsets(profile: EnergyProfile, n_r: int) -> float:
    return profile.e_b_tx_plus_u_rx + profile.e_b_idle + n_r * profile.e_r_idle


def _base_offsets(profile: EnergyProfile) -> float:
    return profile.e_b_tx_plus_u_rx + profile.e_b_idle


def rtx_path_cost(users, relay, cfg: ScenarioConfig, profile: EnergyProfile, layout) -> np.ndarray:
    """Shadow-free amplifier-weighted relay-path energy used for association."""
    e_d0, e_b0, e_r0 = shadow_free_energies(users, np.asarray(relay, dtype=float), cfg, layout.bs_pos)
    return profile.eta_b * e_b0 + profile.eta_r * e_r0


def point_metrics(users, relay, cfg: ScenarioConfig, profile: EnergyProfile, scheme: SchemeKind,
                  layout, uncapped: bool = False) -> PointMetrics:
    """Model evaluation of every user point against one relay (or None)."""
    users = np.atleast_2d(np.asarray(users, dtype=float))
    raw = rea.build_context(users, None if relay is None else np.asarray(relay, dtype=float), cfg, profile, layout)
    direct_mean = np.exp(np.asarray(raw.e_d.mu) + 0.5 * np.square(np.asarray(raw.e_d.sigma)))
    ctx = rea.with_circuitry(raw, profile, scheme)
    if uncapped:
        ctx = rea.uncap_direct(ctx)
    probs = rea.decision_probabilities(ctx)
    est = eea.expected_rf_energy(ctx)
    if relay is None:
        zeros = np.zeros(len(users))
        return PointMetrics(
            covered=np.asarray(probs.outage_ok, dtype=bool) + np.zeros(len(users), dtype=bool),
            relaying=zeros,
            consumption=np.asarray(est.total) + np.zeros(len(users)),
            relay_rf_raw=zeros,
            assign_cost=np.full(len(users), np.inf),
            direct_mean_uncapped=direct_mean,
        )
    return PointMetrics(
        covered=np.asarray(probs.outage_ok, dtype=bool),
        relaying=np.asarray(probs.relaying, dtype=float),
        consumption=np.asarray(est.total, dtype=float),
        relay_rf_raw=np.asarray(ici.expected_relay_rf(ctx), dtype=float) / profile.eta_r,
        assign_cost=rtx_path_cost(users, relay, cfg, profile, layout),
        direct_mean_uncapped=direct_mean,
    )


def assign_relays(users, layout: CellLayout, cfg: ScenarioConfig, profile: EnergyProfile) -> np.ndarray:
    """Index of the serving relay per user point (NO_RELAY without relays)."""
    users = np.atleast_2d(np.asarray(users, dtype=float))
    if layout.n_r == 0:
        return np.full(len(users), NO_RELAY)
    costs = np.stack([rtx_path_cost(users, r, cfg, profile, layout) for r in layout.relays])
    return np.argmin(costs, axis=0)


def gathered_metrics(users, layout, cfg, profile, scheme, uncapped):
    """Per-point metrics after relay association."""
    users = np.atleast_2d(np.asarray(users, dtype=float))
    if layout.n_r == 0:
        m = point_metrics(users, None, cfg, profile, scheme, layout, uncapped)
        return m, np.full(len(users), NO_RELAY)
    rows = [point_metrics(users, r, cfg, profile, scheme, layout, uncapped) for r in layout.relays]
    costs = np.stack([m.assign_cost for m in rows])
    idx = np.argmin(costs, axis=0)
    take = np.arange(len(users))

    def g(name):
        return np.stack([getattr(m, name) for m in rows])[idx, take]

    gathered = PointMetrics(
        covered=g("covered"),
        relaying=g("relaying"),
        consumption=g("consumption"),
        relay_rf_raw=g("relay_rf_raw"),
        assign_cost=g("assign_cost"),
        direct_mean_uncapped=rows[0].direct_mean_uncapped,
    )
    return gathered, idx


def psi(layout: CellLayout, scheme: SchemeKind, cfg: ScenarioConfig, profile: EnergyProfile) -> PsiReport:
    """Worst-case expected consumption per unit sector area."""
    users = sector_grid(layout)
    metrics, _ = gathered_metrics(users, layout, cfg, profile, scheme, uncapped=False)
    e_idle = _idle_offsets(profile, layout.n_r)
    if not np.all(metrics.covered):
        first = users[int(np.argmin(metrics.covered))]
        return PsiReport(False, math.inf, math.inf, e_idle, layout.d_b, layout.n_r,
                         layout.relays, failing_point=(float(first[0]), float(first[1])))
    e_max = float(np.max(metrics.consumption))
    return PsiReport(True, (e_max + e_idle) / layout.sector_area, e_max, e_idle,
                     layout.d_b, layout.n_r, layout.relays)


def victim_profile(layout: CellLayout, cfg: ScenarioConfig):
    """Absolute victim positions over cells 2-7 and their mean uncapped DTx RF.

    The relative geometry (distance and antenna angle to the serving BS) is
    identical in every cell, so the RF term is computed once on the relative
    hexagon grid and tiled across the six neighbors.
    """
    rel = hexagon_grid(layout.d_b, layout.grid_step)
    bs = serving_bs_relative(rel, layout.d_b)
    rf = np.empty(len(rel))
    sigma_d = cfg.link("direct").sigma_nat
    for vertex in np.unique(bs, axis=0):
        mask = np.all(bs == vertex, axis=1)
        e_d0, _, _ = shadow_free_energies(rel[mask], None, cfg, vertex, boresight=-vertex)
        rf[mask] = e_d0 * np.exp(0.5 * sigma_d**2)
    centers, _ = neighbor_cells(layout)
    victims = np.concatenate([rel + c for c in centers])
    return victims, np.tile(rf, len(centers))


def _interference_kernel(victims, relay_pos, cfg: ScenarioConfig) -> np.ndarray:
    """Per-victim factor mapping mean relay RF to mean interference."""
    return np.asarray(ici.interference_at(victims, relay_pos, 1.0, cfg), dtype=float)


def gamma(layout: CellLayout, cfg: ScenarioConfig, profile: EnergyProfile,
          scheme: SchemeKind = SchemeKind.TWO_HOP, point_values=None,
          covered_only: bool = False) -> ici.GammaReport:
    """Deployment gain-to-loss ratio of one layout.

    Direct transmission is evaluated without a power cap, so coverage
    extension is credited through energy; ``covered_only`` instead restricts
    the gain average to the points covered under the capped model (the
    alternative accounting, reported for comparison).  ``point_values``
    optionally injects per-point (consumption, relay RF) arrays (e.g. from a
    scheme map's Monte-Carlo evaluation); by default the closed-form models
    of ``scheme`` are used at every point.
    """
    users = sector_grid(layout)
    if point_values is None:
        metrics, idx = gathered_metrics(users, layout, cfg, profile, scheme, uncapped=True)
        consumption, relay_rf, direct_mean = metrics.consumption, metrics.relay_rf_raw, metrics.direct_mean_uncapped
    else:
        consumption, relay_rf, direct_mean, idx = point_values

    e1_base = profile.eta_b * direct_mean + _base_offsets(profile)
    e1_deploy = consumption + _base_offsets(profile) + layout.n_r * profile.e_r_idle
    gains = (e1_base - e1_deploy) / e1_base
    if covered_only:
        capped, _ = gathered_metrics(users, layout, cfg, profile, scheme, uncapped=False)
        gains = gains[np.asarray(capped.covered, dtype=bool)]

    if layout.n_r == 0:
        return ici.gamma_report(gains, np.zeros(0), 0, layout.d_b)

    victims, victim_rf = victim_profile(layout, cfg)
    interference = np.zeros(len(victims))
    for k, relay in enumerate(layout.relays):
        mean_radiated = float(np.mean(np.where(idx == k, relay_rf, 0.0)))
        if mean_radiated > 0.0:
            interference += mean_radiated * _interference_kernel(victims, relay, cfg)
    losses = ici.victim_relative_loss(victims, victim_rf, interference, cfg, profile)
    return ici.gamma_report(gains, losses, layout.n_r, layout.d_b)


# ---------------------------------------------------------------------------
# Exhaustive placement search
# ---------------------------------------------------------------------------


def candidate_positions(d_b: float, search_step: float):
    """Polar candidate grid over sector 1, split into axis and упper-half points.

    Radial rings every ``search_step`` meters; per ring the angular step is
    chosen for roughly equal arc spacing.  Returns (axis, pairs): axis points
    lie on the sector axis (y = 0), pair points have y > 0 and stand for the
    mirrored relay pair.
    """
    axis, pairs = [], []
    radii = np.arange(search_step, d_b + 0.5 * search_step, search_step)
    for r in radii:
        m = max(1, int(np.ceil((np.pi / 3.0) * r / search_step)))
        for j in range(m + 1):
            theta = np.deg2rad(60.0 * j / m)
            x, y = r * np.cos(theta), r * np.sin(theta)
            if not in_sector(np.array([x]), np.array([y]), d_b)[0]:
                continue
            if j == 0:
                axis.append((x, 0.0))
            else:
                pairs.append((x, y))
    axis.sort()
    pairs.sort()
    return np.array(axis).reshape(-1, 2), np.array(pairs).reshape(-1, 2)


def _symmetric_layout_units(n_r: int, n_axis: int, n_pairs: int):
    """Yield tuples of (axis_indices, pair_indices) composing n_r relays."""
    n_pair_units = n_r // 2
    if n_r % 2 == 0:
        for combo in itertools.combinations(range(n_pairs), n_pair_units):
            yield (), combo
    else:
        for a in range(n_axis):
            for combo in itertools.combinations(range(n_pairs), n_pair_units):
                yield (a,), combo


def _units_to_relays(axis_pts, pair_pts, axis_idx, pair_idx):
    relays = [tuple(axis_pts[a]) for a in axis_idx]
    for p in pair_idx:
        x, y = pair_pts[p]
        relays.append((x, y))
        relays.append((x, -y))
    return tuple(sorted(relays, key=lambda r: (r[1] < 0, r[0], abs(r[1]))))


def optimize(objective: str, n_r: int, d_b: float, scheme: SchemeKind, cfg: ScenarioConfig,
             profile: EnergyProfile, search_step: float = 25.0, grid_step: float = 40.0,
             symmetric: bool = True) -> OptimizeResult:
    """Exhaustive placement search minimizing psi or maximizing gamma.

    With ``symmetric`` (default) the layouts are mirror pairs about the
    sector axis plus on-axis relays for odd counts, and the model is
    evaluated on the upper half grid only.  The reported layout lists the
    y >= 0 relays first (canonical representative of the mirror pair).
    """
    if objective not in ("psi", "gamma"):
        raise ValueError("objective must be 'psi' or 'gamma'")
    if n_r < 1:
        raise ValueError("n_r must be >= 1")
    if search_step <= 0:
        raise ValueError("search_step must be > 0")
    base = CellLayout(d_b, (), grid_step)
    if not symmetric:
        return _optimize_full(objective, n_r, scheme, cfg, profile, search_step, base)

    axis_pts, pair_pts = candidate_positions(d_b, search_step)
    users = sector_grid(base)
    upper = users[users[:, 1] > 0.0]
    n_full = len(users)
    uncapped = objective == "gamma"

    def metrics_for(points):
        return [point_metrics(upper, p, cfg, profile, scheme, base, uncapped=uncapped) for p in points]

    axis_m = metrics_for(axis_pts)
    pair_m = metrics_for(pair_pts)

    if len(axis_m) + len(pair_m) == 0:
        return OptimizeResult(False, objective, math.nan)

    if objective == "gamma":
        # Per-unit victim-loss weights: mean relative loss per joule of mean
        # radiated RF (pair weights already sum both twins' kernels).
        victims, victim_rf = victim_profile(base, cfg)
        e1_base = profile.eta_b * (axis_m[0] if axis_m else pair_m[0]).direct_mean_uncapped + _base_offsets(profile)

        def loss_per_joule(kernel):
            return float(np.mean(ici.victim_relative_loss(victims, victim_rf, kernel, cfg, profile)))

        kern_axis = [loss_per_joule(_interference_kernel(victims, p, cfg)) for p in axis_pts]
        kern_pair = [
            loss_per_joule(_interference_kernel(victims, p, cfg))
            + loss_per_joule(_interference_kernel(victims, (p[0], -p[1]), cfg))
            for p in pair_pts
        ]

    e_idle = _idle_offsets(profile, n_r)
    best_value = math.inf if objective == "psi" else -math.inf
    best_layout = None
    better = (lambda a, b: a < b) if objective == "psi" else (lambda a, b: a > b)

    for axis_idx, pair_idx in _symmetric_layout_units(n_r, len(axis_pts), len(pair_pts)):
        rows = [axis_m[a] for a in axis_idx] + [pair_m[p] for p in pair_idx]
        costs = np.stack([m.assign_cost for m in rows])
        which = np.argmin(costs, axis=0)
        take = np.arange(len(upper))
        covered = np.stack([m.covered for m in rows])[which, take]
        if objective == "psi":
            if not np.all(covered):
                continue
            cons = np.stack([m.consumption for m in rows])[which, take]
            value = (float(np.max(cons)) + e_idle) / base.sector_area
        else:
            cons = np.stack([m.consumption for m in rows])[which, take]
            e1_deploy = cons + _base_offsets(profile) + n_r * profile.e_r_idle
            gain = float(np.mean((e1_base - e1_deploy) / e1_base))
            rf = np.stack([m.relay_rf_raw for m in rows])
            # Mean radiated RF per relay over the full grid: an axis relay
            # collects both halves, a pair twin collects its own half only.
            loss = 0.0
            for u, a in enumerate(axis_idx):
                loss += 2.0 * float(np.sum(np.where(which == u, rf[u], 0.0))) / n_full * kern_axis[a]
            offset = len(axis_idx)
            for u, p in enumerate(pair_idx):
                loss += float(np.sum(np.where(which == offset + u, rf[offset + u], 0.0))) / n_full * kern_pair[p]
            value = gain / loss if loss > 0.0 else math.inf
        if better(value, best_value):
            best_value = value
            best_layout = _units_to_relays(axis_pts, pair_pts, axis_idx, pair_idx)

    if best_layout is None:
        return OptimizeResult(False, objective, math.nan)
    return OptimizeResult(True, objective, best_value, CellLayout(d_b, best_layout, grid_step))


def _optimize_full(objective, n_r, scheme, cfg, profile, search_step, base: CellLayout):
    """Asymmetric exhaustive search (small candidate sets only)."""
    axis_pts, pair_pts = candidate_positions(base.d_b, search_step)
    candidates = [tuple(p) for p in axis_pts] + [tuple(p) for p in pair_pts] + [(p[0], -p[1]) for p in pair_pts]
    candidates.sort()
    best_value = math.inf if objective == "psi" else -math.inf
    best = None
    better = (lambda a, b: a < b) if objective == "psi" else (lambda a, b: a > b)
    for combo in itertools.combinations(candidates, n_r):
        layout = CellLayout(base.d_b, combo, base.grid_step)
        if objective == "psi":
            rep = psi(layout, scheme, cfg, profile)
            if not rep.feasible:
                continue
            value = rep.psi
        else:
            value = gamma(layout, cfg, profile, scheme).gamma
        if better(value, best_value):
            best_value = value
            best = _canonical_relays(combo)
    if best is None:
        return OptimizeResult(False, objective, math.nan)
    return OptimizeResult(True, objective, best_value, CellLayout(base.d_b, best, base.grid_step))


def _canonical_relays(relays):
    """Mirror-canonical representative: prefer the variant led by y >= 0."""
    def ordered(rel):
        return tuple(sorted(rel, key=lambda r: (r[1] < 0, r[0], abs(r[1]))))

    def score(rel):
        return tuple((r[1] < 0, round(r[0], 9), round(abs(r[1]), 9), round(-r[1], 9)) for r in rel)

    a = ordered(relays)
    b = ordered(tuple((x, -y) for x, y in relays))
    return a if score(a) <= score(b) else b


# ---------------------------------------------------------------------------
# Per-location coding-scheme map
# ---------------------------------------------------------------------------

_ORDER = (SchemeKind.DTX, SchemeKind.TWO_HOP, SchemeKind.EO_PDF, SchemeKind.IR_PDF)


def _mc_point_values(users, layout, cfg, profile, idx, candidates, dsp_plus, mc_samples, seed):
    """Common-random-number Monte-Carlo per-point (consumption, relay RF).

    Each candidate scheme is evaluated as committed at the location: two-hop
    relays whenever the relay path is feasible, the PDF schemes follow their
    own optimized allocation (which embeds a direct mode), and an infeasible
    relay path falls back to direct transmission.  Direct transmission
    carries no power cap here (the map feeds the deployment ratio, which
    credits coverage extension through energy).  Returns dict
    kind -> (cons_mean, relay_mean) arrays plus the per-point mean direct
    energy.
    """
    users = np.atleast_2d(np.asarray(users, dtype=float))
    n_pts = len(users)
    per_relay = {}
    for k, relay in enumerate(layout.relays):
        sel = idx == k
        if np.any(sel):
            e_d0, e_b0, e_r0 = shadow_free_energies(users[sel], np.asarray(relay), cfg, layout.bs_pos)
            per_relay[k] = (np.where(sel)[0], e_d0, e_b0, e_r0)

    out = {kind: (np.zeros(n_pts), np.zeros(n_pts)) for kind in candidates}
    direct_mean = np.zeros(n_pts)
    amp_d = (2.0**cfg.rate - 1.0) * cfg.noise_w
    amp_2 = (2.0 ** (2.0 * cfg.rate) - 1.0) * cfg.noise_w / 2.0
    dsp_2hop = profile.e_dsp_2hop
    dsp_pdf = profile.e_dsp_2hop + dsp_plus

    for k, (indices, e_d0, e_b0, e_r0) in per_relay.items():
        for j, point_index in enumerate(indices):
            rng = point_rng(seed, int(point_index))
            s = sample_shadowing(cfg, mc_samples, rng)
            e_d = e_d0[j] / s[:, 0]
            e_b = e_b0[j] / s[:, 1]
            e_r = e_r0[j] / s[:, 2]
            cons_dtx = profile.eta_b * e_d
            direct_mean[point_index] = float(np.mean(e_d))
            for kind in candidates:
                if kind is SchemeKind.DTX:
                    cons, rad = cons_dtx, np.zeros_like(e_d)
                elif kind is SchemeKind.TWO_HOP:
                    ok = (e_b <= profile.e_b_max) & (e_r <= profile.e_r_max)
                    cons_r = profile.eta_b * e_b + profile.eta_r * e_r + dsp_2hop
                    cons = np.where(ok, cons_r, cons_dtx)
                    rad = np.where(ok, e_r, 0.0)
                else:
                    objective = "total" if kind is SchemeKind.EO_PDF else "relay"
                    g_d = amp_d / e_d
                    g_b = amp_2 / e_b
                    g_r = amp_2 / e_r
                    a_b, a_r, ok = pdf_energy_samples(objective, g_d, g_b, g_r, cfg.rate, cfg.noise_w,
                                                      profile.e_b_max, profile.e_r_max)
                    relay_used = a_r > 1e-15
                    cons_p = profile.eta_b * a_b + profile.eta_r * a_r + np.where(relay_used, dsp_pdf, 0.0)
                    cons = np.where(ok, cons_p, cons_dtx)
                    rad = np.where(ok & relay_used, a_r, 0.0)
                out[kind][0][point_index] = float(np.mean(cons))
                out[kind][1][point_index] = float(np.mean(rad))
    return out, direct_mean


def scheme_map(layout: CellLayout, cfg: ScenarioConfig, profile: EnergyProfile,
               candidates=(SchemeKind.TWO_HOP, SchemeKind.EO_PDF, SchemeKind.IR_PDF),
               dsp_plus: float = None, mc_samples: int = 512, seed: int = 0) -> SchemeMap:
    """Per-location scheme selection maximizing the deployment ratio.

    Starting from an all-two-hop baseline, each location is switched to every
    candidate in turn (the ratio's numerator and denominator are sums over
    locations, so per-location switching equals per-location selection) and
    the scheme with the best resulting ratio wins; exact ties resolve to the
    simplest scheme in the order DTx < TwoHop < EoPdf < IrPdf.
    """
    if layout.n_r == 0:
        raise ValueError("scheme_map requires at least one relay")
    dsp_plus = profile.e_dsp_plus_pdf if dsp_plus is None else dsp_plus
    candidates = tuple(sorted(set(candidates) | {SchemeKind.TWO_HOP}, key=_ORDER.index))
    users = sector_grid(layout)
    idx = assign_relays(users, layout, cfg, profile)
    values, direct_mean = _mc_point_values(users, layout, cfg, profile, idx, candidates, dsp_plus, mc_samples, seed)

    n_pts = len(users)
    e1_base = profile.eta_b * direct_mean + _base_offsets(profile)
    victims, victim_rf = victim_profile(layout, cfg)
    loss_weight = np.empty(layout.n_r)
    for k, relay in enumerate(layout.relays):
        kern = _interference_kernel(victims, relay, cfg)
        loss_weight[k] = float(np.mean(ici.victim_relative_loss(victims, victim_rf, kern, cfg, profile)))

    base_cons, base_rad = values[SchemeKind.TWO_HOP]
    e1_deploy = base_cons + _base_offsets(profile) + layout.n_r * profile.e_r_idle
    gain_base = (e1_base - e1_deploy) / e1_base
    g_total = float(np.mean(gain_base))
    relay_share = np.array([float(np.mean(np.where(idx == k, base_rad, 0.0))) for k in range(layout.n_r)])
    l_total = float(np.sum(relay_share * loss_weight))

    kinds = []
    for i in range(n_pts):
        k = idx[i]
        ratios = []
        for kind in candidates:
            cons, rad = values[kind]
            e1_i = cons[i] + _base_offsets(profile) + layout.n_r * profile.e_r_idle
            gain_i = (e1_base[i] - e1_i) / e1_base[i]
            g = g_total + (gain_i - gain_base[i]) / n_pts
            l = l_total + (rad[i] - base_rad[i]) / n_pts * loss_weight[k]
            ratios.append(g / l if l > 0.0 else math.inf)
        top = max(ratios)
        tol = 1e-12 * max(1.0, abs(top))
        tied = [kind for kind, r in zip(candidates, ratios) if r >= top - tol]
        kinds.append(min(tied, key=_ORDER.index))
    return SchemeMap(points=users, kinds=tuple(kinds), candidates=candidates, layout=layout, dsp_plus=dsp_plus)
