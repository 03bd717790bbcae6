"""Monte-Carlo ground truth for the closed-form models and error ratios.

Sampling draws the three shadowing coefficients i.i.d. log-normal per block
and replays the exact decision process: relaying when direct transmission is
infeasible under the BS cap, direct when relaying is infeasible, the cheaper
of the two (amplifier-weighted, plus the relay's dsp offset) when both are
feasible, outage when neither is.

Streams are counter-based: point i of a run seeded with s draws from
Philox(key=[s, i]), so any parallel or partial evaluation of a grid yields
bit-identical numbers per point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from relaycell import eea, rea, stats
from relaycell.channel import ScenarioConfig, shadow_free_energies
from relaycell.ici import expected_relay_rf
from relaycell.schemes import EnergyProfile, SchemeKind


@dataclass(frozen=True)
class SampleEstimate:
    """Empirical decision/energy estimates at one location.

    Probabilities carry binomial CI half-widths (one sigma); energies carry
    standard-error half-widths.  ``rf_total``/``rf_relay`` are the
    consumption-weighted quantities matching the model context in use
    (raw transmit energies when the profile is unit-amplifier/zero-dsp).
    """

    n: int
    p_rtx: float
    p_dtx: float
    p_outage: float
    p_cr: float
    p_er: float
    p_ed: float
    p_cd: float
    rf_total: float
    rf_relay: float
    rf_relay_raw: float
    er_sum_energy: float
    ed_direct_energy: float
    ci_p: float
    ci_rf_total: float
    ci_rf_relay: float
    ci_er_sum: float
    ci_ed_direct: float


def wilson_halfwidth(p_hat: float, n: int, z: float = 3.0) -> float:
    """Half-width of the Wilson score interval (well-behaved at p_hat = 0/1)."""
    denom = 1.0 + z * z / n
    return z * np.sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)) / denom


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for grid point ``index`` of run ``seed``."""
    return np.random.Generator(np.random.Philox(key=np.array([seed % 2**64, index % 2**64], dtype=np.uint64)))


def sample_shadowing(cfg: ScenarioConfig, n: int, rng: np.random.Generator):
    """(s_d, s_b, s_r) multiplicative shadowing draws, prefix-stable in n."""
    z = rng.standard_normal((n, 3))
    sig = np.array(
        [cfg.link("direct").sigma_nat, cfg.link("backhaul").sigma_nat, cfg.link("access").sigma_nat]
    )
    return np.exp(z * sig)


def decide(e_d, e_b, e_r, profile: EnergyProfile, scheme: SchemeKind, cap_d=None):
    """Per-sample decisions. Returns (rtx, dtx, outage) boolean arrays."""
    cap_d = profile.e_b_max if cap_d is None else cap_d
    dtx_ok = e_d <= cap_d
    rtx_ok = (e_b <= profile.e_b_max) & (e_r <= profile.e_r_max)
    cheaper = profile.eta_b * e_b + profile.eta_r * e_r + profile.dsp(scheme) <= profile.eta_b * e_d
    rtx = rtx_ok & (~dtx_ok | cheaper)
    dtx = dtx_ok & ~rtx
    return rtx, dtx, ~(rtx | dtx)


def sample_decision(u, relay, cfg: ScenarioConfig, profile: EnergyProfile, layout, n: int, seed: int,
                    scheme: SchemeKind = SchemeKind.TWO_HOP, point_index: int = 0, cap_d=None) -> SampleEstimate:
    """Empirical estimates at one user location (reproducible per seed/index)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    point = np.asarray([u.x, u.y] if hasattr(u, "x") else u, dtype=float).reshape(1, 2)
    e_d0, e_b0, e_r0 = shadow_free_energies(point, np.asarray(relay, dtype=float), cfg, layout.bs_pos)
    rng = point_rng(seed, point_index)
    s = sample_shadowing(cfg, n, rng)
    return _estimate(e_d0[0] / s[:, 0], e_b0[0] / s[:, 1], e_r0[0] / s[:, 2], profile, scheme, n, cap_d)


def _estimate(e_d, e_b, e_r, profile: EnergyProfile, scheme: SchemeKind, n: int, cap_d=None) -> SampleEstimate:
    rtx, dtx, outage = decide(e_d, e_b, e_r, profile, scheme, cap_d)
    dtx_ok = e_d <= (profile.e_b_max if cap_d is None else cap_d)
    rtx_ok = (e_b <= profile.e_b_max) & (e_r <= profile.e_r_max)
    dsp = profile.dsp(scheme)

    consumption_rtx = profile.eta_b * e_b + profile.eta_r * e_r + dsp
    consumption_dtx = profile.eta_b * e_d
    rf_total_samples = np.where(rtx, consumption_rtx, 0.0) + np.where(dtx, consumption_dtx, 0.0)
    rf_relay_samples = np.where(rtx, profile.eta_r * e_r, 0.0)
    rf_relay_raw = np.where(rtx, e_r, 0.0)
    er_mask = rtx & dtx_ok
    ed_mask = dtx & rtx_ok
    er_sum_samples = np.where(er_mask, consumption_rtx, 0.0)
    ed_samples = np.where(ed_mask, consumption_dtx, 0.0)

    def ci(x):
        return float(np.std(x) / np.sqrt(n))

    p_rtx = float(np.mean(rtx))
    return SampleEstimate(
        n=n,
        p_rtx=p_rtx,
        p_dtx=float(np.mean(dtx)),
        p_outage=float(np.mean(outage)),
        p_cr=float(np.mean(rtx & ~dtx_ok)),
        p_er=float(np.mean(er_mask)),
        p_ed=float(np.mean(ed_mask)),
        p_cd=float(np.mean(dtx & ~rtx_ok)),
        rf_total=float(np.mean(rf_total_samples)),
        rf_relay=float(np.mean(rf_relay_samples)),
        rf_relay_raw=float(np.mean(rf_relay_raw)),
        er_sum_energy=float(np.mean(er_sum_samples)),
        ed_direct_energy=float(np.mean(ed_samples)),
        ci_p=float(np.sqrt(max(p_rtx * (1.0 - p_rtx), 0.25 / n) / n)),
        ci_rf_total=ci(rf_total_samples),
        ci_rf_relay=ci(rf_relay_samples),
        ci_er_sum=ci(er_sum_samples),
        ci_ed_direct=ci(ed_samples),
    )


def sample_grid(users, relay, cfg: ScenarioConfig, profile: EnergyProfile, layout, n: int, seed: int,
                scheme: SchemeKind = SchemeKind.TWO_HOP, cap_d=None, threads: int = 1):
    """Per-point empirical (p_rtx, rf_total, rf_relay_raw, p_outage) arrays.

    Each point draws from its own counter-based stream, so the result is
    identical however the points are scheduled; ``threads`` > 1 evaluates
    them from a thread pool (the heavy numpy work releases the GIL).
    """
    users = np.atleast_2d(np.asarray(users, dtype=float))
    e_d0, e_b0, e_r0 = shadow_free_energies(users, np.asarray(relay, dtype=float), cfg, layout.bs_pos)
    p_rtx = np.empty(len(users))
    rf_total = np.empty(len(users))
    rf_relay = np.empty(len(users))
    p_out = np.empty(len(users))

    def run_point(i: int):
        rng = point_rng(seed, i)
        s = sample_shadowing(cfg, n, rng)
        est = _estimate(e_d0[i] / s[:, 0], e_b0[i] / s[:, 1], e_r0[i] / s[:, 2], profile, scheme, n, cap_d)
        p_rtx[i] = est.p_rtx
        rf_total[i] = est.rf_total
        rf_relay[i] = est.rf_relay_raw
        p_out[i] = est.p_outage

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_point, range(len(users))))
    else:
        for i in range(len(users)):
            run_point(i)
    return p_rtx, rf_total, rf_relay, p_out


@dataclass(frozen=True)
class ValidationReport:
    """Symmetric-difference error ratios of model vs sampled regions."""

    zeta_r: float
    zeta_e: float
    zeta_i: float
    per_threshold: dict = field(default_factory=dict)
    samples: int = 0
    seed: int = 0
    grid_points: int = 0

    def rows(self):
        for kind in ("p_t", "e_t", "e_t_r"):
            for threshold, zeta in self.per_threshold.get(kind, []):
                yield kind, threshold, zeta


def _region_error(model_member: np.ndarray, oracle_member: np.ndarray) -> float:
    """|symmetric difference| / |oracle region| in grid-cell area units."""
    disagree = int(np.sum(model_member ^ oracle_member))
    reference = int(np.sum(oracle_member))
    if reference == 0:
        return 0.0 if disagree == 0 else 1.0
    return disagree / reference


def error_ratios(users, relay, cfg: ScenarioConfig, profile: EnergyProfile, layout, thresholds,
                 n: int = 20000, seed: int = 0, scheme: SchemeKind = SchemeKind.TWO_HOP,
                 threads: int = 1) -> ValidationReport:
    """Compare model and oracle regions per threshold.

    ``thresholds`` maps "p_t" to relaying-probability thresholds, "e_t" to
    expected-consumption thresholds and "e_t_r" to mean-relay-RF thresholds.
    Points failing the model outage condition are excluded (restricted
    coverage), mirroring how the error is concentrated at the cell edge.
    """
    if not any(thresholds.get(k) for k in ("p_t", "e_t", "e_t_r")):
        raise ValueError("thresholds must not be empty")
    users = np.atleast_2d(np.asarray(users, dtype=float))
    raw = rea.build_context(users, np.asarray(relay, dtype=float), cfg, profile, layout)
    ctx = rea.with_circuitry(raw, profile, scheme)
    probs = rea.decision_probabilities(ctx)
    covered = np.asarray(probs.outage_ok)
    est = eea.expected_rf_energy(ctx)
    model_relaying = np.asarray(probs.relaying)
    model_energy = np.asarray(est.total)
    model_relay_rf = np.asarray(expected_relay_rf(ctx)) / profile.eta_r

    emp_rtx, emp_total, emp_relay, _ = sample_grid(users, relay, cfg, profile, layout, n, seed, scheme,
                                                   threads=threads)

    per = {"p_t": [], "e_t": [], "e_t_r": []}
    for p_t in thresholds.get("p_t", []) or []:
        per["p_t"].append((p_t, _region_error(
            (model_relaying >= p_t) & covered, (emp_rtx >= p_t) & covered)))
    for e_t in thresholds.get("e_t", []) or []:
        per["e_t"].append((e_t, _region_error(
            (model_energy <= e_t) & covered, (emp_total <= e_t) & covered)))
    for e_tr in thresholds.get("e_t_r", []) or []:
        per["e_t_r"].append((e_tr, _region_error(
            (model_relay_rf <= e_tr) & covered, (emp_relay <= e_tr) & covered)))

    def avg(rows):
        return float(np.mean([z for _, z in rows])) if rows else 0.0

    return ValidationReport(
        zeta_r=avg(per["p_t"]),
        zeta_e=avg(per["e_t"]),
        zeta_i=avg(per["e_t_r"]),
        per_threshold=per,
        samples=n,
        seed=seed,
        grid_points=int(covered.sum()),
    )
