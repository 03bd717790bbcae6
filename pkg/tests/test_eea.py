import numpy as np
import pytest

from relaycell import eea, oracle, rea
from relaycell.geometry import CellLayout, sector_grid
from relaycell.schemes import EnergyProfile, SchemeKind
from tests.test_rea import ctx_from_values


def test_sigma_zero_relay_cheaper_exact():
    # deterministic limit: relaying strictly cheaper and feasible
    ctx = ctx_from_values(0.4, 0.1, 0.05)
    est = eea.expected_rf_energy(ctx)
    assert est.total == pytest.approx(0.15, abs=1e-9)
    assert est.e_ed_ub == pytest.approx(0.0, abs=1e-12)


def test_sigma_zero_direct_cheaper_exact():
    ctx = ctx_from_values(0.2, 0.3, 0.1)
    est = eea.expected_rf_energy(ctx)
    assert est.total == pytest.approx(0.2, abs=1e-9)
    assert est.e_er_lb == pytest.approx(0.0, abs=1e-12)


def test_sigma_zero_coverage_forced_branches():
    # direct infeasible: coverage relaying pays the relay path
    est = eea.expected_rf_energy(ctx_from_values(2.0, 0.1, 0.05))
    assert est.total == pytest.approx(0.15, abs=1e-9)
    assert est.e_cr == pytest.approx(0.15, abs=1e-9)
    # relay path infeasible: coverage direct
    est = eea.expected_rf_energy(ctx_from_values(0.3, 2.0, 0.05))
    assert est.total == pytest.approx(0.3, abs=1e-9)
    assert est.e_cd == pytest.approx(0.3, abs=1e-9)


def test_sigma_zero_degeneracy_matches_min_rule():
    rng = np.random.default_rng(4)
    for _ in range(60):
        e_d0 = float(rng.uniform(0.02, 0.9))
        e_b0 = float(rng.uniform(0.005, 0.5))
        e_r0 = float(rng.uniform(0.005, 0.45))
        if abs(e_d0 - (e_b0 + e_r0)) < 1e-3 or abs(e_d0 - 0.5) < 1e-3:
            continue  # stay off decision boundaries
        ctx = ctx_from_values(e_d0, e_b0, e_r0)
        est = eea.expected_rf_energy(ctx)
        relay_possible = e_b0 <= 1.0 and e_r0 <= 0.5
        s = e_b0 + e_r0
        # p_low is tight in the deterministic limit only where its events
        # capture the relaying decision; restrict to those configurations.
        tight_relay = relay_possible and s <= e_d0 and (e_d0 <= 0.5 or s <= 0.5) and e_d0 <= 1.0
        direct_best = e_d0 <= 1.0 and (not relay_possible or s > e_d0)
        if tight_relay:
            assert est.total == pytest.approx(s, abs=1e-9)
        elif direct_best:
            assert est.total == pytest.approx(e_d0, abs=1e-9)


def test_bound_directions_vs_monte_carlo(scenario, profile):
    # n matches the stated oracle budget: both bounds difference large
    # closed-form terms, so the CI scale is part of the contract.
    layout = CellLayout(800.0, ((150.0, 0.0),), 70.0)
    pts = sector_grid(layout)
    raw = rea.build_context(pts, np.array([150.0, 0.0]), scenario, profile, layout)
    ctx = rea.with_circuitry(raw, profile, SchemeKind.TWO_HOP)
    est = eea.expected_rf_energy(ctx)
    n = 20_000
    for i, p in enumerate(pts[:: max(1, len(pts) // 24)]):
        j = i * max(1, len(pts) // 24)
        e = oracle.sample_decision(p, np.array([150.0, 0.0]), scenario, profile, layout,
                                   n, 17, SchemeKind.TWO_HOP, point_index=j)
        assert est.e_er_lb[j] <= e.er_sum_energy + 3 * e.ci_er_sum + 1e-9
        assert est.e_ed_ub[j] >= e.ed_direct_energy - 3 * e.ci_ed_direct - 1e-9


def test_total_tracks_monte_carlo(scenario, transmit_profile):
    layout = CellLayout(800.0, ((100.0, 0.0),), 60.0)
    pts = sector_grid(layout)
    raw = rea.build_context(pts, np.array([100.0, 0.0]), scenario, transmit_profile, layout)
    est = eea.expected_rf_energy(raw)
    _, rf_tot, _, _ = oracle.sample_grid(pts, np.array([100.0, 0.0]), scenario, transmit_profile,
                                         layout, 40_000, 23, SchemeKind.TWO_HOP)
    rel = np.abs(np.asarray(est.total) - rf_tot) / np.maximum(rf_tot, 1e-6)
    assert np.median(rel) < 0.02
    assert np.percentile(rel, 95) < 0.06


def test_membership_nested_in_threshold(scenario, profile):
    layout = CellLayout(800.0, ((100.0, 0.0),), 55.0)
    pts = sector_grid(layout)
    raw = rea.build_context(pts, np.array([100.0, 0.0]), scenario, profile, layout)
    ctx = rea.with_circuitry(raw, profile, SchemeKind.TWO_HOP)
    prev = None
    for e_t in (0.15, 0.3, 0.6, 1.2):
        member = eea.eea_membership(ctx, e_t)
        if prev is not None:
            assert np.all(prev <= member)
        prev = member
    with pytest.raises(ValueError):
        eea.eea_membership(ctx, 0.0)


def test_membership_threshold_limits(scenario, transmit_profile):
    layout = CellLayout(800.0, ((100.0, 0.0),), 60.0)
    pts = sector_grid(layout)
    raw = rea.build_context(pts, np.array([100.0, 0.0]), scenario, transmit_profile, layout)
    covered = np.asarray(rea.outage_check(raw))
    everything = eea.eea_membership(raw, 1e9)
    assert np.array_equal(everything, covered)  # entire covered sector
    est = eea.expected_rf_energy(raw)
    nothing = eea.eea_membership(raw, float(np.min(est.total)) * 0.5)
    assert not np.any(nothing)


def test_model_region_tracks_oracle_region(scenario, transmit_profile):
    # Region-containment oracle at E_T = 0.1 J: disagreements only at the
    # boundary (within one grid cell's worth of points).
    layout = CellLayout(800.0, ((100.0, 0.0),), 45.0)
    pts = sector_grid(layout)
    raw = rea.build_context(pts, np.array([100.0, 0.0]), scenario, transmit_profile, layout)
    member = eea.eea_membership(raw, 0.1)
    _, rf_tot, _, _ = oracle.sample_grid(pts, np.array([100.0, 0.0]), scenario, transmit_profile,
                                         layout, 30_000, 29, SchemeKind.TWO_HOP)
    emp_member = (rf_tot <= 0.1) & np.asarray(rea.outage_check(raw))
    disagreement = member ^ emp_member
    for idx in np.where(disagreement)[0]:
        # every disagreeing point has an agreeing neighbor across the
        # boundary within one grid step: |model - threshold| small
        assert abs(float(np.asarray(eea.expected_rf_energy(raw).total)[idx]) - 0.1) / 0.1 < 0.12


def test_circuitry_substitution_keeps_invariants(scenario):
    layout = CellLayout(800.0, ((100.0, 0.0),), 65.0)
    pts = sector_grid(layout)
    prof = EnergyProfile(e_dsp_2hop=0.050)
    raw = rea.build_context(pts, np.array([100.0, 0.0]), scenario, prof, layout)
    ctx = rea.with_circuitry(raw, prof, SchemeKind.TWO_HOP)
    est = eea.expected_rf_energy(ctx)
    total = np.asarray(est.total)
    assert np.all(total >= 0.0)
    assert np.all(np.asarray(est.e_cr) + np.asarray(est.e_cd) + np.asarray(est.e_er_lb) + np.asarray(est.e_ed_ub)
                  == pytest.approx(total))
