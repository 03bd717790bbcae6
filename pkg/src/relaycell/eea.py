"""Closed-form expected RF transmit energy and energy-efficiency-area membership.

The expected RF energy to serve one location splits over the four decision
events: coverage-forced relaying/direct (both with exact truncated-mean
closed forms) and energy-efficient relaying/direct (bounded below/above so
the sum stays a tight upper proxy of the true expectation):

    total = p_cr * (E[E_b | <=cap_b] + E[E_r | <=cap_r])
          + [ mean(S) * p_low1_scaled  +  E[S | S <= cap_r] * p_low2 ]     (lower bound)
          + p_cd * E[E_d | <=cap_d]
          + [ E[E_d; E_d<=cap_d] * P(b,r feasible)
              - mean(E_d) * p_low1_dscaled
              - E[E_d | cap_r<=E_d<=cap_d] * p_low2 ]                      (upper bound)

where the scaled variants substitute exp(var) * X inside the first
lower-bound component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from relaycell import stats
from relaycell.rea import BrSum, EnergyContext, coverage_probs, outage_check, p_low_components


@dataclass(frozen=True)
class EnergyEstimate:
    """Expected-RF-energy decomposition at one location (or per-point arrays)."""

    e_cr: float
    e_cd: float
    e_er_lb: float
    e_ed_ub: float

    @property
    def total(self):
        return self.e_cr + self.e_cd + self.e_er_lb + self.e_ed_ub


def _mean_below(d, cap, weight):
    """weight * E[X | X <= cap], 0 wherever the weight or the mass vanishes."""
    weight = np.asarray(weight, dtype=float)
    mass = np.asarray(stats.cdf(d, cap if np.ndim(cap) else max(cap, 1e-300)), dtype=float)
    live = (weight > 0.0) & (mass > 0.0)
    if not np.any(live):
        return np.zeros_like(weight)
    body = stats.mean_in_interval(d, 1e-300, cap)
    return np.where(live, weight * body, 0.0)


def expected_rf_energy(ctx: EnergyContext) -> EnergyEstimate:
    """Model value of E[E^(RF)] with the relaying terms bounded."""
    p_cr, p_cd = coverage_probs(ctx)
    if ctx.e_b is None:
        e_cd = _mean_below(ctx.e_d, ctx.cap_d, p_cd)
        zero = np.zeros_like(np.asarray(e_cd, dtype=float))
        return EnergyEstimate(_scalar(zero), _scalar(e_cd), _scalar(zero), _scalar(zero))

    # Relaying events consume the decode/re-encode offset too, so the
    # coverage-forced term carries the same constant as the sum object.
    e_cr = _mean_below(ctx.e_b, ctx.cap_b, p_cr) + _mean_below(ctx.e_r, ctx.cap_r, p_cr) + np.asarray(p_cr) * ctx.sum_shift
    e_cd = _mean_below(ctx.e_d, ctx.cap_d, p_cd)

    p1_er, p2 = p_low_components(ctx, "er")
    s = BrSum(ctx)
    e_er_lb = s.mean() * p1_er + s.cond_mean_below(ctx.cap_r_bound) * np.asarray(p2)

    p1_ed, _ = p_low_components(ctx, "ed")
    f_br = stats.cdf(ctx.e_b, ctx.cap_b) * stats.cdf(ctx.e_r, ctx.cap_r)
    head = _mean_below(ctx.e_d, ctx.cap_d, stats.cdf(ctx.e_d, ctx.cap_d)) * f_br
    e_ed_ub = head - ctx.e_d.mean() * np.asarray(p1_ed) - stats.mean_in_interval(ctx.e_d, ctx.cap_r_bound, ctx.cap_d) * np.asarray(p2)
    e_ed_ub = np.clip(e_ed_ub, 0.0, None)
    return EnergyEstimate(_scalar(e_cr), _scalar(e_cd), _scalar(e_er_lb), _scalar(e_ed_ub))


def _scalar(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def eea_membership(ctx: EnergyContext, e_t: float):
    """Model membership of the energy efficiency area: total <= e_t.

    Points failing the outage condition are reported as non-members (they
    are outside the covered cell).
    """
    if e_t <= 0:
        raise ValueError("e_t must be > 0")
    est = expected_rf_energy(ctx)
    member = (est.total <= e_t) & np.asarray(outage_check(ctx))
    return member if np.ndim(member) else bool(member)
