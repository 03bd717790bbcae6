"""Relay-generated interference at neighbor-cell users and the gain/loss ratio.

The mean energy radiated by a relay serving one location is approximated by

    e_relay = p_cr * E[E_r | E_r <= cap_r] + mean(E_r) * (p_low1_i + p_low2_i)

with the interference variants of the relaying bound (access-link term
scaled by exp(var)).  The mean interference it imposes on a victim at
distance d through the interference link is

    i_hat = e_relay_raw * exp(sigma_I^2 / 2) / (K_I * d^alpha_I)

and a victim cell maintains its rate by inflating its DTx RF term by
(1 + 2*I/N).  The deployment ratio compares the mean relative energy saving
of the served cell against the mean relative energy increase over the six
neighbor cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from relaycell import stats
from relaycell.channel import ScenarioConfig, path_loss
from relaycell.rea import EnergyContext, coverage_probs, p_low_components


@dataclass(frozen=True)
class GammaReport:
    """Energy-to-interference deployment summary.

    ``upsilon_gain``: mean relative energy saving over cell-1 users;
    ``upsilon_loss``: mean relative energy increase over cells 2-7;
    ``gamma``: their ratio (+inf sentinel when the loss is exactly zero).
    """

    upsilon_gain: float
    upsilon_loss: float
    gamma: float
    n_r: int
    d_b: float

    @property
    def efficient(self) -> bool:
        return self.gamma > 1.0


def expected_relay_rf(ctx: EnergyContext):
    """Lower-bound estimate of the mean RF energy radiated by the relay."""
    if ctx.e_b is None:
        z = np.zeros_like(np.asarray(ctx.e_d.mu, dtype=float))
        return z if z.ndim else 0.0
    p_cr, _ = coverage_probs(ctx)
    mass = np.asarray(stats.cdf(ctx.e_r, ctx.cap_r), dtype=float)
    cond = np.where(mass > 0.0, stats.mean_in_interval(ctx.e_r, 1e-300, ctx.cap_r), 0.0)
    p1_i, p2_i = p_low_components(ctx, "ici")
    out = np.asarray(p_cr) * cond + ctx.e_r.mean() * (np.asarray(p1_i) + np.asarray(p2_i))
    return out if out.ndim else float(out)


def interference_at(victims, relay_pos, relay_mean_rf, cfg: ScenarioConfig):
    """Mean interference energy at victim positions from one relay.

    ``relay_mean_rf`` is the mean RF energy radiated by the relay (raw, not
    amplifier-weighted); the shadowing of the interference link contributes
    the factor exp(sigma_I^2 / 2).
    """
    victims = np.atleast_2d(np.asarray(victims, dtype=float))
    d = np.linalg.norm(victims - np.asarray(relay_pos, dtype=float), axis=1)
    d = np.maximum(d, 1.0)
    link = cfg.link("interference")
    gamma_i = path_loss(link, d, cfg.f_c_ghz)
    out = np.asarray(relay_mean_rf, dtype=float) * np.exp(0.5 * link.sigma_nat**2) / gamma_i
    return out if out.ndim else float(out)


def victim_relative_loss(victims, victim_rf, interference, cfg: ScenarioConfig, profile):
    """Per-victim relative energy increase (E_i^(Nr) - E_i^(0)) / E_i^(0).

    ``victim_rf`` is the victim's mean DTx RF energy (no power cap), and the
    rate is maintained against interference by the linear SNR-degradation
    factor (1 + 2*I/N) on the RF term.
    """
    victim_rf = np.asarray(victim_rf, dtype=float)
    interference = np.asarray(interference, dtype=float)
    base_offsets = profile.e_b_tx_plus_u_rx + profile.e_b_idle
    rf_term = profile.eta_b * victim_rf
    return rf_term * (2.0 * interference / cfg.noise_w) / (rf_term + base_offsets)


def gamma_report(gain_values, loss_values, n_r: int, d_b: float) -> GammaReport:
    """Assemble the report; a zero mean loss yields the +inf sentinel."""
    upsilon_gain = float(np.mean(gain_values))
    upsilon_loss = float(np.mean(loss_values)) if len(np.atleast_1d(loss_values)) else 0.0
    if upsilon_loss > 0.0:
        gamma = upsilon_gain / upsilon_loss
    else:
        gamma = math.inf
    return GammaReport(upsilon_gain, upsilon_loss, gamma, n_r, d_b)
