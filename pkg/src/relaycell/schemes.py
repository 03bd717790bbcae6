"""Overall energy accounting per coding scheme and PDF power allocation.

Schemes: direct transmission (DTx, the message spans both phases), two-hop
decode-forward (everything re-encoded at the relay at rate 2R), and the two
energy-optimized partial decode-forward variants: EO (minimizes the total
transmit energy) and IR (minimizes the relay transmit energy only, breaking
ties by total energy).

The PDF allocator is a numerical plug point: it minimizes over the rate
split and per-phase powers subject to half-duplex partial-DF achievable-rate
constraints.  A closed-form allocation can replace it later without touching
the callers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


class SchemeKind(enum.Enum):
    DTX = "DTx"
    TWO_HOP = "TwoHop"
    EO_PDF = "EoPdf"
    IR_PDF = "IrPdf"


@dataclass(frozen=True)
class EnergyProfile:
    """Station caps, amplifier multipliers and circuitry/idle offsets (J)."""

    e_b_max: float = 1.0
    e_r_max: float = 0.5
    eta_b: float = 2.66
    eta_r: float = 3.1
    e_b_tx_plus_u_rx: float = 0.090
    e_b_idle: float = 0.025
    e_r_idle: float = 0.010
    e_dsp_2hop: float = 0.0
    e_dsp_plus_pdf: float = 0.0

    def __post_init__(self):
        for name in ("e_b_max", "e_r_max", "e_b_tx_plus_u_rx", "e_b_idle", "e_r_idle", "e_dsp_2hop", "e_dsp_plus_pdf"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.eta_b < 1.0 or self.eta_r < 1.0:
            raise ValueError("amplifier multipliers must be >= 1")

    def dsp(self, kind: SchemeKind) -> float:
        """Relay decode/re-encode offset of the scheme (0 for DTx)."""
        if kind is SchemeKind.DTX:
            return 0.0
        if kind is SchemeKind.TWO_HOP:
            return self.e_dsp_2hop
        return self.e_dsp_2hop + self.e_dsp_plus_pdf


def total_energy(kind: SchemeKind, rf, profile: EnergyProfile, n_r: int):
    """Transmit + circuitry + idle energy of one downlink block.

    ``rf`` is the BS RF energy for DTx, or the pair (bs_rf, relay_rf) for the
    relayed schemes.  Affine in each RF input with slope eta of the station.
    """
    idle = profile.e_b_idle + n_r * profile.e_r_idle
    if kind is SchemeKind.DTX:
        e_rf = np.asarray(rf, dtype=float)
        return profile.eta_b * e_rf + profile.e_b_tx_plus_u_rx + idle
    bs_rf, relay_rf = rf
    return (
        profile.eta_b * np.asarray(bs_rf, dtype=float)
        + profile.eta_r * np.asarray(relay_rf, dtype=float)
        + profile.e_b_tx_plus_u_rx
        + profile.dsp(kind)
        + idle
    )


@dataclass(frozen=True)
class PdfAllocation:
    """Result of the PDF power/rate optimization (energies in joules)."""

    feasible: bool
    e_b_phase1: float = 0.0
    e_b_phase2: float = 0.0
    e_r_phase2: float = 0.0
    rate_split: float = 0.0  # part of the rate carried by the relayed message

    @property
    def bs_energy(self) -> float:
        return self.e_b_phase1 + self.e_b_phase2

    @property
    def relay_energy(self) -> float:
        return self.e_r_phase2

    @property
    def total_energy(self) -> float:
        return self.bs_energy + self.relay_energy


def dtx_energy(g_d, rate: float, noise: float):
    """Transmit energy of two-phase direct transmission."""
    return (2.0**rate - 1.0) * noise / np.asarray(g_d, dtype=float)


def two_hop_energies(g_b, g_r, rate: float, noise: float):
    """(backhaul, access) transmit energies of plain two-hop relaying."""
    amp = (2.0 ** (2.0 * rate) - 1.0) * noise / 2.0
    return amp / np.asarray(g_b, dtype=float), amp / np.asarray(g_r, dtype=float)


def _pdf_grid(g_d, g_b, g_r, rate, noise, n_split=33, n_power=7):
    """Vectorized evaluation of the PDF feasible family on a (split, P1) grid.

    Returns (e_b, e_r, r_r) arrays over grid cells, sample-shaped in the
    leading axes when the gains are arrays.  Phase powers follow from the
    constraint structure: relay decoding fixes the minimum phase-1 power, the
    fresh-message and joint-decoding needs fix phase-2 powers in closed form.
    """
    g_d = np.asarray(g_d, dtype=float)[..., None, None]
    g_b = np.asarray(g_b, dtype=float)[..., None, None]
    g_r = np.asarray(g_r, dtype=float)[..., None, None]
    r_r = np.linspace(0.0, rate, n_split)[:, None]
    t = np.linspace(0.0, 1.0, n_power)[None, :] ** 2

    p1_min = noise * (2.0 ** (2.0 * r_r) - 1.0) / g_b
    p1_full = noise * (2.0 ** (2.0 * rate) - 1.0) / g_d  # phase-1 alone closes the joint bound
    p1 = p1_min + np.maximum(p1_full - p1_min, 0.0) * t
    c1 = np.log2(1.0 + g_d * p1 / noise)

    a = noise * (2.0 ** (2.0 * (rate - r_r)) - 1.0) / g_d
    b3 = noise * (2.0 ** np.maximum(2.0 * r_r - c1, 0.0) - 1.0) / g_r
    e4 = noise * (2.0 ** np.maximum(2.0 * rate - c1, 0.0) - 1.0)

    # Two LP corners of {P2 >= a, PR >= b3, g_d*P2 + g_r*PR >= e4}.
    pr_a = np.maximum(b3, (e4 - g_d * a) / g_r)
    p2_b = np.maximum(a, (e4 - g_r * b3) / g_d)
    cost_a = a + pr_a
    cost_b = p2_b + b3
    take_a = cost_a <= cost_b
    p2 = np.where(take_a, a, p2_b)
    pr = np.where(take_a, pr_a, b3)
    return 0.5 * (p1 + p2), 0.5 * pr, np.broadcast_to(r_r, p1.shape), (p1, p2, pr)


def _select(objective, e_b, e_r, feasible):
    """Index of the best feasible grid cell for the objective."""
    total = e_b + e_r
    if objective == "total":
        score = np.where(feasible, total, np.inf)
    else:  # relay-only, ties broken by total
        big = np.nanmax(total[np.isfinite(total)]) + 1.0 if np.any(np.isfinite(total)) else 1.0
        score = np.where(feasible, e_r * (1e9 * big) + total, np.inf)
    flat = int(np.argmin(score))
    return flat, float(score.reshape(-1)[flat])


def pdf_allocation(objective, gains, cfg, profile: EnergyProfile, polish: bool = True) -> PdfAllocation:
    """Optimize the PDF rate split and powers for one channel realization.

    ``objective`` is "total" (EO) or "relay" (IR); ``gains`` the shadow-free
    linear channel gains (g_d, g_b, g_r); caps come from the profile.  An
    infeasible rate is reported through the ``feasible`` flag, not raised.
    """
    if objective not in ("total", "relay"):
        raise ValueError("objective must be 'total' or 'relay'")
    g_d, g_b, g_r = (float(g) for g in gains)
    rate, noise = cfg.rate, cfg.noise_w
    cap_b, cap_r = profile.e_b_max, profile.e_r_max

    e_b, e_r, r_r, powers = _pdf_grid(g_d, g_b, g_r, rate, noise, n_split=49, n_power=11)
    feasible = (e_b <= cap_b) & (e_r <= cap_r)

    e_dtx = float(dtx_energy(g_d, rate, noise))
    dtx_ok = e_dtx <= cap_b
    best = None
    if np.any(feasible):
        flat, _score = _select(objective, e_b, e_r, feasible)
        p1, p2, pr = powers
        best = PdfAllocation(
            True,
            e_b_phase1=float(0.5 * p1.reshape(-1)[flat]),
            e_b_phase2=float(0.5 * p2.reshape(-1)[flat]),
            e_r_phase2=float(0.5 * pr.reshape(-1)[flat]),
            rate_split=float(r_r.reshape(-1)[flat]),
        )
        if polish and objective == "total":
            best = _polish_total(best, g_d, g_b, g_r, rate, noise, cap_b, cap_r)
    if dtx_ok:
        # The message can always be sent over both phases without the relay.
        dtx = PdfAllocation(True, e_b_phase1=e_dtx / 2.0, e_b_phase2=e_dtx / 2.0)
        if best is None:
            best = dtx
        elif objective == "total" and dtx.total_energy < best.total_energy:
            best = dtx
        elif objective == "relay" and (dtx.relay_energy, dtx.total_energy) < (best.relay_energy, best.total_energy):
            best = dtx
    if best is None:
        return PdfAllocation(False)
    return best


def _polish_total(seed: PdfAllocation, g_d, g_b, g_r, rate, noise, cap_b, cap_r) -> PdfAllocation:
    """Local refinement of the EO grid optimum over (rate split, phase-1 power)."""

    def value(x):
        r_r = float(np.clip(x[0], 0.0, rate))
        p1_min = noise * (2.0 ** (2.0 * r_r) - 1.0) / g_b
        p1 = p1_min + max(x[1], 0.0)
        c1 = np.log2(1.0 + g_d * p1 / noise)
        a = noise * (2.0 ** (2.0 * (rate - r_r)) - 1.0) / g_d
        b3 = noise * (2.0 ** max(2.0 * r_r - c1, 0.0) - 1.0) / g_r
        e4 = noise * (2.0 ** max(2.0 * rate - c1, 0.0) - 1.0)
        pr_a = max(b3, (e4 - g_d * a) / g_r)
        p2_b = max(a, (e4 - g_r * b3) / g_d)
        if a + pr_a <= p2_b + b3:
            p2, pr = a, pr_a
        else:
            p2, pr = p2_b, b3
        e_b, e_r = 0.5 * (p1 + p2), 0.5 * pr
        penalty = 1e6 * (max(e_b - cap_b, 0.0) + max(e_r - cap_r, 0.0))
        return e_b + e_r + penalty, (0.5 * p1, 0.5 * p2, 0.5 * pr, r_r)

    x0 = np.array([seed.rate_split, max(0.0, 2.0 * seed.e_b_phase1 - noise * (2.0 ** (2.0 * seed.rate_split) - 1.0) / g_b)])
    res = minimize(lambda x: value(x)[0], x0, method="Nelder-Mead", options={"maxiter": 200, "xatol": 1e-9, "fatol": 1e-12})
    cand_val, parts = value(res.x)
    if cand_val < seed.total_energy:
        return PdfAllocation(True, e_b_phase1=parts[0], e_b_phase2=parts[1], e_r_phase2=parts[2], rate_split=parts[3])
    return seed


def pdf_energy_samples(objective, g_d, g_b, g_r, rate, noise, cap_b, cap_r):
    """Per-sample optimal (bs_energy, relay_energy, feasible) arrays.

    Vectorized over sampled channel gains (shadowing realizations); uses the
    same grid family as ``pdf_allocation`` without the local polish, plus the
    two-phase direct corner.  All inputs broadcast to one sample axis.
    """
    e_b, e_r, _, _ = _pdf_grid(g_d, g_b, g_r, rate, noise, n_split=25, n_power=7)
    feasible = (e_b <= cap_b) & (e_r <= cap_r)
    total = e_b + e_r
    if objective == "total":
        score = np.where(feasible, total, np.inf)
    else:
        score = np.where(feasible, e_r * 1e12 + total, np.inf)
    flat = score.reshape(score.shape[0], -1)
    idx = np.argmin(flat, axis=1)
    rows = np.arange(flat.shape[0])
    best_b = e_b.reshape(flat.shape)[rows, idx]
    best_r = e_r.reshape(flat.shape)[rows, idx]
    any_grid = np.isfinite(flat[rows, idx])

    e_dtx = dtx_energy(g_d, rate, noise)
    dtx_ok = e_dtx <= cap_b
    if objective == "total":
        use_dtx = dtx_ok & (~any_grid | (e_dtx < best_b + best_r))
    else:
        use_dtx = dtx_ok & (~any_grid | (best_r > 0.0) | (e_dtx < best_b + best_r))
    out_b = np.where(use_dtx, e_dtx, best_b)
    out_r = np.where(use_dtx, 0.0, best_r)
    feasible_any = any_grid | dtx_ok
    return out_b, out_r, feasible_any
