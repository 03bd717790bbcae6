"""Closed-form relaying probability and relay-efficiency-area membership.

A transmission is relayed either because the direct link cannot carry it
under the BS energy cap (coverage-forced relaying, probability ``p_cr``) or
because relaying is the cheaper of two feasible options (energy-efficient
relaying, probability ``P_ER``).  ``P_ER`` couples the three link energies
through both the caps and the comparison E_b + E_r <= E_d, so it has no
closed form; the model replaces it by the lower bound

    p_low = p_low1 + p_low2

    p_low1 = max(0, P(S <= E_d)
                    - [P(cap_r <= E_d <= cap_d + cap_r) * P(S <= cap_d + cap_r)
                       + P(cap_d + cap_r <= E_d)])
    p_low2 = P(cap_r <= E_d <= cap_d) * P(S <= cap_r)

with S = E_b + E_r (+ a constant circuitry offset after the substitution
below).  Cap comparisons of S use the moment-matched log-normal of the plain
sum; the comparison against E_d rewrites S <= E_d as a sum of log-normals
that share the direct link's shadowing coefficient and moment-matches that
correlated sum.

Accounting for amplifier losses and the relay's decode/re-encode offset is a
variable substitution: E_k -> eta_k * E_k, S -> eta_B E_b + eta_R E_r + dsp,
cap_d/cap_b -> eta_B * cap, cap_r -> eta_R * cap_r + dsp.

All evaluations broadcast over per-point arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from relaycell import stats
from relaycell.channel import ScenarioConfig, shadow_free_energies
from relaycell.schemes import EnergyProfile, SchemeKind
from relaycell.stats import LogNormal


@dataclass(frozen=True)
class EnergyContext:
    """Per-point link-energy distributions plus the active caps.

    ``cap_d`` bounds the direct-link energy (may be +inf when direct
    transmission is evaluated without a power constraint), ``cap_b`` the
    backhaul energy, ``cap_r`` the access energy; ``sum_shift`` is the
    constant added to E_b + E_r in every comparison (the relay's
    decode/re-encode offset after substitution).
    """

    e_d: LogNormal
    e_b: LogNormal
    e_r: LogNormal
    cap_d: float
    cap_b: float
    cap_r: float
    sum_shift: float = 0.0
    p_out: float = 0.02
    # Relay cap as it appears inside the lower-bound decomposition (equals
    # cap_r before substitution; gains the dsp offset after it, since there
    # it thresholds quantities that embed the same constant).
    cap_r_bound: float = None

    def __post_init__(self):
        if self.cap_r_bound is None:
            object.__setattr__(self, "cap_r_bound", self.cap_r)

    def direct_only(self) -> bool:
        return self.e_b is None


@dataclass(frozen=True)
class DecisionProbabilities:
    """Coverage/energy decision probabilities at one location (or array)."""

    p_cr: float
    p_cd: float
    p_low1: float
    p_low2: float
    p_ed_ub: float
    outage_ok: bool

    @property
    def p_low(self):
        return self.p_low1 + self.p_low2

    @property
    def relaying(self):
        """Model value of the relaying probability (p_low + p_cr)."""
        return self.p_low + self.p_cr


def build_context(users, relay, cfg: ScenarioConfig, profile: EnergyProfile, layout, boresight=None) -> EnergyContext:
    """Raw (transmit-energy only) context for users served by one relay."""
    users = np.atleast_2d(np.asarray(users, dtype=float))
    e_d0, e_b0, e_r0 = shadow_free_energies(users, relay, cfg, layout.bs_pos, boresight)
    s_d = cfg.link("direct").sigma_nat
    squeeze = users.shape[0] == 1

    def wrap(values, sigma):
        logs = np.log(values)
        if squeeze:
            return LogNormal(float(logs[0]), sigma)
        return LogNormal(logs, np.full_like(logs, sigma))

    e_d = wrap(e_d0, s_d)
    if relay is None:
        e_b = e_r = None
    else:
        e_b = wrap(e_b0, cfg.link("backhaul").sigma_nat)
        e_r = wrap(e_r0, cfg.link("access").sigma_nat)
    return EnergyContext(
        e_d=e_d,
        e_b=e_b,
        e_r=e_r,
        cap_d=profile.e_b_max,
        cap_b=profile.e_b_max,
        cap_r=profile.e_r_max,
        sum_shift=0.0,
        p_out=cfg.p_out,
    )


def with_circuitry(ctx: EnergyContext, profile: EnergyProfile, scheme: SchemeKind) -> EnergyContext:
    """Substitute amplifier-weighted energies and dsp-shifted caps.

    Apply exactly once, to a raw context.  With unit amplifier multipliers
    and zero dsp this is the identity.
    """
    dsp = profile.dsp(scheme)
    ln_b = np.log(profile.eta_b)
    ln_r = np.log(profile.eta_r)
    return replace(
        ctx,
        e_d=ctx.e_d.shift(ln_b),
        e_b=None if ctx.e_b is None else ctx.e_b.shift(ln_b),
        e_r=None if ctx.e_r is None else ctx.e_r.shift(ln_r),
        cap_d=profile.eta_b * ctx.cap_d,
        cap_b=profile.eta_b * ctx.cap_b,
        cap_r=profile.eta_r * ctx.cap_r,
        cap_r_bound=profile.eta_r * ctx.cap_r + dsp,
        sum_shift=ctx.sum_shift + dsp,
    )


def uncap_direct(ctx: EnergyContext) -> EnergyContext:
    """Remove the direct-link power constraint (coverage-extension accounting)."""
    return replace(ctx, cap_d=np.inf)


_GH_ORDER = 32
_GH_CACHE = None


def _gauss_hermite():
    """Probabilist's Gauss-Hermite nodes/weights for E[f(Z)], Z ~ N(0,1)."""
    global _GH_CACHE
    if _GH_CACHE is None:
        x, w = np.polynomial.hermite.hermgauss(_GH_ORDER)
        _GH_CACHE = (np.sqrt(2.0) * x, w / np.sqrt(np.pi))
    return _GH_CACHE


class BrSum:
    """The combined relayed energy S = E_b + E_r + shift of a context.

    ``dist`` is the moment-matched log-normal of E_b + E_r used for cap
    comparisons, conditional means, and as the source of the variance used
    by the scaled-distribution constructions.  ``r_shift`` pre-scales the
    access-link term (exp(r_shift) * E_r), as the interference model needs.
    """

    def __init__(self, ctx: EnergyContext, r_shift=0.0):
        self.ctx = ctx
        self.r_shift = r_shift
        e_r = ctx.e_r.shift(r_shift) if np.any(np.asarray(r_shift) != 0.0) else ctx.e_r
        self.e_r = e_r
        self.dist = stats.fw_sum(ctx.e_b, e_r, 0.0)
        self.shift = ctx.sum_shift

    def mean(self):
        return self.dist.mean() + self.shift

    def log_var(self):
        """Variance of the underlying normal of the stochastic part."""
        return np.square(self.dist.sigma)

    def cap_prob(self, threshold, delta=0.0):
        """P(exp(delta) * S <= threshold); thresholds may be +inf."""
        t = np.asarray(threshold, dtype=float) * np.exp(-np.asarray(delta, dtype=float)) - self.shift
        t = np.where(np.isposinf(threshold), np.inf, t)
        out = np.where(t > 0.0, stats.cdf(self.dist, np.where(t > 0.0, t, 1.0)), 0.0)
        return out if out.ndim else float(out)

    def cond_mean_below(self, threshold):
        """E[S | S <= threshold], 0 where the event carries no mass."""
        t = np.asarray(threshold, dtype=float) - self.shift
        mass = self.cap_prob(threshold)
        safe_t = np.where(t > 0.0, t, 1.0)
        body = stats.mean_in_interval(self.dist, 1e-300, safe_t) + self.shift
        out = np.where((t > 0.0) & (np.asarray(mass) > 0.0), body, 0.0)
        return out if out.ndim else float(out)

    def vs_direct_prob(self, e_d: LogNormal, delta=0.0, method: str = "quadrature"):
        """P(exp(delta) * S <= E_d).

        The default tensor-quadratures the direct and backhaul shadowing and
        resolves the access-link variable exactly through its CDF (the
        integrand is smooth since the log-normal CDF vanishes with all
        derivatives at 0+).  ``method="fw"`` instead rewrites the event as a
        correlated sum sharing s_d and moment-matches it whole, which is
        cheaper but visibly biased in the distribution body.
        """
        if method == "fw":
            return self._vs_direct_fw(e_d, delta)
        mu_d = np.asarray(e_d.mu, dtype=float)
        scalar = mu_d.ndim == 0
        mu_d = np.atleast_1d(mu_d)
        s_d = np.broadcast_to(np.asarray(e_d.sigma, dtype=float), mu_d.shape)
        delta = np.broadcast_to(np.asarray(delta, dtype=float), mu_d.shape)
        mu_b = np.broadcast_to(np.asarray(self.ctx.e_b.mu, dtype=float), mu_d.shape)
        s_b = np.broadcast_to(np.asarray(self.ctx.e_b.sigma, dtype=float), mu_d.shape)
        mu_r = np.broadcast_to(np.asarray(self.e_r.mu, dtype=float), mu_d.shape)
        s_r = np.broadcast_to(np.asarray(self.e_r.sigma, dtype=float), mu_d.shape)
        nodes, weights = _gauss_hermite()

        out = np.empty(mu_d.shape)
        chunk = max(1, int(4_000_000 // (len(nodes) ** 2)))
        for lo in range(0, mu_d.size, chunk):
            sl = slice(lo, lo + chunk)
            direct = np.exp(mu_d[sl, None] - delta[sl, None] - s_d[sl, None] * nodes)
            backhaul = np.exp(mu_b[sl, None] - s_b[sl, None] * nodes)
            t = direct[:, :, None] - self.shift - backhaul[:, None, :]
            access = LogNormal(mu_r[sl, None, None], s_r[sl, None, None])
            inner = np.where(t > 0.0, stats.cdf(access, np.where(t > 0.0, t, 1.0)), 0.0)
            out[sl] = np.einsum("i,pij,j->p", weights, inner, weights)
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def _vs_direct_fw(self, e_d: LogNormal, delta=0.0):
        ctx = self.ctx
        s_d = np.asarray(e_d.sigma, dtype=float)
        s_b = np.asarray(ctx.e_b.sigma, dtype=float)
        s_r = np.asarray(self.e_r.sigma, dtype=float)
        delta = np.asarray(delta, dtype=float)
        var_d = np.square(s_d)
        mus = [ctx.e_b.mu + delta, self.e_r.mu + delta]
        sigmas = [np.sqrt(var_d + np.square(s_b)), np.sqrt(var_d + np.square(s_r))]
        cov = [[None, var_d, var_d], [None, None, var_d]]
        if np.any(np.asarray(self.shift) > 0.0):
            mus.append(np.log(self.shift) + delta + np.zeros_like(np.asarray(ctx.e_b.mu, dtype=float)))
            sigmas.append(s_d + np.zeros_like(sigmas[0]))
        matched = stats.fw_sum_terms(mus, sigmas, cov)
        return stats.cdf(matched, np.exp(e_d.mu))


def coverage_probs(ctx: EnergyContext):
    """(p_cr, p_cd): coverage-forced relaying / direct probabilities."""
    f_d = stats.cdf(ctx.e_d, ctx.cap_d)
    if ctx.e_b is None:
        # No relay: relaying never feasible, every feasible block is direct-only.
        zero = np.zeros_like(np.asarray(f_d, dtype=float))
        return (zero if zero.ndim else 0.0), f_d
    f_b = stats.cdf(ctx.e_b, ctx.cap_b)
    f_r = stats.cdf(ctx.e_r, ctx.cap_r)
    p_cr = (1.0 - f_d) * f_b * f_r
    p_cd = f_d * (1.0 - f_b * f_r)
    return p_cr, p_cd


def p_low_components(ctx: EnergyContext, variant: str = "plain"):
    """(p_low1, p_low2) of the relaying lower bound, or a scaled variant.

    Variants substitute the scaled distribution exp(var)*X used by the
    energy and interference bounds: "er" scales the combined sum, "ed" the
    direct-link energy, "ici" the access-link term inside the sum.  The
    second component stays unscaled except for "ici".
    """
    if variant not in ("plain", "er", "ed", "ici"):
        raise ValueError(f"unknown variant {variant!r}")
    r_shift = 0.0
    if variant == "ici":
        r_shift = np.square(ctx.e_r.sigma)
    s = BrSum(ctx, r_shift=r_shift)
    delta = s.log_var() if variant == "er" else 0.0
    e_d = ctx.e_d.shift(np.square(ctx.e_d.sigma)) if variant == "ed" else ctx.e_d

    cap_r = ctx.cap_r_bound
    upper = ctx.cap_d + cap_r
    ratio = s.vs_direct_prob(e_d, delta=delta)
    bracket = stats.interval_prob(e_d, cap_r, upper) * s.cap_prob(upper, delta=delta)
    bracket = bracket + (1.0 - stats.cdf(e_d, upper))
    p1 = np.clip(ratio - bracket, 0.0, 1.0)

    # The second component scales only in the interference variant; the
    # energy bounds pair it with explicit conditional-mean factors instead.
    p2_sum = s if variant in ("plain", "ici") else BrSum(ctx)
    p2 = stats.interval_prob(ctx.e_d, cap_r, ctx.cap_d) * p2_sum.cap_prob(cap_r)
    p2 = np.clip(p2, 0.0, 1.0)
    if np.ndim(p1) == 0:
        return float(p1), float(p2)
    return p1, p2


def p_low(ctx: EnergyContext):
    """Lower bound for the energy-efficient relaying probability."""
    return p_low_components(ctx, "plain")


def feasibility_prob(ctx: EnergyContext):
    """P(all three link energies under their caps)."""
    f = stats.cdf(ctx.e_d, ctx.cap_d)
    if ctx.e_b is not None:
        f = f * stats.cdf(ctx.e_b, ctx.cap_b) * stats.cdf(ctx.e_r, ctx.cap_r)
    return f


def outage_check(ctx: EnergyContext):
    """True where 1 - p_out <= P(all feasible) + p_cr + p_cd."""
    p_cr, p_cd = coverage_probs(ctx)
    ok = 1.0 - ctx.p_out <= feasibility_prob(ctx) + p_cr + p_cd
    return ok if np.ndim(ok) else bool(ok)


def decision_probabilities(ctx: EnergyContext) -> DecisionProbabilities:
    """All closed-form decision probabilities of one context."""
    p_cr, p_cd = coverage_probs(ctx)
    if ctx.e_b is None:
        zeros = np.zeros_like(np.asarray(p_cd, dtype=float))
        z = zeros if zeros.ndim else 0.0
        return DecisionProbabilities(z, p_cd, z, z, z, outage_check(ctx))
    p1, p2 = p_low(ctx)
    p_ed_ub = np.clip(feasibility_prob(ctx) - (p1 + p2), 0.0, 1.0)
    if np.ndim(p_ed_ub) == 0:
        p_ed_ub = float(p_ed_ub)
    return DecisionProbabilities(p_cr, p_cd, p1, p2, p_ed_ub, outage_check(ctx))


def rea_membership(ctx: EnergyContext, p_t: float):
    """Model membership of the relay efficiency area: p_t <= p_low + p_cr."""
    if not 0.0 < p_t < 1.0:
        raise ValueError("p_t must lie in (0, 1)")
    probs = decision_probabilities(ctx)
    member = p_t <= probs.relaying
    return member if np.ndim(member) else bool(member)
