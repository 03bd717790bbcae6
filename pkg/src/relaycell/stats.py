"""Log-normal primitives: CDF, truncated moments, moment-matched sums.

Every model module reduces its probabilities and conditional expectations to
the standard-normal CDF of standardized log arguments, to truncated
log-normal means, and to log-normal approximations of sums of (possibly
correlated) log-normals obtained by matching the first two moments.

All functions broadcast over numpy arrays; a LogNormal may hold scalar or
array parameters (one distribution per grid point).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

# ln Phi below this is treated as "no probability mass" (double underflow).
_LOG_MASS_FLOOR = np.log(1e-300)

# Natural-log scale per dB of shadowing spread: sigma_nat = sigma_dB * ln(10)/10.
DB_TO_NAT = np.log(10.0) / 10.0


class NegligibleMassError(ValueError):
    """Raised when a conditioning event carries no representable probability."""


@dataclass(frozen=True)
class LogNormal:
    """X = exp(mu + sigma*Z), Z standard normal.

    ``mu`` is the natural-log location (for energies, ln of the shadow-free
    value in joules) and ``sigma >= 0`` the natural-log scale.  ``sigma = 0``
    denotes the point mass at exp(mu).
    """

    mu: float
    sigma: float

    def __post_init__(self):
        if np.any(np.asarray(self.sigma) < 0):
            raise ValueError("sigma must be >= 0")
        if not np.all(np.isfinite(self.mu)) or not np.all(np.isfinite(self.sigma)):
            raise ValueError("mu and sigma must be finite")

    def mean(self):
        return np.exp(self.mu + 0.5 * np.square(self.sigma))

    def var(self):
        s2 = np.square(self.sigma)
        return (np.exp(s2) - 1.0) * np.exp(2.0 * self.mu + s2)

    def shift(self, delta) -> "LogNormal":
        """Multiply by the constant exp(delta): shifts mu, keeps sigma."""
        return LogNormal(self.mu + delta, self.sigma)


def from_db_sigma(mu: float, sigma_db: float) -> LogNormal:
    """LogNormal with natural-log location mu and dB-domain spread sigma_db."""
    return LogNormal(mu, sigma_db * DB_TO_NAT)


def cdf(d: LogNormal, x):
    """P(X <= x) for x > 0; also accepts x = +inf and broadcasts over arrays.

    With sigma = 0 this is the step function of the point mass at exp(mu)
    (P = 1 at x = exp(mu) itself).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("cdf requires x > 0")
    sigma = np.asarray(d.sigma, dtype=float)
    mu = np.asarray(d.mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(x)
        z = (logx - mu) / np.where(sigma > 0.0, sigma, 1.0)
        degenerate = np.where(logx >= mu, 1.0, 0.0)
        out = np.where(sigma > 0.0, ndtr(z), degenerate)
        out = np.where(np.isposinf(x), 1.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def _log_cdf(d: LogNormal, x):
    """ln P(X <= x), stable deep in the lower tail. sigma > 0 required."""
    return log_ndtr((np.log(x) - d.mu) / d.sigma)


def interval_prob(d: LogNormal, lo, hi):
    """P(lo <= X <= hi), clipped to [0, 1]; lo >= hi yields 0."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    p = cdf(d, np.maximum(hi, 1e-300)) - cdf(d, np.maximum(lo, 1e-300))
    p = np.where(hi <= lo, 0.0, np.clip(p, 0.0, 1.0))
    if p.ndim == 0:
        return float(p)
    return p


def truncated_mean(d: LogNormal, cap):
    """E[X | X <= cap] for cap > 0.

    Closed form: mean(X) * Phi(-sigma + z) / Phi(z) with z the standardized
    log cap.  Raises NegligibleMassError when P(X <= cap) underflows (the
    conditioning event has no representable mass).
    """
    cap = np.asarray(cap, dtype=float)
    if np.any(cap <= 0.0):
        raise ValueError("cap must be > 0")
    sigma = np.asarray(d.sigma, dtype=float)
    mu = np.asarray(d.mu, dtype=float)
    if np.all(sigma == 0.0):
        point = np.exp(mu)
        if np.any(cap < point):
            raise NegligibleMassError("cap below the point mass of a degenerate variable")
        out = np.broadcast_arrays(point, cap)[0]
        return float(out) if out.ndim == 0 else out.copy()
    with np.errstate(divide="ignore"):
        z = (np.log(cap) - mu) / np.where(sigma > 0.0, sigma, 1.0)
        z = np.where(np.isposinf(cap), np.inf, z)
        log_den = log_ndtr(z)
        if np.any(log_den < _LOG_MASS_FLOOR):
            raise NegligibleMassError("P(X <= cap) underflows; truncated mean undefined")
        # mean * exp(ln Phi(z - sigma) - ln Phi(z)) keeps the ratio stable in the tail.
        ratio = np.exp(log_ndtr(z - sigma) - log_den)
        out = np.where(sigma > 0.0, d.mean() * ratio, np.minimum(np.exp(mu), np.inf))
    if out.ndim == 0:
        return float(out)
    return out


def mean_in_interval(d: LogNormal, lo, hi):
    """E[X | lo <= X <= hi] * 1, with 0 returned when the interval has ~no mass.

    The 0/0 convention matches the model usage: the factor only ever
    multiplies a probability that vanishes together with the interval mass.
    """
    lo = np.asarray(np.maximum(lo, 1e-300), dtype=float)
    hi = np.asarray(np.maximum(hi, 1e-300), dtype=float)
    sigma = np.asarray(d.sigma, dtype=float)
    mu = np.asarray(d.mu, dtype=float)
    point = np.exp(mu)
    den = interval_prob(d, lo, hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        z_lo = np.where(np.isposinf(lo), np.inf, (np.log(lo) - mu) / np.where(sigma > 0, sigma, 1.0))
        z_hi = np.where(np.isposinf(hi), np.inf, (np.log(hi) - mu) / np.where(sigma > 0, sigma, 1.0))
        num = d.mean() * (ndtr(z_hi - sigma) - ndtr(z_lo - sigma))
        out = np.where(den > 1e-300, num / np.where(den > 0, den, 1.0), 0.0)
        deg = np.where((lo <= point) & (point <= hi), point, 0.0)
        out = np.where(sigma > 0.0, out, deg)
    out = np.asarray(np.clip(out, 0.0, None))
    if out.ndim == 0:
        return float(out)
    return out


def lognormal_from_moments(mean, var) -> LogNormal:
    """LogNormal whose first two moments equal (mean, var) exactly.

    This is the moment-matching step shared by every sum approximation:
    sigma^2 = ln(1 + var/mean^2), mu = ln(mean) - sigma^2/2.
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    if np.any(mean <= 0.0):
        raise ValueError("mean must be > 0")
    if np.any(var < 0.0):
        raise ValueError("var must be >= 0")
    s2 = np.log1p(var / np.square(mean))
    mu = np.log(mean) - 0.5 * s2
    if mu.ndim == 0:
        return LogNormal(float(mu), float(np.sqrt(s2)))
    return LogNormal(mu, np.sqrt(s2))


def lognormal_cross_cov(a: LogNormal, b: LogNormal, rho):
    """Cov(A, B) for jointly log-normal (A, B) whose underlying normals have
    correlation rho: mean(A)*mean(B)*(exp(rho*sigma_a*sigma_b) - 1)."""
    return a.mean() * b.mean() * np.expm1(np.asarray(rho) * a.sigma * b.sigma)


def fw_sum(a: LogNormal, b: LogNormal, rho=0.0) -> LogNormal:
    """Log-normal approximation of A + B by matching mean and variance.

    ``rho`` is the correlation of the underlying normals; the cross term uses
    the exact log-normal covariance.  The returned mean/variance equal the
    analytic moments of the sum identically (the approximation error is in
    the distribution shape only).
    """
    if np.any(np.abs(np.asarray(rho)) > 1.0):
        raise ValueError("rho must lie in [-1, 1]")
    mean = a.mean() + b.mean()
    var = a.var() + b.var() + 2.0 * lognormal_cross_cov(a, b, rho)
    return lognormal_from_moments(mean, var)


def fw_sum_terms(mus, sigmas, cov) -> LogNormal:
    """Moment-matched log-normal for a sum of n jointly log-normal terms.

    ``mus``/``sigmas`` are sequences of per-term underlying-normal parameters
    (each may be an array over grid points), ``cov[i][j]`` the underlying
    covariance between terms i and j.  Used for the shadowing-correlated
    comparisons where two or three terms share one shadowing coefficient.
    """
    n = len(mus)
    terms = [LogNormal(np.asarray(m, dtype=float), np.asarray(s, dtype=float)) for m, s in zip(mus, sigmas)]
    mean = sum(t.mean() for t in terms)
    var = sum(t.var() for t in terms)
    for i in range(n):
        for j in range(i + 1, n):
            c = np.asarray(cov[i][j], dtype=float)
            var = var + 2.0 * terms[i].mean() * terms[j].mean() * np.expm1(c)
    return lognormal_from_moments(mean, var)
