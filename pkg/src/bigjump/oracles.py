"""Deterministic reference values for the Monte Carlo verifiers.

These never touch the samplers: densities come straight from ``scipy.stats``
and tails of weighted sums are computed by adaptive quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats


def pareto_dist(alpha, x_min=1.0):
    return stats.pareto(b=alpha, scale=x_min)


def weighted_sum_tail(x, dist1, dist2, w1=0.5, w2=0.5, epsrel=1e-10):
    """``P[w1 X1 + w2 X2 > x]`` for independent nonnegative ``X1 ~ dist1``, ``X2 ~ dist2``.

    Conditions on ``X1``: beyond ``u = x / w1`` the event is certain, below it
    the conditional probability is ``P[X2 > (x - w1 u) / w2]``.

    Returns ``(value, abs_error_estimate)``.
    """
    if w1 <= 0 or w2 <= 0:
        raise ValueError("weights must be positive")
    lo1 = max(dist1.support()[0], 0.0)
    u_star = x / w1
    if u_star <= lo1:
        return 1.0, 0.0
    head = dist1.sf(u_star)
    lo2 = max(dist2.support()[0], 0.0)
    # kink where the inner argument crosses the lower end of X2's support
    kink = (x - w2 * lo2) / w1
    points = [p for p in (kink,) if lo1 < p < u_star]

    def integrand(u):
        return dist1.pdf(u) * dist2.sf((x - w1 * u) / w2)

    body, err = integrate.quad(
        integrand, lo1, u_star, points=points or None, epsabs=0.0, epsrel=epsrel, limit=500
    )
    return head + body, err


def pareto_halfspace_tail(x, alpha=2.0, x_min=1.0, weights=(0.5, 0.5)):
    """Oracle for ``P[l1 X1 + l2 X2 > x]`` with iid Pareto components."""
    d = pareto_dist(alpha, x_min)
    return weighted_sum_tail(x, d, d, *weights)


def exponential_sum_tail(x, n=2, rate=1.0):
    """``P[E_1 + ... + E_n > x]`` for iid exponentials (Erlang tail)."""
    x = np.asarray(x, dtype=float)
    return stats.gamma(a=n, scale=1.0 / rate).sf(x)


def pareto_scaled_tail_ratio(theta_low, theta_high, alpha):
    """Tail-limit bracket ``[a^alpha, b^alpha]`` of ``P[theta Y > x] / P[Y > x]``."""
    return theta_low**alpha, theta_high**alpha


def uniform_order_stat_mean(k, n, horizon=1.0):
    """``E[T U_(k,n)] = T k / (n + 1)``."""
    return horizon * k / (n + 1.0)


def pareto_sf(x, alpha, x_min=1.0):
    return math.pow(max(x, x_min) / x_min, -alpha)
