"""Closed-form order-statistics results used as independent references.

Everything here is exact arithmetic on exponential (Rayleigh power) fading:
harmonic-number means of selection maxima, minima of competing links, and the
outage scaling of selection diversity. The simulation side of the library is
validated against these expressions, never the other way around.
"""

from __future__ import annotations

import math


def harmonic(n: int) -> float:
    """n-th harmonic number, sum_{i=1..n} 1/i."""
    if n < 1:
        raise ValueError("harmonic is defined for n >= 1")
    return sum(1.0 / i for i in range(1, int(n) + 1))


def expected_max_gain(sigma2: float, n: int) -> float:
    """Mean of the maximum of n i.i.d. exponential gains with mean sigma2."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    return sigma2 * harmonic(n)


def selection_penalty(n: int) -> float:
    """Gain ratio of interference-driven selection to max-gain selection.

    When the antenna choice is dictated entirely by a link independent of the
    desired one, the desired gain degrades from sigma2*H_n to sigma2, i.e. by
    the factor 1/H_n returned here.
    """
    return 1.0 / harmonic(n)


def min_exp_cdf(y: float, sigma2: float, n: int) -> float:
    """CDF of the minimum of n i.i.d. exponential gains with mean sigma2.

    F(y) = 1 - exp(-n*y/sigma2); the implied mean is sigma2/n.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if y < 0:
        raise ValueError("y must be non-negative")
    return 1.0 - math.exp(-n * y / sigma2)


def diversity_outage(p_siso: float, n: int) -> float:
    """Outage probability of n-branch selection given the single-branch value."""
    if not 0.0 <= p_siso <= 1.0:
        raise ValueError("p_siso must be a probability")
    return p_siso ** n


def siso_outage(gamma_th: float, gamma_bar: float) -> float:
    """Single-branch Rayleigh outage, P(gamma < gamma_th) = 1 - exp(-th/bar).

    Both arguments are linear SNRs.
    """
    if gamma_bar <= 0:
        raise ValueError("gamma_bar must be positive")
    return 1.0 - math.exp(-gamma_th / gamma_bar)
