"""Classical simple-random-walk benchmark for the quenched-detector setup.

A classical walker hops left or right with probability 1/2; a perfect
detector at ``site > 0`` removes any walker standing there.  The first
passage from the origin to ``site`` has the closed form

    F(site, t) = (site / t) * C(t, (t + site) / 2) * 2**(-t)

on parity-valid times ``t >= site``, and the fraction of the ensemble that
survives detection up to the removal step is ``1 - sum_t F(site, t)``.  The
classical quenched-to-free occupation ratio *is* that survival (detection
only removes weight once the distributions have re-mixed), so it carries no
site or time dependence -- the quantity the quantum walk is measured against.

Two independent routes are kept deliberately: the closed form above and an
absorbing-site dynamic program (`first_passage`, `quenched_exact`); they must
agree to near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .errors import ValidationError


@dataclass(frozen=True)
class ClassicalDistribution:
    """Site occupation of the classical walker at one time."""

    t: int
    probs: dict[int, float]
    absorbed: float = 0.0

    def total(self) -> float:
        return float(sum(self.probs.values()))


@dataclass(frozen=True)
class FirstPassageSeries:
    """First-passage probabilities ``values[t]`` from the origin to ``site``."""

    site: int
    values: np.ndarray = field(repr=False)

    @property
    def t_max(self) -> int:
        return len(self.values) - 1

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.values)


def _check_site(site: int) -> None:
    if site < 1:
        raise ValidationError(f"classical detector site must be >= 1, got {site}")


def free_distribution(t: int) -> ClassicalDistribution:
    """Binomial occupation of the free classical walker after ``t`` steps."""
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    if t == 0:
        return ClassicalDistribution(t=0, probs={0: 1.0})
    k = np.arange(t + 1)
    p = binom.pmf(k, t, 0.5)
    xs = 2 * k - t
    return ClassicalDistribution(t=t, probs={int(x): float(w) for x, w in zip(xs, p) if w > 0.0})


def first_passage_closed_form(site: int, t) -> np.ndarray | float:
    """Reflection-principle first-passage probability at time(s) ``t``."""
    _check_site(site)
    ts = np.asarray(t)
    out = np.zeros(ts.shape, dtype=float)
    valid = (ts >= site) & ((ts + site) % 2 == 0)
    tv = ts[valid]
    if tv.size:
        out[valid] = (site / tv) * binom.pmf((tv + site) // 2, tv, 0.5)
    return out if out.shape else float(out)


def first_passage(site: int, t_max: int) -> FirstPassageSeries:
    """First-passage series by absorbing-site dynamic programming.

    Evolves the surviving distribution on ``[-t_max, site - 1]``; the step-t
    first-passage probability is the flux ``0.5 * p(site - 1, t - 1)`` into
    the absorber.  Matches the closed form to rounding; kept as a separate
    route on purpose.
    """
    _check_site(site)
    if t_max < 0:
        raise ValidationError(f"t_max must be >= 0, got {t_max}")
    n = t_max + site  # sites -t_max .. site-1
    q = np.zeros(n)
    q[t_max] = 1.0  # origin
    out = np.zeros(t_max + 1)
    for t in range(1, t_max + 1):
        out[t] = 0.5 * q[-1]
        new = np.zeros(n)
        new[1:] += 0.5 * q[:-1]
        new[:-1] += 0.5 * q[1:]
        q = new
    return FirstPassageSeries(site=site, values=out)


def survival_series(site: int, t_max: int) -> np.ndarray:
    """``S_c[t] = 1 - sum_{tau <= t} F(site, tau)`` for ``t = 0..t_max`` (closed form)."""
    _check_site(site)
    F = np.zeros(t_max + 1)
    ts = np.arange(site, t_max + 1, 2)
    if ts.size:
        F[ts] = (site / ts) * binom.pmf((ts + site) // 2, ts, 0.5)
    return 1.0 - np.cumsum(F)


def quenched_ratio(site: int, removal_step: int) -> float:
    """Classical quenched-to-free occupation ratio: the survival at the removal step.

    Below 1 as soon as the walker can have reached the detector
    (``removal_step >= site``); exactly 1 before that.
    """
    if removal_step < 0:
        raise ValidationError(f"removal_step must be >= 0, got {removal_step}")
    _check_site(site)
    return float(survival_series(site, removal_step)[removal_step])


def quenched_exact(site: int, removal_step: int, t_max: int) -> list[ClassicalDistribution]:
    """Honest quenched evolution: absorb at ``site`` through ``removal_step``, then free.

    Returns the full distribution at every time ``0..t_max``.  The surviving
    mass for ``t >= removal_step`` equals ``quenched_ratio`` up to rounding.
    """
    _check_site(site)
    if removal_step < 0:
        raise ValidationError(f"removal_step must be >= 0, got {removal_step}")
    if t_max < 0:
        raise ValidationError(f"t_max must be >= 0, got {t_max}")
    n = 2 * t_max + 1  # sites -t_max .. t_max
    j_site = site + t_max
    p = np.zeros(n)
    p[t_max] = 1.0
    absorbed = 0.0
    xs = np.arange(-t_max, t_max + 1)

    def snapshot(t: int) -> ClassicalDistribution:
        probs = {int(x): float(w) for x, w in zip(xs, p) if w > 0.0}
        return ClassicalDistribution(t=t, probs=probs, absorbed=absorbed)

    history = [snapshot(0)]
    for t in range(1, t_max + 1):
        new = np.zeros(n)
        new[1:] += 0.5 * p[:-1]
        new[:-1] += 0.5 * p[1:]
        if t <= removal_step:
            absorbed += new[j_site]
            new[j_site] = 0.0
        p = new
        history.append(snapshot(t))
    return history


def factorized_quenched(site: int, removal_step: int, t: int) -> ClassicalDistribution:
    """Free distribution scaled by the quenched ratio (the re-mixed late-time model).

    By construction the ratio to the free walk is the same at every site and
    time: the survival probability at the removal step.
    """
    ratio = quenched_ratio(site, removal_step)
    free = free_distribution(t)
    return ClassicalDistribution(
        t=t,
        probs={x: ratio * w for x, w in free.probs.items()},
        absorbed=1.0 - ratio,
    )


def correlation_ratio(site: int, removal_step: int) -> float:
    """Classical two-site correlation ratio: the squared occupation ratio.

    The factorized quenched measure multiplies every site by the same
    survival factor, so a two-site product picks it up twice.
    """
    r = quenched_ratio(site, removal_step)
    return r * r
