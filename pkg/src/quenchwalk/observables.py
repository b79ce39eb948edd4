"""Ratio and scaling observables built on top of recorded runs.

Everything here compares a quenched (or never-quenched) run against a
detector-free baseline of the same length and initial condition.  Pointwise
ratios use the occupation that *arrived* at a site (the detected flux is
added back at the detector site), so during the active detection period the
ratio tracks the depleted arriving population rather than the identically
zeroed post-detection value.

Two conventions, applied consistently:

* A pointwise ratio whose numerator and denominator are exactly equal (bit
  for bit) is 1.0, including the 0/0 case before the walker first reaches the
  probe site.  Otherwise entries with baseline below ``RATIO_FLOOR`` are
  undefined: they are dropped from time series and reported as NaN in spatial
  profiles.
* Saturation is a ratio of window sums over the tail fifth of the run, with
  convergence judged by the relative change between the two half-windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ScanRangeError, ValidationError
from .lattice import SYMMETRIC, InitialCondition
from .measurement import (
    UNDEFINED,
    BaselineCache,
    DetectorSchedule,
    WalkRecord,
    run_free,
    run_quenched,
)

#: Baseline occupations below this are too small for a meaningful pointwise ratio.
RATIO_FLOOR = 1e-12


@dataclass(frozen=True)
class RatioSeries:
    """Occupation ratio at one site over time, on parity-valid times only."""

    x: int
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    normalized: bool = False
    baseline_label: str = "free"

    def __len__(self) -> int:
        return len(self.times)

    def value_at(self, t: int) -> float:
        idx = np.searchsorted(self.times, t)
        if idx == len(self.times) or self.times[idx] != t:
            raise KeyError(f"no ratio entry at t={t}")
        return float(self.values[idx])

    def held(self, ts: np.ndarray) -> np.ndarray:
        """Sample-and-hold lookup: the most recent defined value at or before each t."""
        idx = np.searchsorted(self.times, ts, side="right") - 1
        if np.any(idx < 0):
            raise ValidationError("requested times precede the first defined ratio entry")
        return self.values[idx]


@dataclass(frozen=True)
class CorrelationSeries:
    """Two-site correlation ratio versus time for one site offset."""

    x: int
    offset: int
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def value_at(self, t: int) -> float:
        idx = np.searchsorted(self.times, t)
        if idx == len(self.times) or self.times[idx] != t:
            raise KeyError(f"no correlation entry at t={t}")
        return float(self.values[idx])


@dataclass(frozen=True)
class SaturationPolicy:
    """How the late-time ratio plateau is estimated.

    The window is the tail ``tail_fraction`` of the run, split in half for the
    convergence check; an unconverged estimate triggers a rerun with the
    horizon multiplied by ``growth``, at most ``max_extensions`` times.
    """

    tail_fraction: float = 0.2
    rel_tol: float = 0.02
    growth: int = 2
    max_extensions: int = 2


@dataclass(frozen=True)
class SaturationEstimate:
    value: float
    window: tuple[int, int]
    converged: bool
    relative_spread: float
    t_max: int


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power law fit in log-log coordinates."""

    slope: float
    intercept: float
    max_rel_residual: float
    n_points: int


@dataclass(frozen=True)
class CollapsePoint:
    site: int
    removal_step: int
    saturation: float
    k: float


@dataclass(frozen=True)
class CollapseEstimate:
    value: float
    relative_spread: float
    points: list[CollapsePoint]


def default_t_max(site: int, removal_step: int | None) -> int:
    """Long enough for the ratio at ``site`` to settle after a quench at ``removal_step``."""
    rs = 0 if removal_step is None else removal_step
    return max(20 * rs, 20 * site * site, 2000)


def _check_comparable(record: WalkRecord, baseline: WalkRecord) -> None:
    if record.t_max != baseline.t_max:
        raise ValidationError(
            f"records disagree on t_max ({record.t_max} vs {baseline.t_max}); "
            "truncate the longer one first"
        )
    if record.origin != baseline.origin:
        raise ValidationError("records disagree on origin")
    if (record.ic.a0, record.ic.b0) != (baseline.ic.a0, baseline.ic.b0):
        raise ValidationError("records disagree on the initial condition")


def ratio_series(
    record: WalkRecord,
    baseline: WalkRecord,
    x: int | None = None,
    normalized: bool = False,
) -> RatioSeries:
    """Ratio of arriving occupation at ``x`` to the baseline, per parity-valid time.

    With ``normalized=True`` the numerator is first divided by the surviving
    probability, giving the conditional-measure ratio.  Entries where the two
    sides are exactly equal are 1.0 by convention; remaining entries with
    baseline below ``RATIO_FLOOR`` are dropped.
    """
    _check_comparable(record, baseline)
    if x is None:
        x = record.schedule.site
    num = record.arrival_series(x).astype(float, copy=True)
    den = baseline.occupation_series(x)
    if normalized:
        num = np.divide(
            num, record.survival, out=np.full_like(num, UNDEFINED), where=record.survival != 0.0
        )
    t0 = 0 if (x - record.origin) % 2 == 0 else 1
    ts = np.arange(t0, record.t_max + 1, 2)
    n = num[ts]
    d = den[ts]
    equal = n == d
    defined = equal | (d >= RATIO_FLOOR)
    safe = np.where(d == 0.0, 1.0, d)
    vals = np.where(equal, 1.0, n / safe)
    return RatioSeries(
        x=x,
        times=ts[defined],
        values=vals[defined],
        normalized=normalized,
        baseline_label=baseline.schedule.label,
    )


def _window_sums_estimate(
    record: WalkRecord, baseline: WalkRecord, x: int, policy: SaturationPolicy
) -> SaturationEstimate | None:
    """Tail-window ratio estimate, or None if the tail overlaps active detection."""
    t_hi = record.t_max
    t_lo = t_hi - int(policy.tail_fraction * t_hi)
    rs = record.schedule.removal_step
    if rs is not None and rs > 0 and t_lo <= rs:
        return None
    f = record.occupation_series(x)
    f0 = baseline.occupation_series(x)
    denom = float(np.sum(f0[t_lo : t_hi + 1]))
    if denom <= 0.0:
        raise ValidationError(f"baseline occupation vanishes on the window [{t_lo}, {t_hi}]")
    value = float(np.sum(f[t_lo : t_hi + 1])) / denom
    mid = (t_lo + t_hi + 1) // 2
    r1 = float(np.sum(f[t_lo:mid])) / float(np.sum(f0[t_lo:mid]))
    r2 = float(np.sum(f[mid : t_hi + 1])) / float(np.sum(f0[mid : t_hi + 1]))
    if r1 == r2:
        spread = 0.0
    else:
        spread = abs(r2 - r1) / max(abs(r1), abs(r2))
    return SaturationEstimate(
        value=value,
        window=(t_lo, t_hi),
        converged=spread <= policy.rel_tol,
        relative_spread=spread,
        t_max=t_hi,
    )


def saturation_ratio(
    record: WalkRecord,
    baseline: WalkRecord,
    x: int | None = None,
    policy: SaturationPolicy | None = None,
    cache: BaselineCache | None = None,
) -> SaturationEstimate:
    """Late-time plateau of the occupation ratio at ``x``.

    Sums the recorded occupation over the tail window for both runs and takes
    the ratio.  If the two half-windows disagree by more than the policy
    tolerance (or the tail still overlaps the active detection period), the
    run is repeated with a longer horizon, up to the policy cap; if still
    unconverged the estimate is returned with ``converged=False``.
    """
    policy = policy or SaturationPolicy()
    _check_comparable(record, baseline)
    if x is None:
        x = record.schedule.site
    est = _window_sums_estimate(record, baseline, x, policy)
    extensions = 0
    while (est is None or not est.converged) and extensions < policy.max_extensions:
        extensions += 1
        t_new = record.t_max * policy.growth
        record = run_quenched(
            record.ic, record.schedule, t_new, probes=(x,), origin=record.origin
        )
        if cache is not None:
            baseline = cache.free_run(record.ic, t_new, probes=(x,), origin=record.origin)
        else:
            baseline = run_free(record.ic, t_new, probes=(x,), origin=record.origin)
        est = _window_sums_estimate(record, baseline, x, policy)
    if est is None:
        raise ValidationError(
            "tail window still overlaps the active detection period at the extension cap; "
            "start from a longer t_max"
        )
    return est


def saturation_for(
    ic: InitialCondition,
    site: int,
    removal_step: int,
    *,
    policy: SaturationPolicy | None = None,
    cache: BaselineCache | None = None,
    t_max: int | None = None,
) -> SaturationEstimate:
    """Run the quench and its baseline at the default horizon and estimate the plateau."""
    t_max = t_max or default_t_max(site, removal_step)
    record = run_quenched(ic, DetectorSchedule(site, removal_step), t_max, probes=(site,))
    if cache is not None:
        baseline = cache.free_run(ic, t_max, probes=(site,))
    else:
        baseline = run_free(ic, t_max, probes=(site,))
    return saturation_ratio(record, baseline, x=site, policy=policy, cache=cache)


def find_removal_limit(
    site: int,
    grid: Sequence[int],
    *,
    ic: InitialCondition = SYMMETRIC,
    policy: SaturationPolicy | None = None,
    cache: BaselineCache | None = None,
) -> int:
    """Largest removal step whose saturation ratio still exceeds unity.

    Scans the grid, takes the largest above-unity point (the small-removal
    behaviour need not be monotonic), and bisects between it and the next
    grid point down to unit resolution.  Raises ``ScanRangeError`` when the
    grid does not bracket the crossing on either side.
    """
    grid = sorted({int(g) for g in grid})
    if not grid:
        raise ValidationError("empty removal-step grid")
    memo: dict[int, float] = {}

    def sat(tr: int) -> float:
        if tr not in memo:
            memo[tr] = saturation_for(ic, site, tr, policy=policy, cache=cache).value
        return memo[tr]

    above = [tr for tr in grid if sat(tr) > 1.0]
    if not above:
        raise ScanRangeError(
            f"no saturation ratio above unity on the grid for site {site}; "
            "the grid lies entirely beyond the crossing"
        )
    lo = max(above)
    later = [tr for tr in grid if tr > lo]
    if not later:
        raise ScanRangeError(
            f"largest grid point {lo} is still above unity for site {site}; extend the grid"
        )
    hi = min(later)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if sat(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return lo


def scan_grid_for(site: int) -> list[int]:
    """Default removal-step grid for the unity-crossing scan at ``site``.

    Geometric coverage from just above first contact out to several times the
    expected crossing scale ``site**2``.
    """
    lo = max(site + 1, site * site // 8)
    hi = max(8 * site * site, lo + 8)
    n = 10
    pts = {int(round(lo * (hi / lo) ** (i / (n - 1)))) for i in range(n)}
    return sorted(pts)


def collapse_constant(
    points: Iterable[tuple[int, int]],
    *,
    ic: InitialCondition = SYMMETRIC,
    policy: SaturationPolicy | None = None,
    cache: BaselineCache | None = None,
) -> CollapseEstimate:
    """Collapse ``saturation * removal_step / site**2`` over a (site, removal) grid.

    If the scaling form holds, every grid point yields the same constant; the
    relative spread is the largest deviation from the mean.
    """
    pts = list(points)
    if not pts:
        raise ValidationError("empty collapse grid")
    results = []
    for site, removal_step in pts:
        est = saturation_for(ic, site, removal_step, policy=policy, cache=cache)
        k = est.value * removal_step / (site * site)
        results.append(CollapsePoint(site=site, removal_step=removal_step, saturation=est.value, k=k))
    ks = np.array([p.k for p in results])
    mean = float(ks.mean())
    spread = float(np.max(np.abs(ks - mean)) / abs(mean))
    return CollapseEstimate(value=mean, relative_spread=spread, points=results)


def correlation_ratio(
    record: WalkRecord,
    baseline: WalkRecord,
    r: int,
    x: int | None = None,
) -> CorrelationSeries:
    """Ratio of the two-site correlation ``f(x+r) * f(x)`` to its baseline.

    The correlation ratio factorizes exactly into the product of the two
    single-site ratios.  Each factor is defined only on its own parity grid,
    so the product at time ``t`` uses each factor's most recent defined value
    at or before ``t``; for even ``r`` both factors update on the same times.
    """
    _check_comparable(record, baseline)
    if x is None:
        x = record.schedule.site
    far = ratio_series(record, baseline, x + r)
    near = ratio_series(record, baseline, x)
    if len(far) == 0 or len(near) == 0:
        raise ValidationError(f"no defined ratio entries for sites {x + r} and {x}")
    t_start = int(max(far.times[0], near.times[0]))
    ts = np.arange(t_start, record.t_max + 1)
    values = far.held(ts) * near.held(ts)
    return CorrelationSeries(x=x, offset=r, times=ts, values=values)


def spatial_ratio_profile(
    record: WalkRecord,
    baseline: WalkRecord,
    t: int,
    x: int | None = None,
) -> dict[int, float]:
    """Occupation ratio versus offset from the detector site at a fixed time.

    Returns ``{r: f(x + r, t) / f0(x + r, t)}`` over parity-valid offsets;
    entries whose baseline is below ``RATIO_FLOOR`` are NaN.  Both records
    need a stored snapshot (or kept distributions) at ``t``.
    """
    _check_comparable(record, baseline)
    if x is None:
        x = record.schedule.site
    occ = record.occupation_at(t)
    occ0 = baseline.occupation_at(t)
    origin = record.origin
    out: dict[int, float] = {}
    for site_x in range(origin - t, origin + t + 1):
        if (site_x - origin + t) % 2 != 0:
            continue
        den = occ0.get(site_x, 0.0)
        if den < RATIO_FLOOR:
            out[site_x - x] = UNDEFINED
        else:
            out[site_x - x] = occ.get(site_x, 0.0) / den
    return out


def loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> ScalingFit:
    """Ordinary least squares on ``log y`` versus ``log x``.

    Requires at least three strictly positive points.  The residual is the
    largest relative deviation of the data from the fitted power law.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("fit inputs must be 1-D sequences of equal length")
    if len(x) < 3:
        raise ValidationError(f"power-law fit needs at least 3 points, got {len(x)}")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValidationError("power-law fit needs strictly positive coordinates")
    lx = np.log(x)
    ly = np.log(y)
    dx = lx - lx.mean()
    denom = float(np.sum(dx * dx))
    if denom == 0.0:
        raise ValidationError("all x coordinates coincide; slope undefined")
    slope = float(np.sum(dx * (ly - ly.mean())) / denom)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = float(np.max(np.abs(np.exp(intercept + slope * lx - ly) - 1.0)))
    return ScalingFit(slope=slope, intercept=intercept, max_rel_residual=resid, n_points=len(x))


def siw_survival_decay(
    record: WalkRecord, t_lo: int | None = None, t_hi: int | None = None
) -> ScalingFit:
    """Diagnostic fit of how the never-removed detector's survival approaches its limit.

    Fits ``S(t) - S(t_max)`` against ``t`` in log-log coordinates over
    ``[t_lo, t_hi]`` (defaults: ``[t_max // 20, t_max // 2]``).  Purely
    informational; nothing in the package asserts a particular exponent.
    """
    t_hi = t_hi or record.t_max // 2
    t_lo = t_lo or max(2, record.t_max // 20)
    tail = record.survival[t_lo : t_hi + 1] - record.survival[record.t_max]
    ts = np.arange(t_lo, t_hi + 1)
    keep = tail > 0.0
    if np.count_nonzero(keep) < 3:
        raise ValidationError("survival tail is not positive on the fit window")
    return loglog_fit(ts[keep], tail[keep])
