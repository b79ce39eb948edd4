"""Independent reference implementations used to check the package.

Nothing here shares code with ``quenchwalk``: the quantum route is a dense
matrix acting on the full two-component lattice window, the classical routes
are exact rational arithmetic (``fractions.Fraction``) and brute-force path
enumeration.  Agreement between these and the package is the main evidence
that the fast implementations are right.
"""

from fractions import Fraction
from itertools import product
from math import comb

import numpy as np

INV_SQRT2 = 1.0 / np.sqrt(2.0)


# ---------------------------------------------------------------------------
# dense-matrix quantum walk


def dense_step_matrix(bound: int) -> np.ndarray:
    """Single-step operator on the window [-bound, bound] as a dense matrix.

    Basis index 2*(x + bound) + c with c = 0 for the left component and 1 for
    the right.  The coin mixes the two components on each site; the shift
    then moves the left output one site down and the right output one site
    up.  Sites at the window edge shift out and are lost, so callers must
    keep ``bound`` at least as large as the number of steps.
    """
    n = 2 * bound + 1
    dim = 2 * n
    coin = np.zeros((dim, dim), dtype=complex)
    for ix in range(n):
        l, r = 2 * ix, 2 * ix + 1
        coin[l, l] = INV_SQRT2
        coin[l, r] = INV_SQRT2
        coin[r, l] = INV_SQRT2
        coin[r, r] = -INV_SQRT2
    shift = np.zeros((dim, dim), dtype=complex)
    for ix in range(n):
        if ix - 1 >= 0:
            shift[2 * (ix - 1), 2 * ix] = 1.0  # left component moves down
        if ix + 1 < n:
            shift[2 * (ix + 1) + 1, 2 * ix + 1] = 1.0  # right component moves up
    return shift @ coin


def dense_initial(a0: complex, b0: complex, bound: int) -> np.ndarray:
    vec = np.zeros(2 * (2 * bound + 1), dtype=complex)
    vec[2 * bound] = a0
    vec[2 * bound + 1] = b0
    return vec


def dense_detect(vec: np.ndarray, site: int, bound: int, beta: float = 1.0) -> float:
    """Projective detection at ``site``; mutates ``vec``, returns the increment."""
    ix = site + bound
    l, r = vec[2 * ix], vec[2 * ix + 1]
    found = abs(l) ** 2 + abs(r) ** 2
    vec[2 * ix] *= np.sqrt(1.0 - beta) if beta < 1.0 else 0.0
    vec[2 * ix + 1] *= np.sqrt(1.0 - beta) if beta < 1.0 else 0.0
    return beta * found


def dense_run(
    a0: complex,
    b0: complex,
    t_max: int,
    detector_site: int | None = None,
    removal_step: int | None = 0,
    beta: float = 1.0,
):
    """Evolve with the dense operator, detecting after each active step.

    ``removal_step`` follows the package convention: 0 never detects, None
    detects forever.  Returns (amplitude dict {x: (l, r)} at t_max,
    detections array, occupation dict at t_max).
    """
    bound = t_max + 1
    u = dense_step_matrix(bound)
    vec = dense_initial(a0, b0, bound)
    det = np.zeros(t_max + 1)
    for t in range(1, t_max + 1):
        vec = u @ vec
        if detector_site is not None:
            active = removal_step is None or (removal_step > 0 and t <= removal_step)
            if active:
                det[t] = dense_detect(vec, detector_site, bound, beta)
    amps = {}
    occ = {}
    for ix in range(2 * bound + 1):
        x = ix - bound
        l, r = vec[2 * ix], vec[2 * ix + 1]
        w = abs(l) ** 2 + abs(r) ** 2
        if w > 0.0:
            amps[x] = (l, r)
            occ[x] = w
    return amps, det, occ


# ---------------------------------------------------------------------------
# exact classical references


def exact_free_distribution(t: int) -> dict[int, Fraction]:
    """Simple-random-walk occupation at time t, exact."""
    out = {}
    for j in range(t + 1):
        x = -t + 2 * j
        out[x] = Fraction(comb(t, j), 2**t)
    return out


def exact_first_passage(site: int, t: int) -> Fraction:
    """Hitting-time mass via the reflection principle, exact.

    F(site, t) = (site / t) * C(t, (t + site)/2) / 2^t on parity-valid t.
    """
    if site < 1 or t < site or (t + site) % 2 != 0:
        return Fraction(0)
    return Fraction(site, t) * Fraction(comb(t, (t + site) // 2), 2**t)


def exact_first_passage_dp(site: int, t_max: int) -> list[Fraction]:
    """Hitting-time mass by exact DP with an absorbing site, independent route."""
    lo = -t_max - 1
    width = site - lo  # positions lo .. site-1 stay live
    q = {0 - lo: Fraction(1)}
    out = [Fraction(0)]
    for _ in range(1, t_max + 1):
        new: dict[int, Fraction] = {}
        hit = Fraction(0)
        for pos, mass in q.items():
            for move in (-1, 1):
                npos = pos + move
                if npos == site - lo:
                    hit += mass / 2
                elif 0 <= npos < width:
                    new[npos] = new.get(npos, Fraction(0)) + mass / 2
        out.append(hit)
        q = new
    return out


def enumerate_paths(site: int, t_max: int):
    """All 2^t_max walks; returns (first-passage list, survival list), exact.

    Brute force over every ±1 step sequence, so keep ``t_max`` small.
    """
    fp = [Fraction(0)] * (t_max + 1)
    surv = [Fraction(1)] * (t_max + 1)
    weight = Fraction(1, 2**t_max)
    for path in product((-1, 1), repeat=t_max):
        pos = 0
        hit_at = None
        for t, move in enumerate(path, start=1):
            pos += move
            if pos == site:
                hit_at = t
                break
        if hit_at is not None:
            fp[hit_at] += weight
            for t in range(hit_at, t_max + 1):
                surv[t] -= weight
    return fp, surv
