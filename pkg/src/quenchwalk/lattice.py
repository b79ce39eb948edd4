"""Two-component walker state on the 1-D integer lattice.

The walker carries a left/right amplitude pair (a spinor) at each site.  One
time step mixes the pair at every site with a fixed 2x2 unitary (the balanced
coin by default) and then shifts the left output one site to the left and the
right output one site to the right.  Starting from a single occupied site, the
support after ``t`` steps is ``[origin - t, origin + t]`` and amplitudes live
only on sites with ``(x - origin + t)`` even.

States are plain immutable value objects backed by numpy arrays; ``step`` and
``evolve`` return fresh states and never mutate their input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .errors import ValidationError

INV_SQRT2 = 1.0 / math.sqrt(2.0)

# Balanced coin: mixes (l, r) -> ((l + r)/sqrt2, (l - r)/sqrt2).
BALANCED_COIN = np.array([[INV_SQRT2, INV_SQRT2], [INV_SQRT2, -INV_SQRT2]], dtype=np.complex128)

_NORM_TOL = 1e-9


class Spinor(NamedTuple):
    """Amplitude pair at one site: left-moving component ``l``, right-moving ``r``."""

    l: complex
    r: complex


@dataclass(frozen=True)
class InitialCondition:
    """Spinor placed on the starting site; must satisfy |a0|^2 + |b0|^2 = 1."""

    a0: complex
    b0: complex

    def __post_init__(self) -> None:
        norm = abs(self.a0) ** 2 + abs(self.b0) ** 2
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValidationError(
                f"initial spinor is not normalized: |a0|^2 + |b0|^2 = {norm!r}"
            )


#: Balanced start that spreads symmetrically under the balanced coin.
SYMMETRIC = InitialCondition(INV_SQRT2, 1j * INV_SQRT2)


@dataclass(frozen=True)
class WalkState:
    """Walker amplitudes after ``t`` steps from ``origin``.

    ``left`` and ``right`` hold the two spinor components on the contiguous
    window ``[origin - t, origin + t]``; index ``i`` maps to site
    ``origin - t + i``.  Sites outside the window carry zero amplitude.
    """

    t: int
    origin: int
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)

    @property
    def x_min(self) -> int:
        return self.origin - self.t

    @property
    def x_max(self) -> int:
        return self.origin + self.t

    def _index(self, x: int) -> int | None:
        i = x - self.x_min
        if 0 <= i <= 2 * self.t:
            return i
        return None

    def spinor(self, x: int) -> Spinor:
        """Amplitude pair at site ``x`` (zero outside the support window)."""
        i = self._index(x)
        if i is None:
            return Spinor(0j, 0j)
        return Spinor(complex(self.left[i]), complex(self.right[i]))

    def norm(self) -> float:
        """Total occupation probability of the state."""
        return float(np.vdot(self.left, self.left).real + np.vdot(self.right, self.right).real)

    @classmethod
    def from_amplitudes(
        cls, amplitudes: Mapping[int, tuple[complex, complex]], t: int, origin: int = 0
    ) -> "WalkState":
        """Build a state from a site -> (l, r) map; sites must lie within the window."""
        n = 2 * t + 1
        left = np.zeros(n, dtype=np.complex128)
        right = np.zeros(n, dtype=np.complex128)
        for x, (l, r) in amplitudes.items():
            i = x - (origin - t)
            if not 0 <= i < n:
                raise ValidationError(f"site {x} outside support window for t={t}")
            left[i] = l
            right[i] = r
        return cls(t=t, origin=origin, left=left, right=right)


def initial_state(ic: InitialCondition, origin: int = 0) -> WalkState:
    """Place the initial spinor on ``origin`` at time zero."""
    return WalkState(
        t=0,
        origin=origin,
        left=np.array([ic.a0], dtype=np.complex128),
        right=np.array([ic.b0], dtype=np.complex128),
    )


def _check_coin(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (2, 2):
        raise ValidationError(f"coin matrix must be 2x2, got shape {matrix.shape}")
    if not np.allclose(matrix.conj().T @ matrix, np.eye(2), atol=1e-9):
        raise ValidationError("coin matrix is not unitary")
    return matrix


def coin(s: Spinor, matrix: np.ndarray | None = None) -> Spinor:
    """Apply the coin to one spinor.  Default is the balanced coin."""
    if matrix is None:
        return Spinor((s.l + s.r) * INV_SQRT2, (s.l - s.r) * INV_SQRT2)
    m = _check_coin(matrix)
    return Spinor(m[0, 0] * s.l + m[0, 1] * s.r, m[1, 0] * s.l + m[1, 1] * s.r)


def step(state: WalkState, matrix: np.ndarray | None = None) -> WalkState:
    """One coin-then-shift update.

    The coin output ``l`` at site ``x + 1`` becomes the new ``l`` at ``x``; the
    coin output ``r`` at site ``x - 1`` becomes the new ``r`` at ``x``.  The
    support window grows by one site on each side.
    """
    old = 2 * state.t + 1
    if matrix is None:
        coined_l = (state.left + state.right) * INV_SQRT2
        coined_r = (state.left - state.right) * INV_SQRT2
    else:
        m = _check_coin(matrix)
        coined_l = m[0, 0] * state.left + m[0, 1] * state.right
        coined_r = m[1, 0] * state.left + m[1, 1] * state.right
    left = np.zeros(old + 2, dtype=np.complex128)
    right = np.zeros(old + 2, dtype=np.complex128)
    left[:old] = coined_l     # site x picks up the coined l from x + 1
    right[2:] = coined_r      # site x picks up the coined r from x - 1
    return WalkState(t=state.t + 1, origin=state.origin, left=left, right=right)


def evolve(state: WalkState, n: int, matrix: np.ndarray | None = None) -> WalkState:
    """Apply ``n`` steps.  ``n = 0`` returns the state unchanged."""
    if n < 0:
        raise ValidationError(f"step count must be non-negative, got {n}")
    for _ in range(n):
        state = step(state, matrix)
    return state


def occupation(state: WalkState) -> dict[int, float]:
    """Per-site probability |l|^2 + |r|^2; sites with exactly zero weight are omitted."""
    weights = np.abs(state.left) ** 2 + np.abs(state.right) ** 2
    xs = np.arange(state.x_min, state.x_max + 1)
    return {int(x): float(w) for x, w in zip(xs, weights) if w > 0.0}
