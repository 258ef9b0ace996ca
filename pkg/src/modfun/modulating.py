"""Polynomial modulating-function families and the modulation operator.

A family member is the L2-normalized form of

    (h - tau)^(p + i) * tau^(p + S + 1 - i),    tau in [0, h],  i = 1..S,

where p >= 1 is the exponent offset, S the family size and h the window
length.  Every member vanishes together with its first min(p+i, p+S+1-i) - 1
derivatives at both window ends; the order guaranteed across the whole family
is p + 1.  That boundary behaviour is what lets inner products against a
member's derivatives stand in for derivatives of the (possibly noisy) signal.

Derivatives are expanded analytically through the general Leibniz rule on the
two power factors, with exact integer coefficients.  No finite differencing
happens anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, perm

import numpy as np

from .errors import InvalidRange, OrderUnavailable, OutOfWindow, WindowMisaligned
from .signals import DEFAULT_RULE, SampledSignal, TimeGrid, integrate

#: Subintervals used once per member to compute the normalization constant.
NORM_RESOLUTION = 100_000

_EDGE_TOL = 1e-12  # slack on [0, h] membership, as a fraction of h


@dataclass(frozen=True)
class PolyModFun:
    """One normalized member of a polynomial modulating family."""

    offset: int       # p
    index: int        # i, 1-based position in the family
    family_size: int  # S
    window: float     # h, seconds
    norm_const: float

    @property
    def exponents(self) -> tuple[int, int]:
        """(left, right) powers: left on (h - tau), right on tau."""
        return (
            self.offset + self.index,
            self.offset + self.family_size + 1 - self.index,
        )

    @property
    def order(self) -> int:
        """Vanishing order at the window ends guaranteed for this member."""
        return min(self.exponents)


@dataclass(frozen=True)
class ModFunSet:
    """A full family sharing offset, size and window."""

    members: tuple[PolyModFun, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def offset(self) -> int:
        return self.members[0].offset

    @property
    def window(self) -> float:
        return self.members[0].window

    @property
    def min_order(self) -> int:
        """Vanishing order guaranteed across the family (= offset + 1)."""
        return min(m.order for m in self.members)


def _unnormalized(a: int, b: int, h: float, tau: np.ndarray) -> np.ndarray:
    return (h - tau) ** a * tau**b


@lru_cache(maxsize=None)
def _norm_const(a: int, b: int, h: float) -> float:
    tau = np.linspace(0.0, h, NORM_RESOLUTION + 1)
    sq = _unnormalized(a, b, h, tau) ** 2
    return float(np.sqrt(np.trapezoid(sq, dx=h / NORM_RESOLUTION)))


@lru_cache(maxsize=None)
def make_family(offset: int, size: int, window: float) -> ModFunSet:
    """Construct the normalized family for a given (p, S, h)."""
    if offset < 1:
        raise InvalidRange("exponent offset must be >= 1")
    if size < 1:
        raise InvalidRange("family size must be >= 1")
    if window <= 0:
        raise InvalidRange("window length must be positive")
    members = []
    for i in range(1, size + 1):
        a, b = offset + i, offset + size + 1 - i
        members.append(
            PolyModFun(
                offset=offset,
                index=i,
                family_size=size,
                window=float(window),
                norm_const=_norm_const(a, b, float(window)),
            )
        )
    return ModFunSet(members=tuple(members))


def eval_derivative(f: PolyModFun, j: int, tau):
    """Exact j-th derivative of the normalized member at local time tau.

    tau may be a scalar or an array; everything must lie in [0, h].  The two
    power factors are expanded by the Leibniz rule with integer coefficients,
    so boundary zeros are exact in floating point.
    """
    if j < 0:
        raise InvalidRange("derivative order must be nonnegative")
    arr = np.asarray(tau, dtype=float)
    h = f.window
    if np.any(arr < -_EDGE_TOL * h) or np.any(arr > h * (1 + _EDGE_TOL)):
        raise OutOfWindow(f"local time outside [0, {h}]")
    a, b = f.exponents
    out = np.zeros_like(arr)
    for m in range(j + 1):
        if m > a or (j - m) > b:
            continue
        coef = comb(j, m) * perm(a, m) * perm(b, j - m) * (-1) ** m
        out = out + coef * (h - arr) ** (a - m) * arr ** (b - (j - m))
    out = out / f.norm_const
    return float(out) if np.isscalar(tau) else out


def modulate(
    f: PolyModFun,
    j: int,
    y: SampledSignal,
    window: tuple[float, float] | None = None,
    rule: str = DEFAULT_RULE,
) -> float:
    """Inner product of the member's j-th derivative with y over one window.

    The window [a, b] must be grid-aligned with b - a equal to the member's
    window length; local time inside the integral is tau - a.  Offline use
    passes the full span, the sliding scheme passes [t - h, t].
    """
    if j > f.order:
        raise OrderUnavailable(
            f"derivative order {j} exceeds guaranteed vanishing order {f.order}"
        )
    a = y.grid.t0 if window is None else window[0]
    b = y.grid.tf if window is None else window[1]
    if abs((b - a) - f.window) > 1e-9 * max(1.0, f.window):
        raise WindowMisaligned(
            f"window [{a}, {b}] does not match member window length {f.window}"
        )
    sl = y.window_slice(a, b)
    local = y.grid.times[sl] - a
    product = eval_derivative(f, j, local) * y.values[sl]
    sub = SampledSignal(
        grid=TimeGrid(t0=a, tf=b, dt=y.grid.dt, n=sl.stop - sl.start),
        values=product,
    )
    return integrate(sub, rule=rule)


def check_order(mfset: ModFunSet, k: int) -> bool:
    """True iff every member vanishes with derivatives 0..k-1 at both ends."""
    if k < 1:
        raise InvalidRange("required order must be >= 1")
    return mfset.min_order >= k
