"""Known basis families for time-varying unknowns, and their Gram matrices.

States and disturbances are approximated per window as a linear combination
of known basis functions in window-local time.  Raw monomials tau^(j-1)
mirror the published experiments; the scaled variant (tau/h)^(j-1) spans the
same space with far better conditioning on long windows and is the default.
Coefficients are always reported in the raw-monomial convention so results
stay comparable across the two kinds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, InvalidRange, NonFinite
from .modulating import ModFunSet, eval_derivative

MONOMIAL_RAW = "monomial-raw"
MONOMIAL_SCALED = "monomial-scaled"
BASIS_KINDS = (MONOMIAL_RAW, MONOMIAL_SCALED)


@dataclass(frozen=True)
class BasisFamily:
    kind: str
    size: int      # truncation order: j = 1..size
    window: float  # local-time span, seconds

    def __post_init__(self):
        if self.kind not in BASIS_KINDS:
            raise InvalidRange(f"unknown basis kind {self.kind!r}")
        if self.size < 1:
            raise InvalidRange("basis size must be >= 1")
        if self.window <= 0:
            raise InvalidRange("basis window must be positive")


@dataclass(frozen=True)
class GramMatrix:
    """Inner products of modulating members against basis elements."""

    entries: np.ndarray  # (S, M)
    cond: float          # ratio of extreme singular values


def eval_basis(family: BasisFamily, j: int, tau):
    """Value of the j-th basis element (1-based) at local time tau."""
    if not 1 <= j <= family.size:
        raise IndexOutOfRange(f"basis index {j} outside 1..{family.size}")
    arr = np.asarray(tau, dtype=float)
    if family.kind == MONOMIAL_SCALED:
        arr = arr / family.window
    out = arr ** (j - 1)
    return float(out) if np.isscalar(tau) else out


def design_matrix(family: BasisFamily, taus: np.ndarray) -> np.ndarray:
    """(len(taus), size) matrix of basis values at the given local times."""
    taus = np.asarray(taus, dtype=float)
    base = taus / family.window if family.kind == MONOMIAL_SCALED else taus
    return np.vander(base, N=family.size, increasing=True)


def reconstruct(coeffs: np.ndarray, family: BasisFamily, taus: np.ndarray) -> np.ndarray:
    """Pointwise sum of coeffs[j] * basis_j(tau) on the requested local times."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (family.size,):
        raise InvalidRange(f"expected {family.size} coefficients, got {coeffs.shape}")
    if not np.all(np.isfinite(coeffs)):
        raise NonFinite("coefficients contain non-finite entries")
    return design_matrix(family, taus) @ coeffs


def to_raw_coeffs(coeffs: np.ndarray, family: BasisFamily) -> np.ndarray:
    """Convert coefficients to the raw-monomial reporting convention.

    Scaled basis element j equals the raw one divided by h^(j-1), so the
    coefficients transform inversely and the reconstructed signal is
    unchanged.  Accepts stacked coefficient rows (..., size).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != family.size:
        raise InvalidRange(f"expected {family.size} coefficients per row")
    if family.kind == MONOMIAL_RAW:
        return coeffs
    powers = family.window ** np.arange(family.size)
    return coeffs / powers


def assemble_gram(mfset: ModFunSet, family: BasisFamily, dt: float) -> GramMatrix:
    """Gram matrix Theta[i][j] = <phi_i, basis_j> over the shared window.

    Sampled at the run's grid step so the entries use exactly the quadrature
    the estimator applies to its right-hand sides.  Requires at least as many
    modulating members as basis elements.
    """
    if abs(mfset.window - family.window) > 1e-9 * max(1.0, family.window):
        raise InvalidRange("modulating family and basis windows differ")
    if mfset.size < family.size:
        raise InvalidRange(
            f"family size {mfset.size} is below basis truncation {family.size}"
        )
    steps = round(mfset.window / dt)
    if steps < 1 or abs(steps * dt - mfset.window) > 1e-9 * max(1.0, mfset.window):
        raise InvalidRange(f"window {mfset.window} is not a multiple of dt={dt}")
    taus = dt * np.arange(steps + 1)
    weights = np.full(steps + 1, dt)
    weights[0] = weights[-1] = dt / 2
    rows = np.stack([eval_derivative(m, 0, taus) * weights for m in mfset.members])
    entries = rows @ design_matrix(family, taus)
    return GramMatrix(entries=entries, cond=float(np.linalg.cond(entries)))
