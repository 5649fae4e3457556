"""Occupation number and effective temperature of a trapped, damped oscillator.

Spectra use the same double-sided angular-frequency convention as the
quantum-noise module; the band-limited estimate is a ratio of integrals over
the same measure so the convention cancels.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, KB
from .twophoton import ScalarResponse

__all__ = [
    "OscillatorModel",
    "OccupationResult",
    "BandCoverageError",
    "thermal_psd",
    "bose_occupation",
    "point_occupation",
    "band_edges",
    "band_occupation",
    "temperature",
    "MIN_BAND_POINTS",
]

MIN_BAND_POINTS = 50


class BandCoverageError(ValueError):
    pass


@dataclass(frozen=True)
class OscillatorModel:
    """Reference oscillator chi = (1/mu) / (W_eff^2 - W^2 + i W_eff W / Q_eff)."""

    mu: float
    Omega_eff: float
    Q_eff: float

    def __post_init__(self):
        for name in ("mu", "Omega_eff", "Q_eff"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    @classmethod
    def for_trap(cls, trap, M, mu=None):
        """Default mu = M/4 (four test masses of mass M in the differential mode)."""
        return cls(M / 4 if mu is None else mu, trap.Omega_eff, trap.Q_eff)

    def chi_values(self, omega):
        W = self.Omega_eff
        return (1 / self.mu) / (W**2 - omega**2 + 1j * W * omega / self.Q_eff)

    def chi(self, grid):
        return ScalarResponse(self.chi_values(grid.omega), grid)

    def abs_im_chi(self, omega):
        return np.abs(np.imag(self.chi_values(np.asarray(omega, dtype=float))))


@dataclass(frozen=True)
class OccupationResult:
    n_bar: float
    T_bar: float
    band: tuple
    floored: bool = False
    n_raw: float = None


def bose_occupation(omega, T):
    return 1 / np.expm1(HBAR * np.asarray(omega) / (KB * T))


def thermal_psd(osc, T, grid):
    """2 hbar coth(hbar W / 2 k_B T) |Im chi|."""
    if not T > 0:
        raise ValueError("temperature must be > 0")
    w = grid.omega
    x = HBAR * w / (2 * KB * T)
    return ScalarResponse(2 * HBAR / np.tanh(x) * osc.abs_im_chi(w), grid)


def point_occupation(S_res, osc):
    """n from n + 1/2 = S(W_eff) / (4 hbar |Im chi(W_eff)|); negative n is floored at 0."""
    if S_res < 0:
        raise ValueError("spectral density must be >= 0")
    n = S_res / (4 * HBAR * osc.abs_im_chi(osc.Omega_eff)) - 0.5
    if n < 0:
        warnings.warn(f"inferred occupation {n:.3g} < 0 floored at 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(n)


def band_edges(trap):
    """W_pm = W_eff (1 +- 1/(2 Q_eff)); requires Q_eff > 1/2."""
    if not trap.Q_eff > 0.5:
        raise ValueError(f"band needs Q_eff > 1/2, got {trap.Q_eff!r}")
    W = trap.Omega_eff
    return W * (1 - 1 / (2 * trap.Q_eff)), W * (1 + 1 / (2 * trap.Q_eff))


def temperature(n_bar, Omega_eff):
    """T from n = 1/(exp(hbar W / k_B T) - 1); zero occupation maps to 0 K."""
    if n_bar <= 0:
        return 0.0
    return HBAR * Omega_eff / (KB * math.log1p(1 / n_bar))


def _band_samples(S, lo, hi, min_points):
    w = S.grid.omega
    inside = (w > lo) & (w < hi)
    count = int(np.count_nonzero(inside))
    if count < min_points:
        raise BandCoverageError(
            f"only {count} grid points inside the band [{lo / (2 * np.pi):.4g}, {hi / (2 * np.pi):.4g}] Hz;"
            f" need >= {min_points}"
        )
    if lo < w[0] or hi > w[-1]:
        raise BandCoverageError("grid does not cover the band")
    vals = np.real(S.values)
    ends = np.interp([lo, hi], w, vals)
    x = np.concatenate([[lo], w[inside], [hi]])
    y = np.concatenate([[ends[0]], vals[inside], [ends[1]]])
    return x, y


def band_occupation(S_xx, osc, min_points=MIN_BAND_POINTS):
    """Band-limited occupation: 4 hbar (n + 1/2) = int S / int |Im chi| over [W_-, W_+]."""
    lo, hi = band_edges(osc)
    x, y = _band_samples(S_xx, lo, hi, min_points)
    num = np.trapezoid(y, x)
    den = np.trapezoid(osc.abs_im_chi(x), x)
    n = num / (4 * HBAR * den) - 0.5
    floored = n < 0
    n_bar = 0.0 if floored else float(n)
    return OccupationResult(
        n_bar=n_bar, T_bar=temperature(n_bar, osc.Omega_eff), band=(lo, hi),
        floored=bool(floored), n_raw=float(n),
    )
