"""Squeeze angle and amplitude selection and the trap grid search.

Each (trap, squeezing) evaluation integrates the occupation on its own linear
grid spanning the thermometry band, with ``W_eff`` at the midpoint.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .budget import total_motion_psd
from .feedback import TrapSpec, close_loop, controller_for
from .plants import LossBudget, MirrorParams, RSEParams, SqueezerConfig, mirror_plant, rse_plant, sql_frequency
from .qnoise import effective_dephasing, motion_metrics
from .thermometry import OscillatorModel, band_edges, band_occupation
from .twophoton import FrequencyGrid, SingularityError, db_to_squeeze, squeeze_to_db

__all__ = [
    "CoolingSystem",
    "SearchSpace",
    "Evaluation",
    "Optimum",
    "SearchError",
    "band_grid",
    "optimal_angle",
    "optimal_amplitude",
    "evaluate_point",
    "optimize_point",
    "search",
    "sweep_phi_r",
    "sweep_trap",
]

DEFAULT_BAND_POINTS = 201
R_MAX_DB = 20.0


class SearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class CoolingSystem:
    """Plant description plus the fixed noise environment.

    ``mu`` overrides the reference-oscillator mass (default M for a mirror,
    M/4 for the interferometer).
    """

    kind: str
    params: object
    losses: LossBudget = field(default_factory=LossBudget)
    phi_rms: float = 0.0
    forces: tuple = ()
    sensings: tuple = ()
    mu: float = None

    def __post_init__(self):
        if self.kind == "mirror" and not isinstance(self.params, MirrorParams):
            raise TypeError("mirror system needs MirrorParams")
        if self.kind == "rse" and not isinstance(self.params, RSEParams):
            raise TypeError("rse system needs RSEParams")
        if self.kind not in ("mirror", "rse"):
            raise ValueError(f"unknown plant kind {self.kind!r}")

    @property
    def Omega_sql(self):
        return sql_frequency(self.params)

    def plant(self, grid):
        if self.kind == "mirror":
            return mirror_plant(self.params, grid, self.losses)
        return rse_plant(self.params, self.losses, grid)

    def loop(self, trap, grid):
        plant = self.plant(grid)
        return close_loop(plant, controller_for(plant, trap))

    def oscillator(self, trap):
        if self.mu is not None:
            mu = self.mu
        elif self.kind == "mirror":
            mu = self.params.mass
        else:
            mu = self.params.M / 4
        return OscillatorModel(mu, trap.Omega_eff, trap.Q_eff)


@dataclass(frozen=True)
class SearchSpace:
    """Trap grid in rad/s and Q; defaults follow a 10-100 Hz by 0.5-5 sweep."""

    Omega_min: float = 2 * math.pi * 10
    Omega_max: float = 2 * math.pi * 100
    n_Omega: int = 46
    Q_min: float = 0.5
    Q_max: float = 5.0
    n_Q: int = 19
    r_max_db: float = R_MAX_DB
    band_points: int = DEFAULT_BAND_POINTS

    def __post_init__(self):
        if not (0 < self.Omega_min <= self.Omega_max):
            raise ValueError("need 0 < Omega_min <= Omega_max")
        if not (0 < self.Q_min <= self.Q_max):
            raise ValueError("need 0 < Q_min <= Q_max")
        if self.n_Omega < 1 or self.n_Q < 1:
            raise ValueError("point counts must be >= 1")
        if self.n_Omega == 1 and self.Omega_min != self.Omega_max:
            raise ValueError("a single Omega point needs Omega_min == Omega_max")
        if self.n_Q == 1 and self.Q_min != self.Q_max:
            raise ValueError("a single Q point needs Q_min == Q_max")
        if not self.r_max_db > 0:
            raise ValueError("r_max_db must be > 0")

    def omegas(self):
        return np.linspace(self.Omega_min, self.Omega_max, self.n_Omega)

    def qs(self):
        return np.linspace(self.Q_min, self.Q_max, self.n_Q)


@dataclass(frozen=True)
class Evaluation:
    trap: TrapSpec
    phi: float
    r_db: float
    occupation: object
    at_bound: bool = False

    @property
    def n_bar(self):
        return self.occupation.n_bar


@dataclass(frozen=True)
class Optimum(Evaluation):
    evaluated: int = 0
    failed: int = 0


def band_grid(trap, n_points=DEFAULT_BAND_POINTS):
    """Linear grid over the thermometry band with W_eff at the centre."""
    if n_points % 2 == 0:
        n_points += 1
    lo, hi = band_edges(trap)
    w = np.linspace(lo, hi, n_points)
    w[n_points // 2] = trap.Omega_eff
    return FrequencyGrid(w)


def _at(resp, omega):
    grid = resp.grid
    w = grid.omega
    if not w[0] <= omega <= w[-1]:
        raise ValueError(f"omega = {omega:.6g} rad/s lies outside the grid")
    return float(np.interp(omega, w, np.real(resp.values)))


def _wrap_half_pi(phi):
    """Map an angle modulo pi into (-pi/2, pi/2]."""
    out = phi - math.pi * math.floor(phi / math.pi + 0.5)
    if out <= -math.pi / 2:
        out += math.pi
    return out


def optimal_angle(metrics, trap):
    """phi = -theta(W_eff), wrapped modulo pi into (-pi/2, pi/2]."""
    return _wrap_half_pi(-_at(metrics.theta, trap.Omega_eff))


def balance_amplitude(Xi_prime, r_max=db_to_squeeze(R_MAX_DB)):
    """Solve (1 - Xi') e^{-2r} = Xi' e^{2r} on [0, r_max]; returns (r, at_bound)."""

    def g(r):
        return (1 - Xi_prime) * math.exp(-2 * r) - Xi_prime * math.exp(2 * r)

    if g(0.0) <= 0:
        return 0.0, True
    if g(r_max) >= 0:
        return r_max, True
    return bisect(g, 0.0, r_max, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200), False


def optimal_amplitude(metrics, sqz, trap, r_max_db=R_MAX_DB):
    """Squeeze level (dB) balancing injected squeezing against dephasing at W_eff.

    With phi at the optimal angle the common factors cancel, leaving the
    balance of ``(1 - Xi') e^{-2r}`` against ``Xi' e^{2r}``.
    """
    Xi_p = effective_dephasing(_at(metrics.Xi, trap.Omega_eff), sqz.phi_rms)
    r, flag = balance_amplitude(Xi_p, db_to_squeeze(r_max_db))
    return squeeze_to_db(r), flag


def evaluate_point(system, trap, phi, r_db, n_points=DEFAULT_BAND_POINTS):
    """Band occupation for fixed trap and squeezing."""
    grid = band_grid(trap, n_points)
    loop = system.loop(trap, grid)
    sqz = SqueezerConfig(level_db=r_db, phi=phi, phi_rms=system.phi_rms)
    budget = total_motion_psd(loop, sqz, system.forces, system.sensings)
    return band_occupation(budget.total, system.oscillator(trap))


def optimize_point(system, trap, r_max_db=R_MAX_DB, n_points=DEFAULT_BAND_POINTS):
    """Inner step of the search: analytic phi, balanced r, then the occupation."""
    grid = band_grid(trap, n_points)
    loop = system.loop(trap, grid)
    metrics = motion_metrics(loop, system.phi_rms)
    phi = optimal_angle(metrics, trap)
    r_db, flag = optimal_amplitude(metrics, SqueezerConfig(phi=phi, phi_rms=system.phi_rms), trap, r_max_db)
    sqz = SqueezerConfig(level_db=r_db, phi=phi, phi_rms=system.phi_rms)
    budget = total_motion_psd(loop, sqz, system.forces, system.sensings)
    occ = band_occupation(budget.total, system.oscillator(trap))
    return Evaluation(trap, phi, r_db, occ, flag)


def search(system, space=None):
    """Exhaustive (W_eff, Q_eff) grid; ties go to the smaller W_eff, then the smaller Q."""
    space = space or SearchSpace()
    best, evaluated, failed = None, 0, 0
    for W in space.omegas():
        for Q in space.qs():
            try:
                ev = optimize_point(system, TrapSpec(float(W), float(Q)), space.r_max_db, space.band_points)
            except (ValueError, SingularityError, ArithmeticError):
                failed += 1
                continue
            evaluated += 1
            if best is None or ev.n_bar < best.n_bar:
                best = ev
    if best is None:
        raise SearchError(f"all {failed} grid points failed")
    return Optimum(best.trap, best.phi, best.r_db, best.occupation, best.at_bound, evaluated, failed)


def sweep_phi_r(system, trap, phis, r_dbs, n_points=DEFAULT_BAND_POINTS):
    """Occupation on a phi x r grid at fixed trap; rows ordered phi-major."""
    grid = band_grid(trap, n_points)
    loop = system.loop(trap, grid)
    osc = system.oscillator(trap)
    rows = []
    for phi in phis:
        for r_db in r_dbs:
            sqz = SqueezerConfig(level_db=float(r_db), phi=float(phi), phi_rms=system.phi_rms)
            budget = total_motion_psd(loop, sqz, system.forces, system.sensings)
            rows.append((float(phi), float(r_db), band_occupation(budget.total, osc).n_bar))
    return rows


def sweep_trap(system, omegas, qs, r_max_db=R_MAX_DB, n_points=DEFAULT_BAND_POINTS):
    """Optimized occupation on a W_eff x Q grid; points that fail are left out."""
    rows = []
    for W in omegas:
        for Q in qs:
            try:
                n = optimize_point(system, TrapSpec(float(W), float(Q)), r_max_db, n_points).n_bar
            except (ValueError, SingularityError, ArithmeticError):
                continue
            rows.append((float(W), float(Q), n))
    return rows
