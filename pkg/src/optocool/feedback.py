"""Controller synthesis for cold damping and closure of the feedback loop."""

import math
from dataclasses import dataclass

import numpy as np

from .plants import MirrorParams, PlantResponse, RSEParams
from .twophoton import (
    ScalarResponse,
    SingularityError,
    homodyne_dual,
    identity,
)

__all__ = [
    "TrapSpec",
    "Controller",
    "ClosedLoop",
    "synthesize_controller",
    "controller_for",
    "close_loop",
    "crossover_frequency",
    "target_susceptibility",
]


@dataclass(frozen=True)
class TrapSpec:
    """Target trap: resonance ``Omega_eff`` (rad/s) and quality factor ``Q_eff``."""

    Omega_eff: float
    Q_eff: float

    def __post_init__(self):
        for name in ("Omega_eff", "Q_eff"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    @classmethod
    def from_hz(cls, f_eff, Q_eff):
        return cls(2 * np.pi * f_eff, Q_eff)

    def D(self, grid):
        """1 - (W/W_eff)^2 + i W/(W_eff Q_eff)."""
        x = grid.omega / self.Omega_eff
        return ScalarResponse(1 - x**2 + 1j * x / self.Q_eff, grid)


@dataclass(frozen=True)
class Controller:
    C: ScalarResponse
    trap: TrapSpec = None


@dataclass(frozen=True)
class ClosedLoop:
    G_ctrl: object
    H_eff: object
    Z_eff: object
    Y_eff: object
    T_eff: object
    chi_eff: ScalarResponse
    X_eff: ScalarResponse
    loss_channels: tuple
    v: object
    controller: Controller
    plant: PlantResponse

    @property
    def grid(self):
        return self.chi_eff.grid

    @property
    def trap(self):
        return self.controller.trap


def _sensing_gain(plant_kind, params, readout_efficiency):
    """Low-frequency phase-quadrature output per unit displacement, and the
    mass entering the free-mass susceptibility."""
    if plant_kind == "mirror":
        if not isinstance(params, MirrorParams):
            raise TypeError("mirror controller needs MirrorParams")
        gain = 2 * params.k * params.r * math.sqrt(params.P)
        mass = params.mass
    elif plant_kind == "rse":
        if not isinstance(params, RSEParams):
            raise TypeError("rse controller needs RSEParams")
        # DARM readout carries 1/sqrt(2) relative to one arm of power P_a F_a/F_s
        P_eq = params.P_a * params.F_a / params.F_s
        gain = 2 * params.k * params.r_e * math.sqrt(P_eq) / math.sqrt(2)
        mass = params.M / 2
    else:
        raise ValueError(f"unknown plant kind {plant_kind!r}")
    return gain * math.sqrt(readout_efficiency), mass


def synthesize_controller(plant_kind, params, trap, grid, zeta=0.0, readout_efficiency=1.0):
    """Spring plus velocity damping: C = -(m W_eff^2 / g)(1 + i W/(W_eff Q_eff)).

    ``g`` is the low-frequency sensing gain and ``m`` the free-mass mass
    (M for a mirror, M/2 for the RSE arm). ``trap=None`` gives C = 0.
    """
    if zeta != 0:
        raise ValueError("controller synthesis supports only zeta = 0 (phase readout)")
    if trap is None:
        return Controller(ScalarResponse(np.zeros(len(grid)), grid), None)
    gain, mass = _sensing_gain(plant_kind, params, readout_efficiency)
    x = grid.omega / trap.Omega_eff
    C = -(mass * trap.Omega_eff**2 / gain) * (1 + 1j * x / trap.Q_eff)
    return Controller(ScalarResponse(C, grid), trap)


def controller_for(plant, trap, zeta=0.0):
    return synthesize_controller(plant.kind, plant.params, trap, plant.grid, zeta,
                                 plant.readout_efficiency)


def target_susceptibility(trap, mass, grid):
    """(1/m) / (W_eff^2 - W^2 + i W_eff W / Q_eff)."""
    w = grid.omega
    W = trap.Omega_eff
    return ScalarResponse((1 / mass) / (W**2 - w**2 + 1j * W * w / trap.Q_eff), grid)


def close_loop(plant, ctrl, zeta=0.0):
    """Apply F_fb = C y with y read at homodyne angle ``zeta``."""
    C = ctrl.C if isinstance(ctrl, Controller) else ctrl
    if not isinstance(ctrl, Controller):
        ctrl = Controller(C)
    v = homodyne_dual(zeta)
    open_loop = C * (plant.Z_om @ v)
    try:
        G = (identity(2) - open_loop).inv()
    except SingularityError as e:
        raise SingularityError("feedback loop is singular", e.omega) from None
    vG = v @ G
    chi = plant.chi_om
    H_eff = G @ plant.H_om
    T_eff = plant.T_om + (chi * C) * (vG @ plant.H_om)
    chi_eff = chi * (1 + C * (vG @ plant.Z_om))
    X_eff = plant.X_om + chi * C * (vG @ plant.Y_om)
    channels = tuple(
        (name, G @ Tm, xi + (chi * C) * (vG @ Tm)) for name, Tm, xi in plant.loss_channels
    )
    return ClosedLoop(
        G_ctrl=G, H_eff=H_eff, Z_eff=G @ plant.Z_om, Y_eff=G @ plant.Y_om, T_eff=T_eff,
        chi_eff=chi_eff, X_eff=X_eff, loss_channels=channels, v=v, controller=ctrl, plant=plant,
    )


def crossover_frequency(trap, Omega_sql):
    """W_x with W_x^2 = Q^2 W_eff^2 [(W_sql/W_eff)^4 - 1], or None when W_eff >= W_sql."""
    ratio = Omega_sql / trap.Omega_eff
    if ratio <= 1:
        return None
    return trap.Q_eff * trap.Omega_eff * math.sqrt(ratio**4 - 1)
