"""Coupling of an auxiliary loop into the differential loop, and feedforward design.

Each loop has plant ``P``, controller ``C`` and susceptibility ``chi``, with
``G = 1/(1 - C P)`` and ``H = C P G``. The auxiliary error signal drives the
differential loop as a displacement through ``Phi``. Auxiliary motion couples
into the differential sensor (``kappa_s``) and directly into its motion
(``kappa_d``).

Transfer coefficients are reported against the noise inputs
``F_main``, ``n_main/P_main``, ``chi_aux F_aux`` and ``n_aux/P_aux``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .budget import evaluate
from .twophoton import ScalarResponse, SingularityError

__all__ = [
    "LoopParams",
    "AuxLoopParams",
    "CoupledMotion",
    "FeedforwardDesign",
    "TARGETS",
    "loop_factors",
    "coupled_motion",
    "design_feedforward",
    "michelson_coupling",
    "noise_traces",
]

TARGETS = ("cancel_in_error", "cancel_in_motion", "cancel_sensing_path", "cancel_displacement_path")
INPUTS = ("F_main", "n_main", "chiF_aux", "n_aux")


@dataclass(frozen=True)
class LoopParams:
    chi: ScalarResponse
    P: ScalarResponse
    C: ScalarResponse


@dataclass(frozen=True)
class AuxLoopParams:
    """Auxiliary loop, its couplings, and optional noise curves (force, sensing)."""

    chi_aux: ScalarResponse
    P_aux: ScalarResponse
    C_aux: ScalarResponse
    kappa_s: ScalarResponse
    kappa_d: ScalarResponse = None
    F_aux: object = None
    n_aux: object = None

    def kd(self):
        if self.kappa_d is None:
            return ScalarResponse(np.zeros(len(self.chi_aux.grid)), self.chi_aux.grid)
        return self.kappa_d


@dataclass(frozen=True)
class CoupledMotion:
    """Per-input transfer coefficients into x_main and e_main/P_main."""

    x: dict
    e: dict


@dataclass(frozen=True)
class FeedforwardDesign:
    Phi: ScalarResponse
    target: str
    residual_x: dict
    residual_e: dict


def loop_factors(C, P):
    """G = 1/(1 - C P) and H = C P G."""
    CP = C * P
    one_minus = 1 - CP
    try:
        G = one_minus.inv()
    except SingularityError as e:
        raise SingularityError("loop 1 - C P is singular", e.omega) from None
    return G, CP * G


def coupled_motion(main, aux, Phi):
    """Transfer coefficients of every input into x_main and e_main/P_main.

    x_main = G [chi F + ...] with the auxiliary part G_m [Phi e_a + (kd + C_m ks) x_a];
    e_main/P_main carries G_m [Phi e_a + (kd + ks/P_m) x_a].
    """
    Gm, Hm = loop_factors(main.C, main.P)
    Ga, Ha = loop_factors(aux.C_aux, aux.P_aux)
    ks, kd = aux.kappa_s, aux.kd()
    # e_a = P_a G_a (chi_a F_a + n_a/P_a); x_a = G_a chi_a F_a + H_a n_a/P_a
    ff = Phi * aux.P_aux * Ga
    to_x = kd + main.C * ks
    to_e = kd + ks / main.P
    x = {
        "F_main": Gm * main.chi,
        "n_main": Hm,
        "chiF_aux": Gm * (ff + to_x * Ga),
        "n_aux": Gm * (ff + to_x * Ha),
    }
    e = {
        "F_main": Gm * main.chi,
        "n_main": Gm,
        "chiF_aux": Gm * (ff + to_e * Ga),
        "n_aux": Gm * (ff + to_e * Ha),
    }
    return CoupledMotion(x, e)


def design_feedforward(main, aux, target):
    """Choose Phi to null one auxiliary path.

    ``cancel_sensing_path`` (alias ``cancel_in_motion``): n_aux into x_main.
    ``cancel_displacement_path``: chi_aux F_aux into x_main.
    ``cancel_in_error``: n_aux into e_main/P_main.
    """
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {TARGETS}")
    Ga, Ha = loop_factors(aux.C_aux, aux.P_aux)
    ks, kd = aux.kappa_s, aux.kd()
    denom = aux.P_aux * Ga
    try:
        inv = denom.inv()
    except SingularityError as e:
        raise SingularityError("feedforward denominator P_aux G_aux vanishes", e.omega) from None
    if target in ("cancel_sensing_path", "cancel_in_motion"):
        Phi = -(kd + main.C * ks) * Ha * inv
    elif target == "cancel_displacement_path":
        Phi = -(kd + main.C * ks) * Ga * inv
    else:
        Phi = -(kd + ks / main.P) * Ha * inv
    cm = coupled_motion(main, aux, Phi)
    keys = ("chiF_aux", "n_aux")
    return FeedforwardDesign(Phi, target, {k: cm.x[k] for k in keys}, {k: cm.e[k] for k in keys})


def michelson_coupling(F_a):
    """|kappa_s / P_main| ~ pi / (2 F_a) for the Michelson degree of freedom."""
    return math.pi / (2 * F_a)


def noise_traces(coeffs, aux, grid):
    """PSD traces |coef|^2 S for the auxiliary curves attached to ``aux``.

    The force curve is multiplied by |chi_aux|^2 and the sensing curve is
    divided by |P_aux|^2 to match the coefficient inputs.
    """
    out = {}
    if aux.F_aux is not None:
        S = evaluate(aux.F_aux, grid).real * np.abs(aux.chi_aux.values) ** 2
        out["chiF_aux"] = ScalarResponse(np.abs(coeffs["chiF_aux"].values) ** 2 * S, grid)
    if aux.n_aux is not None:
        S = evaluate(aux.n_aux, grid).real / np.abs(aux.P_aux.values) ** 2
        out["n_aux"] = ScalarResponse(np.abs(coeffs["n_aux"].values) ** 2 * S, grid)
    return out
