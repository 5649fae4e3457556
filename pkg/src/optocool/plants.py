"""Open-loop optomechanical plants: a single mirror and the tuned RSE interferometer.

Carrier conventions: the field incident on the mirror front is ``sqrt(P) e_q``,
the reflected carrier is ``-r sqrt(P) e_q``. Motion writes into the phase
quadrature through ``z = 2 k r sqrt(P) e_p`` and radiation pressure reads the
amplitude quadrature through ``f^dag = (2/c) sqrt(P) e_q^dag``.

Loss ports follow a beamsplitter convention: a port with amplitude ``eps``
attenuates the through path by ``sqrt(1 - eps**2)`` and injects vacuum with
amplitude ``eps``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C
from .sfg import SignalFlowGraph
from .twophoton import (
    E_P,
    E_Q,
    QuadratureMatrix,
    ScalarResponse,
    identity,
    make_rotation,
    make_squeezer,
    db_to_squeeze,
    zeros,
)

__all__ = [
    "MirrorParams",
    "RSEParams",
    "LossBudget",
    "SqueezerConfig",
    "PlantResponse",
    "free_mass_susceptibility",
    "optomech_coupling",
    "sql_frequency",
    "mirror_plant",
    "mirror_graph",
    "rse_pole",
    "rse_sidebands",
    "rse_plant",
    "full_ifo_graph",
    "reduce_ifo_graph",
]


@dataclass(frozen=True)
class MirrorParams:
    """Single suspended mirror driven from the front.

    ``R`` is the power reflectivity and ``L`` the power loss, so
    ``t**2 = 1 - R - L``. ``M_eff`` overrides the mass in the susceptibility.
    """

    M: float
    P: float
    k: float
    R: float = 1.0
    L: float = 0.0
    M_eff: float = None

    def __post_init__(self):
        for name in ("M", "P", "k"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if not 0 <= self.L < 1:
            raise ValueError(f"L must lie in [0, 1), got {self.L!r}")
        if not 0 <= self.R <= 1 - self.L:
            raise ValueError(f"R must lie in [0, 1 - L], got {self.R!r}")
        if self.M_eff is not None and not self.M_eff > 0:
            raise ValueError("M_eff must be > 0")

    @property
    def r(self):
        return math.sqrt(self.R)

    @property
    def t(self):
        return math.sqrt(max(1 - self.R - self.L, 0.0))

    @property
    def omega0(self):
        return C * self.k

    @property
    def mass(self):
        return self.M if self.M_eff is None else self.M_eff


@dataclass(frozen=True)
class RSEParams:
    """Tuned dual-recycled Fabry-Perot Michelson, reduced to one arm.

    ``L`` is the end-mirror power loss; the end mirror has ``r_e = sqrt(1 - L)``
    and no transmission.
    """

    M: float
    P_a: float
    L_a: float
    F_a: float
    F_s: float
    k: float
    L: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        for name in ("M", "P_a", "L_a", "k"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        for name in ("F_a", "F_s"):
            v = getattr(self, name)
            if not v > math.pi:
                # 1 - r = pi/F must leave r > 0
                raise ValueError(f"{name} must exceed pi, got {v!r}")
        if not 0 <= self.L < 1:
            raise ValueError(f"L must lie in [0, 1), got {self.L!r}")
        if self.detuning != 0:
            raise ValueError("only the tuned configuration (detuning = 0) is supported")

    @property
    def r_i(self):
        return 1 - math.pi / self.F_a

    @property
    def r_s(self):
        return 1 - math.pi / self.F_s

    @property
    def r_e(self):
        return math.sqrt(1 - self.L)

    @property
    def R(self):
        return 1 - self.L

    @property
    def omega0(self):
        return C * self.k


@dataclass(frozen=True)
class LossBudget:
    """Vacuum injection amplitudes for the arm, SEC, injection and readout ports."""

    eps_arm: float = 0.0
    eps_sec: float = 0.0
    eps_inj: float = 0.0
    eps_ro: float = 0.0

    def __post_init__(self):
        for name in ("eps_arm", "eps_sec", "eps_inj", "eps_ro"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {v!r}")

    @classmethod
    def from_power(cls, arm=0.0, sec=0.0, inj=0.0, ro=0.0):
        """Build from power losses (eps = sqrt(loss))."""
        return cls(*(math.sqrt(x) for x in (arm, sec, inj, ro)))


@dataclass(frozen=True)
class SqueezerConfig:
    level_db: float = 0.0
    phi: float = 0.0
    phi_rms: float = 0.0

    def __post_init__(self):
        if not self.level_db >= 0:
            raise ValueError("squeeze level must be >= 0 dB")
        if not self.phi_rms >= 0:
            raise ValueError("phi_rms must be >= 0")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")

    @property
    def r(self):
        return db_to_squeeze(self.level_db)

    def matrix(self):
        """R(phi) S(r), the map from vacuum to the injected state."""
        return make_rotation(self.phi) @ make_squeezer(self.r)


@dataclass(frozen=True)
class PlantResponse:
    """Open-loop transfer bundle.

    ``loss_channels`` holds ``(name, T_mu, xi_mu_dag)`` triples giving each
    vacuum port's route to the output field and to the true motion.
    """

    H_om: QuadratureMatrix
    T_om: object  # DualQuadratureVector
    Z_om: object  # QuadratureVector
    Y_om: object
    chi_om: ScalarResponse
    X_om: ScalarResponse
    loss_channels: tuple = ()
    chi0: ScalarResponse = None
    omega0: float = None
    Omega_sql: float = None
    kind: str = "mirror"
    params: object = None
    readout_efficiency: float = 1.0
    extras: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.chi_om.grid


def free_mass_susceptibility(mass, grid):
    return ScalarResponse(-1.0 / (mass * grid.omega**2), grid)


def _chi0(params, grid):
    if isinstance(params, RSEParams):
        return free_mass_susceptibility(params.M / 2, grid)
    return free_mass_susceptibility(params.mass, grid)


def _rse_power(params):
    """Single-mirror equivalent power and mass: P_a F_a/F_s on M/2."""
    return params.P_a * params.F_a / params.F_s, params.M / 2


def optomech_coupling(params, grid):
    """K = 4 k (2R + L) chi0 P / c.

    For the RSE plant the arm power is used; the sideband gain enters
    separately through ``t_rse**2``.
    """
    chi0 = _chi0(params, grid)
    P = params.P_a if isinstance(params, RSEParams) else params.P
    return chi0 * (4 * params.k * (2 * params.R + params.L) * P / C)


def sql_frequency(params):
    """Angular SQL frequency (rad/s)."""
    if isinstance(params, RSEParams):
        P, M = _rse_power(params)
    else:
        P, M = params.P, params.mass
    return math.sqrt(4 * params.k * (2 * params.R + params.L) * P / (C * M))


def _apply_port_losses(H, T, Z, Y, chi0, channels, eps_inj, eps_ro):
    """Fold injection and readout beamsplitters into the plant."""
    if eps_inj:
        a = math.sqrt(1 - eps_inj**2)
        channels = [("injection", eps_inj * H, eps_inj * T)] + list(channels)
        H, T = a * H, a * T
    if eps_ro:
        a = math.sqrt(1 - eps_ro**2)
        grid = chi0.grid
        channels = [(n, a * Tm, xi) for n, Tm, xi in channels]
        channels.append(("readout", eps_ro * identity(2).on(grid), zeros(1, 2, grid)))
        H, Z, Y = a * H, a * Z, a * Y
    return H, T, Z, Y, channels


def mirror_plant(params, grid, losses=None):
    """Closed-form open-loop response of a single mirror.

    The back-surface vacuum is reported as the ``back`` loss channel (it is
    identically zero when ``t = 0``). ``losses`` may add injection and readout
    ports; arm and SEC amplitudes are ignored here.
    """
    chi0 = _chi0(params, grid)
    r, t = params.r, params.t
    sqP = math.sqrt(params.P)
    K = optomech_coupling(params, grid)
    ep_eq = E_P @ E_Q.H
    H = -r * (identity(2) - K * ep_eq)
    T = chi0 * (2 * (2 * params.R + params.L) * sqP / C) * E_Q.H
    z = (2 * params.k * r * sqP) * E_P
    Z = chi0 * z
    Y = z.on(grid)
    f = (2 / C) * sqP * E_Q.H
    xi_b = chi0 * (-2 * r * t) * f
    T_b = t * identity(2).on(grid) + z @ xi_b
    channels = [("back", T_b, xi_b)]
    eps_inj = losses.eps_inj if losses else 0.0
    eps_ro = losses.eps_ro if losses else 0.0
    H, T, Z, Y, channels = _apply_port_losses(H, T, Z, Y, chi0, channels, eps_inj, eps_ro)
    return PlantResponse(
        H_om=H, T_om=T, Z_om=Z, Y_om=Y, chi_om=chi0,
        X_om=ScalarResponse(np.zeros(len(grid)), grid),
        loss_channels=tuple(channels), chi0=chi0, omega0=params.omega0,
        Omega_sql=sql_frequency(params), kind="mirror", params=params,
        readout_efficiency=1 - eps_ro**2,
    )


def mirror_graph(params, grid):
    """Signal-flow graph of a mirror lit from the front.

    Sources: ``a_fi``, ``a_bi`` (fields), ``F_ext`` (force), ``x_sens``
    (sensing displacement). Sinks: ``a_fo`` (reflected field), ``x`` (motion).
    """
    chi0 = _chi0(params, grid)
    r, t = params.r, params.t
    sqP = math.sqrt(params.P)
    z = (2 * params.k * r * sqP) * E_P
    f = (2 / C) * sqP * E_Q.H
    g = SignalFlowGraph()
    for n in ("a_fi", "a_bi"):
        g.add_source(n, 2)
    for n in ("F_ext", "x_sens"):
        g.add_source(n, 1)
    for n in ("fi", "fo", "bi", "bo"):
        g.add_node(n, 2)
    g.add_node("xm", 1)
    g.add_sink("a_fo", 2)
    g.add_sink("x", 1)
    g.add_edge("a_fi", "fi", identity(2))
    g.add_edge("a_bi", "bi", identity(2))
    g.add_edge("fi", "fo", -r)
    g.add_edge("fi", "bo", t)
    g.add_edge("bi", "bo", r)
    g.add_edge("bi", "fo", t)
    # radiation pressure: + from the front nodes, - from the back nodes
    g.add_edge("fi", "xm", chi0 * f)
    g.add_edge("fo", "xm", chi0 * (-r * f))
    g.add_edge("bo", "xm", chi0 * (-t * f))
    g.add_edge("F_ext", "xm", chi0)
    g.add_edge("xm", "fo", z)
    g.add_edge("x_sens", "fo", z)
    g.add_edge("fo", "a_fo", identity(2))
    g.add_edge("xm", "x", 1.0)
    return g


def rse_pole(params):
    """Omega_rse = ((1 + r_s)/(1 - r_s)) c (1 - r_i) / (2 L_a), in rad/s."""
    r_i, r_s = params.r_i, params.r_s
    return (1 + r_s) / (1 - r_s) * C * (1 - r_i) / (2 * params.L_a)


def rse_sidebands(params, grid):
    """Single-pole reflection and transmission of the coupled cavity."""
    x = 1j * grid.omega / rse_pole(params)
    refl = ScalarResponse((1 - x) / (1 + x), grid)
    trans = ScalarResponse(math.sqrt(params.F_a / params.F_s) / (1 + x), grid)
    return refl, trans


def rse_plant(params, losses=None, grid=None):
    """Simplified open-loop response of the tuned RSE interferometer.

    Injection and readout losses are folded in exactly; arm and SEC loss
    channels come from reducing the full graph.
    """
    if grid is None:
        raise ValueError("rse_plant needs a grid")
    losses = losses or LossBudget()
    chi0 = _chi0(params, grid)
    refl, trans = rse_sidebands(params, grid)
    sqP = math.sqrt(params.P_a)
    K = optomech_coupling(params, grid)
    ep_eq = E_P @ E_Q.H
    H = -refl * identity(2) + (params.r_e * K * trans * trans) * ep_eq
    T = chi0 * trans * (math.sqrt(2) * 2 * (2 * params.R + params.L) * sqP / C) * E_Q.H
    Z = chi0 * trans * (2 * params.k * params.r_e * sqP / math.sqrt(2)) * E_P
    Y = Z / chi0
    channels = []
    if losses.eps_arm or losses.eps_sec:
        inner = LossBudget(eps_arm=losses.eps_arm, eps_sec=losses.eps_sec)
        full = reduce_ifo_graph(params, inner, grid)
        channels = [c for c in full.loss_channels if c[0] in ("arm", "sec")]
    H, T, Z, Y, channels = _apply_port_losses(
        H, T, Z, Y, chi0, channels, losses.eps_inj, losses.eps_ro)
    return PlantResponse(
        H_om=H, T_om=T, Z_om=Z, Y_om=Y, chi_om=chi0,
        X_om=ScalarResponse(np.zeros(len(grid)), grid),
        loss_channels=tuple(channels), chi0=chi0, omega0=params.omega0,
        Omega_sql=sql_frequency(params), kind="rse", params=params,
        readout_efficiency=1 - losses.eps_ro**2,
        extras={"Omega_rse": rse_pole(params)},
    )


def _mirror_block(g, prefix, r, t, sign_left=1.0):
    """Four-port mirror: ``in_l -> out_l`` reflects with ``sign_left * r``,
    ``in_r -> out_r`` with ``-sign_left * r``, transmissions ``t``."""
    names = {s: f"{prefix}_{s}" for s in ("in_l", "out_l", "in_r", "out_r")}
    for n in names.values():
        g.add_node(n, 2)
    g.add_edge(names["in_l"], names["out_l"], sign_left * r)
    g.add_edge(names["in_r"], names["out_r"], -sign_left * r)
    g.add_edge(names["in_l"], names["out_r"], t)
    g.add_edge(names["in_r"], names["out_l"], t)
    return names


def full_ifo_graph(params, losses=None, sqz=None, grid=None, optomechanics=True):
    """Three-mirror coupled-cavity graph (signal-extraction mirror, input and end test masses).

    Sources: ``s`` (injected field; or ``a_sqz`` feeding ``s`` through
    ``R(phi) S(r)`` when ``sqz`` is given), ``a_inj``, ``a_sec``, ``a_arm``,
    ``a_ro``, ``F_ext``, ``x_sens``. Sinks: ``out`` (field before homodyne)
    and ``x`` (differential motion).

    The differential mode is one arm whose end mirror has mass M/2; ``x``
    reads it with gain sqrt(2), and ``F_ext``/``x_sens`` enter with 1/sqrt(2).
    The short signal-extraction cavity has a one-way phase of pi/2 so that the
    signal sidebands are extracted (round trip -1).
    """
    if grid is None:
        raise ValueError("full_ifo_graph needs a grid")
    losses = losses or LossBudget()
    chi0 = _chi0(params, grid)
    r_i, r_s, r_e = params.r_i, params.r_s, params.r_e
    t_i, t_s = math.sqrt(1 - r_i**2), math.sqrt(1 - r_s**2)
    sqP = math.sqrt(params.P_a)
    z = (2 * params.k * r_e * sqP) * E_P
    f = (2 / C) * sqP * E_Q.H
    prop = ScalarResponse(np.exp(-1j * grid.omega * params.L_a / C), grid)

    g = SignalFlowGraph()
    if sqz is None:
        g.add_source("s", 2)
    else:
        g.add_source("a_sqz", 2)
        g.add_node("s", 2)
        g.add_edge("a_sqz", "s", sqz.matrix())
    for n in ("a_inj", "a_sec", "a_arm", "a_ro"):
        g.add_source(n, 2)
    g.add_source("F_ext", 1)
    g.add_source("x_sens", 1)
    g.add_sink("out", 2)
    g.add_sink("x", 1)

    sem = _mirror_block(g, "sem", r_s, t_s)
    itm = _mirror_block(g, "itm", r_i, t_i)
    # end mirror: front face only, reflection -r_e, no transmission
    g.add_node("etm_fi", 2)
    g.add_node("etm_fo", 2)
    g.add_node("xm", 1)

    # injection port
    e = losses.eps_inj
    g.add_edge("s", sem["in_l"], math.sqrt(1 - e**2))
    if e:
        g.add_edge("a_inj", sem["in_l"], e)
    # signal-extraction cavity: +1 forward, -1 backward; the SEC loss
    # beamsplitter sits on the backward leg
    e = losses.eps_sec
    g.add_edge(sem["out_r"], itm["in_l"], 1.0)
    g.add_edge(itm["out_l"], sem["in_r"], -math.sqrt(1 - e**2))
    if e:
        g.add_edge("a_sec", sem["in_r"], e)
    # arm
    g.add_edge(itm["out_r"], "etm_fi", prop)
    g.add_edge("etm_fo", itm["in_r"], prop)
    e = losses.eps_arm
    g.add_edge("etm_fi", "etm_fo", -r_e * math.sqrt(1 - e**2))
    if e:
        g.add_edge("a_arm", "etm_fo", e)
    # optomechanics on the end mirror
    if optomechanics:
        g.add_edge("etm_fi", "xm", chi0 * f)
        g.add_edge("etm_fo", "xm", chi0 * (-r_e * f))
        g.add_edge("xm", "etm_fo", z)
    g.add_edge("F_ext", "xm", chi0 / math.sqrt(2))
    g.add_edge("x_sens", "etm_fo", z / math.sqrt(2))
    g.add_edge("xm", "x", math.sqrt(2))
    # readout port
    e = losses.eps_ro
    g.add_edge(sem["out_l"], "out", -math.sqrt(1 - e**2))
    if e:
        g.add_edge("a_ro", "out", e)
    return g


def reduce_ifo_graph(params, losses=None, grid=None, optomechanics=True):
    """Reduce the full graph to a PlantResponse (oracle for ``rse_plant``)."""
    losses = losses or LossBudget()
    g = full_ifo_graph(params, losses, None, grid, optomechanics).reduce()

    def get(src, dst):
        op = g.edges.get((src, dst))
        if op is None:
            op = zeros(g.nodes[dst], g.nodes[src], grid)
        return op.on(grid)

    chi0 = _chi0(params, grid)
    channels = []
    for name, port, eps in (("injection", "a_inj", losses.eps_inj), ("sec", "a_sec", losses.eps_sec),
                            ("arm", "a_arm", losses.eps_arm), ("readout", "a_ro", losses.eps_ro)):
        if eps:
            channels.append((name, get(port, "out"), get(port, "x")))
    return PlantResponse(
        H_om=get("s", "out"), T_om=get("s", "x"), Z_om=get("F_ext", "out"),
        Y_om=get("x_sens", "out"), chi_om=get("F_ext", "x"), X_om=get("x_sens", "x"),
        loss_channels=tuple(channels), chi0=chi0, omega0=params.omega0,
        Omega_sql=sql_frequency(params), kind="rse", params=params,
        readout_efficiency=1 - losses.eps_ro**2,
        extras={"Omega_rse": rse_pole(params)},
    )
