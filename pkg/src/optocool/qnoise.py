"""Quantum-noise spectra and their factorization into rotation, dephasing, gain and loss.

PSDs are double-sided per unit angular frequency (m^2 s for motion); the
vacuum level of a two-photon quadrature is ``hbar omega0 / 2``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR
from .twophoton import E_P, E_Q, ScalarResponse

__all__ = [
    "MotionMetrics",
    "QuantumBudget",
    "MetricsError",
    "xi_components",
    "m_components",
    "motion_metrics",
    "measurement_metrics",
    "metrics_from_components",
    "effective_dephasing",
    "quantum_psd_direct",
    "quantum_psd_factored",
    "decompose_quantum_budget",
    "closed_form_mirror_metrics",
    "PHI_RMS_MAX",
]

PHI_RMS_MAX = 0.3


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class MotionMetrics:
    """Factorization parameters; all fields are real ScalarResponses.

    ``loss_ports`` maps each vacuum port to its |xi_mu|^2 contribution to
    ``lossGamma``. Used for both motion and measurement.
    """

    theta: ScalarResponse
    Xi: ScalarResponse
    Xi_prime: ScalarResponse
    etaGamma: ScalarResponse
    lossGamma: ScalarResponse
    omega0: float = None
    loss_ports: dict = field(default_factory=dict)
    target: str = "motion"

    @property
    def grid(self):
        return self.theta.grid


MeasurementMetrics = MotionMetrics


@dataclass(frozen=True)
class QuantumBudget:
    """Named nonnegative PSD traces with their sum in ``total``."""

    traces: dict
    total: ScalarResponse

    def __getitem__(self, name):
        return self.traces[name]


def xi_components(loop):
    """xi_q = T_eff^dag e_q and xi_p = T_eff^dag e_p."""
    return loop.T_eff @ E_Q, loop.T_eff @ E_P


def m_components(loop):
    """m_q = v^dag H_eff e_q and m_p = v^dag H_eff e_p."""
    W = loop.v @ loop.H_eff
    return W @ E_Q, W @ E_P


def _theta(xq, xp):
    """Half the two-argument angle of (xp + i xq)/(xp - i xq), continuous along the grid.

    The branch is fixed so the value at the highest grid frequency lies in
    (-pi/2, pi/2].
    """
    ratio = (xp + 1j * xq) * np.conj(xp - 1j * xq)
    two = np.unwrap(np.angle(ratio))
    k = np.round((two[-1] - np.angle(np.exp(1j * two[-1]))) / (2 * np.pi))
    two = two - 2 * np.pi * k
    return two / 2


def _xi(xq, xp):
    aq, ap = np.abs(xq) ** 2, np.abs(xp) ** 2
    num = (ap - aq) ** 2 + 4 * np.real(xq * np.conj(xp)) ** 2
    val = 0.5 - np.sqrt(num / (4 * (ap + aq) ** 2))
    # rounding can leave |val| at the 1e-17 level outside [0, 1/2]
    return np.clip(val, 0.0, 0.5)


def effective_dephasing(Xi, phi_rms):
    """Xi' = Xi + phi_rms^2 - 2 Xi phi_rms^2 (small-angle phase noise)."""
    if not 0 <= phi_rms <= PHI_RMS_MAX:
        raise ValueError(f"phi_rms must lie in [0, {PHI_RMS_MAX}] rad, got {phi_rms!r}")
    if isinstance(Xi, ScalarResponse):
        v = Xi.real
        return ScalarResponse(v + phi_rms**2 - 2 * v * phi_rms**2, Xi.grid)
    return Xi + phi_rms**2 - 2 * Xi * phi_rms**2


def metrics_from_components(xq, xp, loss_components=(), phi_rms=0.0, omega0=None, target="motion"):
    """Build metrics from the two quadrature components.

    ``loss_components`` is a sequence of ``(name, dual)`` pairs or bare duals
    (each a 1x2 response whose norm^2 is one loss port's contribution).
    """
    grid = xq.grid if xq.grid is not None else xp.grid
    q, p = np.atleast_1d(xq.values), np.atleast_1d(xp.values)
    q, p = np.broadcast_arrays(q, p)
    norm = np.abs(q) ** 2 + np.abs(p) ** 2
    if np.any(norm == 0):
        idx = int(np.argmax(norm == 0))
        where = f" at omega = {grid.omega[idx]:.6g} rad/s" if grid is not None else ""
        raise MetricsError(f"metrics undefined: both quadrature components vanish{where}")
    theta = _theta(q, p)
    Xi = _xi(q, p)
    ports = {}
    lossG = np.zeros_like(norm)
    for i, item in enumerate(loss_components):
        name, w = item if isinstance(item, tuple) else (f"loss{i}", item)
        n2 = np.broadcast_to(w.norm2().real, norm.shape)
        ports[name] = ScalarResponse(n2, grid)
        lossG = lossG + n2
    Xi_r = ScalarResponse(Xi, grid)
    return MotionMetrics(
        theta=ScalarResponse(theta, grid), Xi=Xi_r,
        Xi_prime=effective_dephasing(Xi_r, phi_rms),
        etaGamma=ScalarResponse(norm, grid), lossGamma=ScalarResponse(lossG, grid),
        omega0=omega0, loss_ports=ports, target=target,
    )


def motion_metrics(loop, phi_rms=0.0):
    xq, xp = xi_components(loop)
    losses = [(name, xi) for name, _, xi in loop.loss_channels]
    return metrics_from_components(xq, xp, losses, phi_rms, loop.plant.omega0, "motion")


def measurement_metrics(loop, phi_rms=0.0):
    mq, mp = m_components(loop)
    losses = [(name, loop.v @ Tm) for name, Tm, _ in loop.loss_channels]
    return metrics_from_components(mq, mp, losses, phi_rms, loop.plant.omega0, "measurement")


def _vacuum(omega0):
    if omega0 is None:
        raise ValueError("metrics carry no carrier frequency omega0")
    return HBAR * omega0 / 2


def quantum_psd_direct(loop, sqz, target="motion"):
    """(hbar omega0/2) [ |W R(phi) S(r)|^2 + sum_mu |W_mu|^2 ].

    Residual phase noise is not represented here.
    """
    if target == "motion":
        W = loop.T_eff
        losses = [xi for _, _, xi in loop.loss_channels]
    elif target == "measurement":
        W = loop.v @ loop.H_eff
        losses = [loop.v @ Tm for _, Tm, _ in loop.loss_channels]
    else:
        raise ValueError(f"unknown target {target!r}")
    total = (W @ sqz.matrix()).norm2().real
    for w in losses:
        total = total + w.norm2().real
    return ScalarResponse(_vacuum(loop.plant.omega0) * total, loop.grid)


def _squeeze_parts(metrics, sqz):
    r = sqz.r
    Xp = effective_dephasing(metrics.Xi, sqz.phi_rms).real
    c2 = np.cos(sqz.phi + metrics.theta.real) ** 2
    s2 = 1 - c2
    return r, Xp, c2, s2


def quantum_psd_factored(metrics, sqz):
    """(hbar omega0/2) [ etaGamma (S_- cos^2(phi+theta) + S_+ sin^2(phi+theta)) + lossGamma ]."""
    r, Xp, c2, s2 = _squeeze_parts(metrics, sqz)
    S_minus = (1 - Xp) * math.exp(-2 * r) + Xp * math.exp(2 * r)
    S_plus = (1 - Xp) * math.exp(2 * r) + Xp * math.exp(-2 * r)
    Sx = S_minus * c2 + S_plus * s2
    val = _vacuum(metrics.omega0) * (metrics.etaGamma.real * Sx + metrics.lossGamma.real)
    return ScalarResponse(val, metrics.grid)


def decompose_quantum_budget(metrics, sqz):
    """Partition the factored PSD into squeezing, antisqueezing, dephasing and loss traces."""
    r, Xp, c2, s2 = _squeeze_parts(metrics, sqz)
    Xi = metrics.Xi.real
    pre = _vacuum(metrics.omega0)
    eG = metrics.etaGamma.real
    grid = metrics.grid
    injected = pre * eG * (1 - Xp) * math.exp(-2 * r) * c2
    anti = pre * eG * ((1 - Xp) * math.exp(2 * r) + Xp * math.exp(-2 * r)) * s2
    deph = pre * eG * Xp * math.exp(2 * r) * c2
    phase_part = sqz.phi_rms**2 - 2 * Xi * sqz.phi_rms**2
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(Xp > 0, Xi / np.where(Xp > 0, Xp, 1), 0.0)
        frac_ph = np.where(Xp > 0, phase_part / np.where(Xp > 0, Xp, 1), 0.0)
    traces = {
        "injected_squeezing": ScalarResponse(injected, grid),
        "antisqueezing": ScalarResponse(anti, grid),
        "fundamental_dephasing": ScalarResponse(deph * frac, grid),
        "phase_noise_dephasing": ScalarResponse(deph * frac_ph, grid),
    }
    if metrics.loss_ports:
        for name, n2 in metrics.loss_ports.items():
            traces[f"loss_{name}"] = ScalarResponse(pre * n2.real, grid)
    else:
        traces["loss"] = ScalarResponse(pre * metrics.lossGamma.real, grid)
    total = sum(t.real for t in traces.values())
    return QuantumBudget(traces=traces, total=ScalarResponse(total, grid))


def closed_form_mirror_metrics(trap, Omega_sql, grid, k=None, P=None, gain_scale=1.0, omega0=None):
    """Analytic metrics of a velocity-damped lossless mirror.

    ``etaGamma`` is in units of 1/(4 k^2 P) unless ``k`` and ``P`` are given.
    For the RSE interferometer pass the arm power and ``gain_scale = 2 F_s/F_a``.
    """
    w = grid.omega
    We, Q = trap.Omega_eff, trap.Q_eff
    s = (Omega_sql / We) ** 2
    a = (w / (We * Q)) ** 2
    b = s**2 - 1  # signed (W_x/(W_eff Q))^2
    theta = 0.5 * np.arctan2(2 * s, a - b)
    Xi = 0.5 * (1 - np.sqrt((a - b) ** 2 + 4 * (1 + b)) / (2 + a + b))
    unit = 1.0 if (k is None or P is None) else 1 / (4 * k**2 * P)
    eG = gain_scale * unit * (2 + a + b) / ((1 - (w / We) ** 2) ** 2 + a)
    Xi_r = ScalarResponse(np.clip(Xi, 0.0, 0.5), grid)
    return MotionMetrics(
        theta=ScalarResponse(theta, grid), Xi=Xi_r, Xi_prime=Xi_r,
        etaGamma=ScalarResponse(eG, grid), lossGamma=ScalarResponse(np.zeros_like(w), grid),
        omega0=omega0,
    )
