import math
import os

import numpy as np

from optocool.constants import C, HBAR
from optocool.feedback import TrapSpec, close_loop, controller_for
from optocool.plants import MirrorParams, mirror_plant, sql_frequency

DATA = os.path.join(os.path.dirname(__file__), "data")
K1064 = 2 * math.pi / 1064e-9


def mirror_for_sql(f_sql, M=10.0, k=K1064):
    """Lossless mirror whose SQL frequency is ``f_sql`` Hz."""
    W = 2 * math.pi * f_sql
    P = M * C * W**2 / (8 * k)
    return MirrorParams(M=M, P=P, k=k)


def rel(a, b):
    """Largest pointwise relative error of ``a`` against reference ``b``."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def damped_mirror(f_sql, f_eff, Q, grid, losses=None):
    p = mirror_for_sql(f_sql)
    plant = mirror_plant(p, grid, losses)
    return p, close_loop(plant, controller_for(plant, TrapSpec.from_hz(f_eff, Q)))


def D(w, trap):
    x = w / trap.Omega_eff
    return 1 - x**2 + 1j * x / trap.Q_eff


def eq_lossless_psd(p, trap, r, w):
    """Closed-form true-motion PSD of the lossless damped mirror at phi = 0."""
    Ws, We, Q = sql_frequency(p), trap.Omega_eff, trap.Q_eff
    num = math.exp(2 * r) * (Ws / We) ** 4 + math.exp(-2 * r) * (1 + (w / (We * Q)) ** 2)
    return HBAR / (p.M * Ws**2) * num / np.abs(D(w, trap)) ** 2
