"""Published detector configurations (tuned RSE, zeta = 0).

Each entry holds the plant parameters and the reported cooling optimum:
trap frequency and Q, squeeze angle and level, occupation, temperature, SQL
and crossover frequencies (Hz). Arm lengths: 4 km for LIGO-scale, 40 km for
Cosmic Explorer-scale instruments.
"""

import math

from .plants import RSEParams

__all__ = ["PRESETS", "preset_params", "preset"]


def _k(wavelength):
    return 2 * math.pi / wavelength


PRESETS = {
    "aplus": dict(
        M=40.0, P_a=0.8e6, F_a=450, F_s=18, wavelength=1064e-9, L_a=4e3,
        f_eff=37.0, Q_eff=1.2, phi_deg=-70.0, r_db=6.0, n_bar=0.3, T_nK=1.3, f_sql=65.0, f_x=117.0,
    ),
    "voyager": dict(
        M=200.0, P_a=3e6, F_a=3100, F_s=140, wavelength=2e-6, L_a=4e3,
        f_eff=32.0, Q_eff=1.4, phi_deg=-49.0, r_db=5.0, n_bar=0.2, T_nK=1.0, f_sql=37.0, f_x=41.0,
    ),
    "ce": dict(
        M=320.0, P_a=1.5e6, F_a=450, F_s=310, wavelength=1064e-9, L_a=40e3,
        f_eff=23.0, Q_eff=1.8, phi_deg=-4.0, r_db=13.0, n_bar=0.7, T_nK=1.3, f_sql=7.0, f_x=None,
    ),
    "ce_voyager": dict(
        M=320.0, P_a=12e6, F_a=1500, F_s=1000, wavelength=2e-6, L_a=40e3,
        f_eff=28.0, Q_eff=1.5, phi_deg=-11.0, r_db=9.0, n_bar=0.2, T_nK=0.9, f_sql=15.0, f_x=None,
    ),
}


def preset(name):
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def preset_params(name, L=0.0):
    p = preset(name)
    return RSEParams(M=p["M"], P_a=p["P_a"], L_a=p["L_a"], F_a=p["F_a"], F_s=p["F_s"],
                     k=_k(p["wavelength"]), L=L)
