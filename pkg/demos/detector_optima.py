"""Quantum-limited cooling optimum for each built-in detector preset.

Runs the (f_eff, Q) search on a coarse grid around the published trap and
compares with the published squeeze angle and occupation. The published
occupation includes classical noise, which pulls the optimum to higher trap
frequency; the quantum-only value at the published trap is shown as well.
"""

import math
import sys

from optocool.feedback import TrapSpec
from optocool.optimize import CoolingSystem, SearchSpace, optimize_point, search
from optocool.presets import PRESETS, preset, preset_params

names = sys.argv[1:] or sorted(PRESETS)
print(f"{'preset':>11} {'f_eff':>6} {'Q':>5} {'phi':>7} {'r dB':>6} {'n':>7} | {'phi pub':>7} {'n@pub':>7} {'n pub':>5}")
for name in names:
    row = preset(name)
    f0, Q0 = row["f_eff"], row["Q_eff"]
    space = SearchSpace(2 * math.pi * 0.7 * f0, 2 * math.pi * 1.3 * f0, 7, max(0.6, Q0 - 0.6), Q0 + 0.6, 7)
    system = CoolingSystem("rse", preset_params(name))
    opt = search(system, space)
    at_pub = optimize_point(system, TrapSpec.from_hz(f0, Q0)).n_bar
    f = opt.trap.Omega_eff / (2 * math.pi)
    print(f"{name:>11} {f:6.1f} {opt.trap.Q_eff:5.2f} {math.degrees(opt.phi):7.1f} {opt.r_db:6.2f} {opt.n_bar:7.4f}"
          f" | {row['phi_deg']:7.1f} {at_pub:7.4f} {row['n_bar']:5.1f}")
