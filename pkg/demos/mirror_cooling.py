"""Cold-damp a lossless suspended mirror and read off its occupation.

Sweeps the trap quality factor at a fixed trap frequency and prints the
band occupation with and without 6 dB of optimally rotated squeezing.
"""

import math

from optocool.constants import C
from optocool.feedback import TrapSpec
from optocool.optimize import CoolingSystem, evaluate_point, optimize_point
from optocool.plants import MirrorParams

k = 2 * math.pi / 1064e-9
W_sql = 2 * math.pi * 65.0
mirror = MirrorParams(M=10.0, P=10.0 * C * W_sql**2 / (8 * k), k=k)
system = CoolingSystem("mirror", mirror)

print(f"mirror: M = {mirror.M} kg, P = {mirror.P / 1e3:.1f} kW, f_sql = 65 Hz")
print(f"{'Q':>5} {'n (vacuum)':>11} {'n (opt)':>9} {'phi deg':>8} {'r dB':>6}")
for Q in (0.8, 1.0, 1.2, 1.5, 2.0, 3.0):
    trap = TrapSpec.from_hz(37.0, Q)
    vac = evaluate_point(system, trap, 0.0, 0.0).n_bar
    opt = optimize_point(system, trap)
    print(f"{Q:5.1f} {vac:11.4f} {opt.n_bar:9.4f} {math.degrees(opt.phi):8.2f} {opt.r_db:6.2f}")
