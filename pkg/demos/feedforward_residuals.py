"""Residual auxiliary coupling after each feedforward choice.

Builds toy main and auxiliary loops with a Michelson-like sensing coupling
and prints how much auxiliary sensing noise reaches the main motion and
error signal for each target.
"""

import numpy as np

from optocool.feedforward import TARGETS, AuxLoopParams, LoopParams, coupled_motion, design_feedforward, michelson_coupling
from optocool.twophoton import ScalarResponse, make_grid

grid = make_grid(5.0, 500.0, 5)
w = grid.omega


def sr(v):
    return ScalarResponse(np.broadcast_to(np.asarray(v, dtype=complex), w.shape).copy(), grid)


main = LoopParams(chi=sr(-1 / (40 * w**2)), P=sr(2e9), C=sr(-3e-9 * (1 + 1j * w / 200) / (1 + 1j * w / 2000)))
aux = AuxLoopParams(
    chi_aux=sr(-1 / (40 * w**2)), P_aux=sr(5e8),
    C_aux=sr(-8e-9 * (1 + 1j * w / 100) / (1 + 1j * w / 1000)),
    kappa_s=sr(michelson_coupling(450) * 2e9),
)

print(f"|kappa_s / P| = pi / (2 F_a) = {michelson_coupling(450):.4e} for F_a = 450")
none = coupled_motion(main, aux, sr(0.0))
print("\n|n_aux -> x_main| per frequency (Hz):", " ".join(f"{f:8.1f}" for f in grid.f))
print(f"{'no feedforward':>26}:", " ".join(f"{v:8.2e}" for v in np.abs(none.x["n_aux"].values)))
for target in TARGETS:
    d = design_feedforward(main, aux, target)
    print(f"{target:>26}:", " ".join(f"{v:8.2e}" for v in np.abs(d.residual_x["n_aux"].values)))
