"""Physical constants (CODATA 2018 exact or defined values)."""

HBAR = 1.054571817e-34  # J s
C = 2.99792458e8  # m / s
KB = 1.380649e-23  # J / K
