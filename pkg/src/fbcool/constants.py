"""CODATA 2018 physical constants (SI), quoted to 9 significant digits."""

HBAR = 1.05457182e-34  # J s
KB = 1.38064900e-23  # J/K
EPS0 = 8.85418781e-12  # F/m
C = 2.99792458e8  # m/s
AMU = 1.66053907e-27  # kg

CONSTANTS = {
    "hbar": HBAR,
    "k_B": KB,
    "epsilon_0": EPS0,
    "c": C,
    "amu": AMU,
}
