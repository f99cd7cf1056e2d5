"""Physical constants (CODATA via scipy) and unit conversions."""

from scipy import constants as _c

c = _c.c
eps0 = _c.epsilon_0
kB = _c.k
g = _c.g
TORR = _c.torr  # Pa per Torr

# 29 g/mol air molecule
AIR_MOLECULE_MASS = 4.81e-26
# kinetic diameter of an air molecule, used only for the mean free path
AIR_MOLECULE_DIAMETER = 3.7e-10


def torr_to_pa(p_torr):
    return p_torr * TORR


def kbt(T=300.0):
    return kB * T
