import os

from scipy import constants

EPSILON_0 = constants.epsilon_0
PLANCK = constants.h
HBAR = constants.hbar
ELEMENTARY_CHARGE = constants.e

#: One Debye in C·m
DEBYE = 1e-21 / constants.c

#: Seed for every randomized operation that is not given one explicitly
DEFAULT_SEED = int(os.environ.get("SURFLOSS_SEED", "20230601"))

#: High-resistivity silicon
SUBSTRATE_PERMITTIVITY = float(os.environ.get("SURFLOSS_SUBSTRATE_PERMITTIVITY", "11.45"))

#: Pad-edge band boundary, μm
DEFAULT_X0_UM = 1.0

#: Wiring band half-width, μm
DEFAULT_X0_WIRING_UM = 0.5

UM = 1e-6
NM = 1e-9
