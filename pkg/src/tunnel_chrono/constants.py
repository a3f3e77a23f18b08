"""Physical constants in the package unit system (eV, Angstrom, fs, K).

CODATA 2018 exact/recommended values; derived quantities are computed here
rather than hard-coded so the arithmetic stays visible.
"""

import math

#: reduced Planck constant [eV fs]
HBAR = 0.6582119569
#: speed of light [Angstrom / fs]
SPEED_OF_LIGHT = 2997.92458
#: electron rest energy [eV]
ELECTRON_REST_ENERGY = 510998.95
#: electron mass [eV fs^2 / Angstrom^2]
MASS = ELECTRON_REST_ENERGY / SPEED_OF_LIGHT**2
#: hbar^2 / (2 m) [eV Angstrom^2]
HBAR2_OVER_2M = HBAR**2 / (2.0 * MASS)

#: Boltzmann constant [eV / K]
K_BOLTZMANN = 8.617333262e-5
#: elementary charge [C]
ELEMENTARY_CHARGE = 1.602176634e-19
#: Planck constant [J s]
PLANCK_SI = 6.62607015e-34
#: reduced Planck constant [eV s]
HBAR_EV_S = HBAR * 1e-15

FS_TO_S = 1e-15


def wavenumber(kinetic_energy):
    """sqrt(2 m T) / hbar in 1/Angstrom for kinetic energy T in eV (T >= 0)."""
    return math.sqrt(kinetic_energy / HBAR2_OVER_2M)
