"""Tunneling times for 1D barriers and spherical wells, and MIM junction I-V fitting.

Internal units are eV, Angstrom and femtosecond throughout; see
:mod:`tunnel_chrono.constants`.
"""

from tunnel_chrono.constants import HBAR, MASS
from tunnel_chrono.potential import PotentialProfile, discretize, rectangular, shift_barrier
from tunnel_chrono.scattering1d import ScatteringSolution, density_integral, incident_flux, solve
from tunnel_chrono.times1d import (
    TimeSuite,
    buettiker_landauer_time,
    dwell_time,
    hartman_sweep,
    larmor_time_y,
    phase_time,
    pollak_miller_time,
    self_interference_time,
    time_suite,
)

__version__ = "0.1.0"

__all__ = [
    "HBAR",
    "MASS",
    "PotentialProfile",
    "ScatteringSolution",
    "TimeSuite",
    "buettiker_landauer_time",
    "density_integral",
    "discretize",
    "dwell_time",
    "hartman_sweep",
    "incident_flux",
    "larmor_time_y",
    "phase_time",
    "pollak_miller_time",
    "rectangular",
    "self_interference_time",
    "shift_barrier",
    "solve",
    "time_suite",
]
