"""Tunneling-time definitions for a 1D barrier, in femtoseconds.

All six times are stationary-state quantities built from the scattering
amplitudes of :mod:`tunnel_chrono.scattering1d`:

=====================  ==========================================
phase (Wigner)         hbar d(arg t)/dE
dwell                  int |psi|^2 dx / (hbar k / m)
self-interference      -hbar (Im r / k) dk/dE
Buettiker-Landauer     -hbar d ln|t| / dV
Pollak-Miller          +hbar d ln|t| / dE
Larmor (y component)   -hbar d(arg t) / dV
=====================  ==========================================

``d/dV`` is a uniform shift of every barrier segment with the lead levels
held fixed. For equal lead levels and a left-right symmetric barrier,
phase = dwell + self-interference and Larmor = dwell.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass
from typing import NamedTuple, Sequence

from tunnel_chrono import numerics
from tunnel_chrono.constants import FS_TO_S, HBAR, MASS
from tunnel_chrono.errors import NumericalError, PhaseUnwrapError, ValidationError
from tunnel_chrono.potential import PotentialProfile, rectangular, shift_barrier
from tunnel_chrono.scattering1d import density_integral, incident_flux, solve

IDENTITY_RTOL = 1e-5
IDENTITY_FLOOR = 0.01  # fs


def energy_step(E: float) -> float:
    return 1e-4 * max(E, 0.1)


def potential_step(p: PotentialProfile) -> float:
    return 1e-4 * max(max(abs(h) for _, h in p.segments), 0.1)


def _wrap(angle):
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def _unwrapped(phase_at, x0):
    """Phase function continuous around ``x0`` for use inside a small stencil."""
    ref = phase_at(x0)

    def f(x):
        d = _wrap(phase_at(x) - ref)
        if abs(d) > 0.5 * math.pi:
            raise PhaseUnwrapError(f"transmission phase jumps by {d:.3f} rad across the stencil at {x0}")
        return ref + d

    return f


def dwell_time(p: PotentialProfile, E: float) -> float:
    sol = solve(p, E)
    return density_integral(sol, p) / incident_flux(sol)


def phase_time(p: PotentialProfile, E: float) -> float:
    """hbar d(arg t)/dE with ``t`` referenced across the barrier (x1 to x2)."""
    f = _unwrapped(lambda e: solve(p, e).arg_t, E)
    return HBAR * numerics.derivative(f, E, energy_step(E))


def self_interference_time(p: PotentialProfile, E: float) -> float:
    """Interference term -hbar (Im r / k) dk/dE, with dk/dE = m / (hbar^2 k)."""
    if p.left_level != p.right_level:
        raise ValidationError("self-interference time is defined for equal lead levels only")
    sol = solve(p, E)
    k = sol.k_left
    return -MASS * sol.r.imag / (HBAR * k * k)


def buettiker_landauer_time(p: PotentialProfile, E: float) -> float:
    """-hbar d ln|t| / dV, |t| being the amplitude modulus."""
    dv = potential_step(p)
    slope = numerics.derivative(lambda v: solve(shift_barrier(p, v), E).log_abs_t, 0.0, dv)
    return -HBAR * slope


def pollak_miller_time(p: PotentialProfile, E: float) -> float:
    """hbar d ln|t| / dE."""
    return HBAR * numerics.derivative(lambda e: solve(p, e).log_abs_t, E, energy_step(E))


def larmor_time_y(p: PotentialProfile, E: float) -> float:
    """Weak-field spin-precession time, -hbar d(arg t)/dV."""
    f = _unwrapped(lambda v: solve(shift_barrier(p, v), E).arg_t, 0.0)
    return -HBAR * numerics.derivative(f, 0.0, potential_step(p))


@dataclass(frozen=True)
class TimeSuite:
    """All six times at one energy; times in fs, energy in eV."""

    energy: float
    tau_phase: float
    tau_dwell: float
    tau_interference: float
    tau_bl: float
    tau_pm: float
    tau_larmor_y: float

    @property
    def identity_residual(self) -> float:
        """|tau_phase - tau_dwell - tau_interference| relative to max(|tau_phase|, 0.01 fs)."""
        gap = self.tau_phase - self.tau_dwell - self.tau_interference
        return abs(gap) / max(abs(self.tau_phase), IDENTITY_FLOOR)


def time_suite(p: PotentialProfile, E: float, verify: bool = False) -> TimeSuite:
    """Compute every time at ``E``.

    With ``verify`` the phase = dwell + interference identity is checked and
    a :class:`NumericalError` raised if it fails; only meaningful for
    symmetric barriers.
    """
    suite = TimeSuite(
        energy=float(E),
        tau_phase=phase_time(p, E),
        tau_dwell=dwell_time(p, E),
        tau_interference=self_interference_time(p, E),
        tau_bl=buettiker_landauer_time(p, E),
        tau_pm=pollak_miller_time(p, E),
        tau_larmor_y=larmor_time_y(p, E),
    )
    if verify and suite.identity_residual > IDENTITY_RTOL:
        raise NumericalError(
            f"phase/dwell identity violated at E={E}: relative residual {suite.identity_residual:.2e}"
        )
    return suite


def _suite_task(args):
    return time_suite(*args)


def worker_count() -> int:
    raw = os.environ.get("TUNNEL_CHRONO_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"TUNNEL_CHRONO_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError("TUNNEL_CHRONO_THREADS must be >= 1")
    return n


def sweep(p: PotentialProfile, energies: Sequence[float], workers: int | None = None) -> list[TimeSuite]:
    """Time suites on an energy grid, in grid order whatever the worker count."""
    workers = worker_count() if workers is None else workers
    tasks = [(p, float(e)) for e in energies]
    if workers <= 1 or len(tasks) < 2:
        return [_suite_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_suite_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


SWEEP_HEADER = (
    "energy_ev",
    "tau_phase_fs",
    "tau_dwell_fs",
    "tau_interference_fs",
    "tau_bl_fs",
    "tau_pm_fs",
    "tau_larmor_fs",
)


def format_sweep_csv(suites: Sequence[TimeSuite]) -> str:
    lines = [",".join(SWEEP_HEADER)]
    for s in suites:
        lines.append(",".join(f"{v:.12g}" for v in astuple(s)))
    return "\n".join(lines) + "\n"


def parse_sweep_csv(lines, source: str = "<sweep>") -> list[TimeSuite]:
    reader = csv.reader(line for line in lines if line.strip() and not line.lstrip().startswith("#"))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SWEEP_HEADER:
        raise ValidationError(f"{source}: expected header {','.join(SWEEP_HEADER)}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(SWEEP_HEADER):
            raise ValidationError(f"{source}:{lineno}: expected {len(SWEEP_HEADER)} columns")
        try:
            out.append(TimeSuite(*(float(v) for v in row)))
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: malformed number") from None
    return out


class HartmanRow(NamedTuple):
    width: float
    tau_phase: float
    tau_dwell: float


def hartman_sweep(V0: float, E: float, widths: Sequence[float]) -> list[HartmanRow]:
    """Phase and dwell times of a square barrier versus its width.

    In the opaque regime the phase time stops growing with width (Hartman
    saturation) while the dwell time settles at hbar/V0 for E = V0/2.
    """
    if not 0 < E < V0:
        raise ValidationError(f"need 0 < E < V0, got E={E}, V0={V0}")
    rows = []
    for w in widths:
        p = rectangular(V0, w)
        rows.append(HartmanRow(float(w), phase_time(p, E), dwell_time(p, E)))
    return rows



HARTMAN_HEADER = ("width_angstrom", "tau_phase_fs", "tau_dwell_fs", "tau_phase_s", "tau_dwell_s")


def format_hartman_csv(rows: Sequence[HartmanRow]) -> str:
    lines = [",".join(HARTMAN_HEADER)]
    for r in rows:
        vals = (r.width, r.tau_phase, r.tau_dwell, r.tau_phase * FS_TO_S, r.tau_dwell * FS_TO_S)
        lines.append(",".join(f"{v:.12g}" for v in vals))
    return "\n".join(lines) + "\n"


def parse_hartman_csv(lines, source: str = "<hartman>") -> list[HartmanRow]:
    reader = csv.reader(line for line in lines if line.strip() and not line.lstrip().startswith("#"))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != HARTMAN_HEADER:
        raise ValidationError(f"{source}: expected header {','.join(HARTMAN_HEADER)}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(HARTMAN_HEADER):
            raise ValidationError(f"{source}:{lineno}: expected {len(HARTMAN_HEADER)} columns")
        try:
            out.append(HartmanRow(*(float(v) for v in row[:3])))
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: malformed number") from None
    return out
