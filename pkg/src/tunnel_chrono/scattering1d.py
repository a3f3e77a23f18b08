"""Stationary scattering on a piecewise-constant 1D potential.

Conventions (left incidence, unit incident amplitude)::

    x < x1:   psi = exp(ik(x - x1)) + r exp(-ik(x - x1))
    x > x2:   psi = t exp(ik'(x - x2))

so ``arg t`` is the phase picked up across the barrier region and ``r`` is
referenced at the barrier entrance.

Inside segment ``j`` (left edge ``x_j``, width ``w``, local ``u = x - x_j``)::

    E > V:   psi = A exp(iqu) + B exp(-iqu)
    E < V:   psi = A exp(kappa (u - w)) + B exp(-kappa u)

The evanescent basis is referenced at the far edge of each exponential so
neither term exceeds its coefficient inside the segment. The solution is
built by propagating (psi, psi') from the right lead to the left one, the
direction in which evanescent solutions grow, with a running log scale so
thick barriers neither overflow nor lose relative accuracy in ``t``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from tunnel_chrono.constants import HBAR, MASS, wavenumber
from tunnel_chrono.errors import ClosedChannelError, DegenerateSegmentError, ValidationError
from tunnel_chrono.potential import PotentialProfile

DEGENERATE_GAP = 1e-12  # eV


@dataclass(frozen=True)
class ScatteringSolution:
    """Amplitudes and in-barrier coefficients at one energy.

    ``segment_coefficients[j]`` is the ``(A, B)`` pair of segment ``j`` in the
    basis described in the module docstring; ``segment_wavenumbers[j]`` is
    ``q`` or ``kappa`` and ``segment_evanescent[j]`` says which.
    ``log_abs_t`` and ``arg_t`` stay meaningful even when ``t`` underflows.
    """

    energy: float
    k_left: float
    k_right: float
    r: complex
    t: complex
    segment_coefficients: tuple[tuple[complex, complex], ...]
    segment_wavenumbers: tuple[float, ...]
    segment_evanescent: tuple[bool, ...]
    log_abs_t: float
    arg_t: float
    profile: PotentialProfile

    @property
    def reflectance(self) -> float:
        return abs(self.r) ** 2

    @property
    def transmittance(self) -> float:
        """Flux-normalised transmission probability (k'/k)|t|^2."""
        return self.k_right / self.k_left * math.exp(2.0 * self.log_abs_t)


def solve(p: PotentialProfile, E: float) -> ScatteringSolution:
    """Solve for left incidence at energy ``E`` (eV)."""
    if not (E > p.left_level and E > p.right_level):
        raise ClosedChannelError(
            f"E={E} eV must exceed both lead levels ({p.left_level}, {p.right_level})"
        )
    k_left = wavenumber(E - p.left_level)
    k_right = wavenumber(E - p.right_level)

    n = len(p.segments)
    coeffs = [None] * n
    scales = [0.0] * n
    qs = [0.0] * n
    evan = [False] * n

    psi, dpsi, scale = 1.0 + 0j, 1j * k_right, 0.0
    for j in range(n - 1, -1, -1):
        w, v = p.segments[j]
        gap = E - v
        if abs(gap) < DEGENERATE_GAP:
            raise DegenerateSegmentError(
                f"E={E!r} eV equals segment {j} height {v!r} eV; perturb E by ~1e-9 eV"
            )
        q = wavenumber(abs(gap))
        qs[j] = q
        if gap > 0:
            a_w = 0.5 * (psi + dpsi / (1j * q))
            b_w = 0.5 * (psi - dpsi / (1j * q))
            phase = cmath.exp(1j * q * w)
            a, b = a_w / phase, b_w * phase
            psi, dpsi = a + b, 1j * q * (a - b)
        else:
            evan[j] = True
            damp = math.exp(-q * w)
            a_far = 0.5 * (psi + dpsi / q)
            b_hat = 0.5 * (psi - dpsi / q)
            # rescale by exp(q w): coefficients relative to the new scale
            a, b = a_far * damp, b_hat
            scale += q * w
            psi, dpsi = a * damp + b, q * (a * damp - b)
        coeffs[j] = (a, b)
        scales[j] = scale
        norm = abs(psi) + abs(dpsi) / max(q, k_left)
        psi, dpsi = psi / norm, dpsi / norm
        scale += math.log(norm)

    inc = 0.5 * (psi + dpsi / (1j * k_left))
    ref = 0.5 * (psi - dpsi / (1j * k_left))
    log_abs_t = -scale - math.log(abs(inc))
    arg_t = -cmath.phase(inc)
    t = cmath.rect(math.exp(log_abs_t), arg_t) if log_abs_t > -745.0 else 0j
    r = ref / inc
    seg = tuple(
        (a * math.exp(s - scale) / inc, b * math.exp(s - scale) / inc)
        for (a, b), s in zip(coeffs, scales)
    )
    return ScatteringSolution(
        energy=float(E),
        k_left=k_left,
        k_right=k_right,
        r=complex(r),
        t=complex(t),
        segment_coefficients=seg,
        segment_wavenumbers=tuple(qs),
        segment_evanescent=tuple(evan),
        log_abs_t=log_abs_t,
        arg_t=arg_t,
        profile=p,
    )


def _check_pair(sol, p):
    if sol.profile != p:
        raise ValidationError("scattering solution was computed for a different profile")


def wavefunction(sol: ScatteringSolution, x: float) -> tuple[complex, complex]:
    """``(psi(x), psi'(x))`` reconstructed from the stored amplitudes.

    At an interface the right-hand representation is used.
    """
    p = sol.profile
    if x < p.x1:
        u = x - p.x1
        e = cmath.exp(1j * sol.k_left * u)
        return e + sol.r / e, 1j * sol.k_left * (e - sol.r / e)
    if x >= p.x2:
        e = sol.t * cmath.exp(1j * sol.k_right * (x - p.x2))
        return e, 1j * sol.k_right * e
    edges = p.edges()
    j = min(int(np.searchsorted(edges, x, side="right")) - 1, len(p.segments) - 1)
    return segment_wavefunction(sol, j, x - edges[j])


def segment_wavefunction(sol: ScatteringSolution, j: int, u: float) -> tuple[complex, complex]:
    """``(psi, psi')`` at local coordinate ``u`` of segment ``j``."""
    a, b = sol.segment_coefficients[j]
    q = sol.segment_wavenumbers[j]
    w = sol.profile.segments[j][0]
    if sol.segment_evanescent[j]:
        grow, decay = math.exp(q * (u - w)), math.exp(-q * u)
        return a * grow + b * decay, q * (a * grow - b * decay)
    e = cmath.exp(1j * q * u)
    return a * e + b / e, 1j * q * (a * e - b / e)


def density_integral(sol: ScatteringSolution, p: PotentialProfile) -> float:
    """Integral of |psi|^2 over the barrier region [x1, x2] (Angstrom).

    Exact, segment by segment, from the analytic form of psi.
    """
    _check_pair(sol, p)
    total = 0.0
    for (w, _), (a, b), q, ev in zip(
        p.segments, sol.segment_coefficients, sol.segment_wavenumbers, sol.segment_evanescent
    ):
        aa, bb = abs(a) ** 2, abs(b) ** 2
        if ev:
            span = -math.expm1(-2.0 * q * w) / (2.0 * q)
            total += (aa + bb) * span + 2.0 * (a * b.conjugate()).real * w * math.exp(-q * w)
        else:
            osc = cmath.exp(1j * q * w) * math.sin(q * w) / q
            total += (aa + bb) * w + 2.0 * (a * b.conjugate() * osc).real
    return max(total, 0.0)


def incident_flux(sol: ScatteringSolution) -> float:
    """Probability current of the unit incident wave, hbar k / m (Angstrom/fs)."""
    return HBAR * sol.k_left / MASS
