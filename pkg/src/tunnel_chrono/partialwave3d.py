"""Partial-wave scattering from a spherical square well (optionally with a shell).

The radial problem is solved exactly region by region with spherical Bessel
functions (modified ones where E is below the local potential, used in their
exponentially scaled form). Matching to the exterior solution

    R(r) ~ cos(delta) j_l(kr) - sin(delta) y_l(kr)

gives ``tan delta = N / D`` with

    N = k j_l'(ka) R - j_l(ka) R'
    D = k y_l'(ka) R - y_l(ka) R'

where ``(R, R')`` is the interior solution at the outer radius ``a``. The
angle ``atan2(N, D)`` is continuous in energy modulo 2 pi, which is what the
branch tracking follows; the phase shift equals it modulo pi. Phase shifts
are normalised so that they vanish at high energy (no Levinson offset).

The box-quantisation check puts a hard wall at radius ``R_box``: the
interacting levels are the zeros of ``D j_l(k R_box) - N y_l(k R_box)`` and
the free ones the zeros of ``j_l(k R_box)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ive, kve, spherical_jn, spherical_yn

from tunnel_chrono import numerics
from tunnel_chrono.constants import HBAR, HBAR2_OVER_2M
from tunnel_chrono.errors import NumericalError, ValidationError

L_CAP = 25
BOX_RATIO_MIN = 20.0
MIN_WINDOW_STATES = 30
_DEGENERATE_GAP = 1e-12


@dataclass(frozen=True)
class SphericalWell:
    """Square well (``strength < 0``) or barrier (``> 0``) of radius ``radius``.

    An optional shell of ``shell_strength`` between ``radius`` and
    ``radius + shell_width`` turns an attractive core into a barrier-confined
    well with narrow resonances.
    """

    strength: float
    radius: float
    shell_strength: float = 0.0
    shell_width: float = 0.0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValidationError(f"well radius must be positive, got {self.radius}")
        if not (math.isfinite(self.strength) and math.isfinite(self.shell_strength)):
            raise ValidationError("well strengths must be finite")
        if not (self.shell_width >= 0 and math.isfinite(self.shell_width)):
            raise ValidationError("shell width must be non-negative")

    @property
    def regions(self) -> list[tuple[float, float]]:
        """``(outer_radius, strength)`` from the centre outwards."""
        out = [(self.radius, self.strength)]
        if self.shell_width > 0:
            out.append((self.radius + self.shell_width, self.shell_strength))
        return out

    @property
    def outer_radius(self) -> float:
        return self.radius + self.shell_width

    @property
    def is_free(self) -> bool:
        return all(v == 0.0 for _, v in self.regions)


@dataclass(frozen=True)
class DosComparison:
    """Both sides of the Beth-Uhlenbeck relation at one energy (states/eV)."""

    energy: float
    smooth_side: float
    counted_side: float
    box_radius: float
    l_max: int
    window: float = 0.0

    @property
    def relative_gap(self) -> float:
        if self.smooth_side == 0.0:
            return 0.0 if self.counted_side == 0.0 else math.inf
        return abs(self.smooth_side - self.counted_side) / abs(self.smooth_side)


def _k_of(E):
    return np.sqrt(np.asarray(E, dtype=float) / HBAR2_OVER_2M)


def _regular(l, gap, a):
    """Regular solution at radius ``a`` for a constant region starting at r = 0."""
    out_r = np.empty_like(gap)
    out_d = np.empty_like(gap)
    up = gap > 0
    if np.any(up):
        K = _k_of(gap[up])
        x = K * a
        out_r[up] = spherical_jn(l, x)
        out_d[up] = K * spherical_jn(l, x, derivative=True)
    if np.any(~up):
        kap = _k_of(-gap[~up])
        x = kap * a
        s = np.sqrt(x)
        out_r[~up] = ive(l + 0.5, x) / s
        out_d[~up] = kap * (ive(l - 0.5, x) - (l + 1) / x * ive(l + 0.5, x)) / s
    return out_r, out_d


def _through_shell(l, gap, r0, r1, R, dR):
    """Carry (R, R') from r0 to r1 across a constant region, up to a positive factor."""
    R_out = np.empty_like(R)
    d_out = np.empty_like(R)
    up = gap > 0
    if np.any(up):
        K = _k_of(gap[up])
        x0, x1 = K * r0, K * r1
        f0, g0 = spherical_jn(l, x0), spherical_yn(l, x0)
        fd0 = K * spherical_jn(l, x0, derivative=True)
        gd0 = K * spherical_yn(l, x0, derivative=True)
        det = f0 * gd0 - g0 * fd0
        alpha = (R[up] * gd0 - dR[up] * g0) / det
        beta = (dR[up] * f0 - R[up] * fd0) / det
        R_out[up] = alpha * spherical_jn(l, x1) + beta * spherical_yn(l, x1)
        d_out[up] = K * (alpha * spherical_jn(l, x1, derivative=True) + beta * spherical_yn(l, x1, derivative=True))
    if np.any(~up):
        kap = _k_of(-gap[~up])
        x0, x1 = kap * r0, kap * r1

        def basis(x):
            s = np.sqrt(x)
            f = ive(l + 0.5, x) / s
            g = kve(l + 0.5, x) / s
            fd = kap * (ive(l - 0.5, x) - (l + 1) / x * ive(l + 0.5, x)) / s
            gd = kap * (-kve(l - 0.5, x) - (l + 1) / x * kve(l + 0.5, x)) / s
            return f, g, fd, gd

        f0, g0, fd0, gd0 = basis(x0)
        det = f0 * gd0 - g0 * fd0
        alpha = (R[~up] * gd0 - dR[~up] * g0) / det
        beta = (dR[~up] * f0 - R[~up] * fd0) / det
        f1, g1, fd1, gd1 = basis(x1)
        # true values carry exp(+kappa dr) on f and exp(-kappa dr) on g; divide out the first
        shrink = np.exp(-2.0 * kap * (r1 - r0))
        R_out[~up] = alpha * f1 + beta * shrink * g1
        d_out[~up] = alpha * fd1 + beta * shrink * gd1
    return R_out, d_out


def _check_l(l):
    if not (isinstance(l, (int, np.integer)) and 0 <= l <= L_CAP):
        raise ValidationError(f"angular momentum must be an integer in [0, {L_CAP}], got {l!r}")


def _matching(w: SphericalWell, l: int, E) -> tuple[np.ndarray, np.ndarray]:
    """``(N, D)`` of the module docstring, vectorised over energies."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    if np.any(E <= 0):
        raise ValidationError("scattering energy must be positive")
    regions = w.regions
    for _, v in regions:
        if np.any(np.abs(E - v) < _DEGENERATE_GAP):
            raise ValidationError(f"energy coincides with a region strength {v} eV; perturb E")
    a0, v0 = regions[0]
    R, dR = _regular(l, E - v0, a0)
    r_in = a0
    for r_out, v in regions[1:]:
        norm = np.hypot(R, dR)
        R, dR = _through_shell(l, E - v, r_in, r_out, R / norm, dR / norm)
        r_in = r_out
    k = _k_of(E)
    x = k * r_in
    norm = np.hypot(R, dR / k)
    R, dR = R / norm, dR / norm
    jn, jd = spherical_jn(l, x), spherical_jn(l, x, derivative=True)
    yn, yd = spherical_yn(l, x), spherical_yn(l, x, derivative=True)
    N = k * jd * R - jn * dR
    D = k * yd * R - yn * dR
    return N, D


def _angle(w, l, E):
    N, D = _matching(w, l, E)
    return np.arctan2(N, D)


def _wrap(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def reference_energy(w: SphericalWell, E: float) -> float:
    """Energy where the branch of the phase shift is fixed: well above every region strength."""
    vmax = max(abs(v) for _, v in w.regions)
    return max(E, 50.0 * vmax, 1.0)


def _radial_action(q, L, r_lo, r_hi):
    """Integral of sqrt(q^2 - L^2/r^2) over the allowed part of [r_lo, r_hi]."""
    lo = max(r_lo, L / q)
    if lo >= r_hi:
        return 0.0

    def g(r):
        return math.sqrt(max(q * q * r * r - L * L, 0.0)) - L * math.acos(min(L / (q * r), 1.0))

    return g(r_hi) - g(lo)


def eikonal_phase(w: SphericalWell, l: int, E: float) -> float:
    """Semiclassical (Langer-corrected WKB) phase shift; accurate when E >> |strength|.

    Used only to choose the branch of the exact phase shift, so it has to be
    right to well within pi/2, not to high precision.
    """
    k2 = E / HBAR2_OVER_2M
    L = l + 0.5
    total, r_in = 0.0, 0.0
    for r_out, v in w.regions:
        q2 = k2 - v / HBAR2_OVER_2M
        if q2 > 0:
            total += _radial_action(math.sqrt(q2), L, r_in, r_out)
        total -= _radial_action(math.sqrt(k2), L, r_in, r_out)
        r_in = r_out
    return total


def _tracking_grid(w, k_from, k_to, step=0.1):
    """k samples between k_from and k_to that are fine in every region's local wavenumber.

    Inside a region the wavenumber sqrt(k^2 - kappa^2) changes infinitely fast
    at its threshold, so besides a grid uniform in k, each threshold in range
    gets a grid uniform in the local wavenumber.
    """
    lo, hi = sorted((k_from, k_to))
    n = int(min(max(64, (hi - lo) * 2.0 * w.outer_radius / step), 400_000))
    parts = [np.linspace(lo, hi, n + 1)]
    r_in = 0.0
    for r_out, v in w.regions:
        if v > 0:
            kt = math.sqrt(v / HBAR2_OVER_2M)
            if kt < hi:
                K_lo = math.sqrt(max(lo * lo - kt * kt, 0.0))
                K_hi = math.sqrt(hi * hi - kt * kt)
                m = int(min(max(16, (K_hi - K_lo) * (r_out - r_in) / step), 400_000))
                K = np.linspace(K_lo, K_hi, m + 1)
                parts.append(np.sqrt(K * K + kt * kt))
        r_in = r_out
    ks = np.unique(np.clip(np.concatenate(parts), lo, hi))
    energies = HBAR2_OVER_2M * ks**2
    keep = np.ones(ks.size, dtype=bool)
    for _, v in w.regions:
        keep &= np.abs(energies - v) > 1e-9 * max(abs(v), 1.0)
    keep[0] = keep[-1] = True  # the end points are the caller's energies
    ks = ks[keep]
    return ks if k_from <= k_to else ks[::-1]


def _tracked_increment(w, l, k_from, k_to):
    """Change of the continuous matching angle going from k_from to k_to."""
    ks = _tracking_grid(w, k_from, k_to)
    theta = _angle(w, l, HBAR2_OVER_2M * ks**2)
    steps = _wrap(np.diff(theta))
    for i in np.flatnonzero(np.abs(steps) > 0.5):
        steps[i] = _refined_step(w, l, ks[i], ks[i + 1], theta[i], theta[i + 1], 0)
    return float(np.sum(steps))


def _refined_step(w, l, k0, k1, th0, th1, depth):
    d = float(_wrap(th1 - th0))
    if abs(d) <= 0.5 or depth >= 60:
        if abs(d) > 0.5:
            raise NumericalError(f"phase tracking failed to resolve a jump near k={k0}")
        return d
    km = 0.5 * (k0 + k1)
    thm = float(_angle(w, l, HBAR2_OVER_2M * km * km)[0])
    return _refined_step(w, l, k0, km, th0, thm, depth + 1) + _refined_step(w, l, km, k1, thm, th1, depth + 1)


def phase_shift(w: SphericalWell, l: int, E: float) -> float:
    """Phase shift delta_l(E) in radians, continuous in E and zero at high energy."""
    _check_l(l)
    if not E > 0:
        raise ValidationError(f"energy must be positive, got {E}")
    if w.is_free:
        return 0.0
    E_ref = reference_energy(w, E)
    theta_ref = float(_angle(w, l, E_ref)[0])
    # the exact phase equals theta_ref modulo pi; the eikonal estimate picks the branch
    turns = round((eikonal_phase(w, l, E_ref) - theta_ref) / math.pi)
    delta_ref = theta_ref + turns * math.pi
    k_ref, k = math.sqrt(E_ref / HBAR2_OVER_2M), math.sqrt(E / HBAR2_OVER_2M)
    if k_ref == k:
        return delta_ref
    return delta_ref + _tracked_increment(w, l, k_ref, k)


def _local_phase(w, l, E0):
    """Phase around E0, continuous within a derivative stencil (offset irrelevant)."""
    th0 = float(_angle(w, l, E0)[0])

    def f(E):
        d = float(_wrap(_angle(w, l, E)[0] - th0))
        if abs(d) > 0.5 * np.pi:
            raise NumericalError(f"phase shift varies too fast around E={E0} for the derivative step")
        return th0 + d

    return f


def phase_derivative(w: SphericalWell, l: int, E: float) -> float:
    """d delta_l / dE in rad/eV."""
    _check_l(l)
    if w.is_free:
        return 0.0
    return numerics.derivative(_local_phase(w, l, E), E, 1e-4 * max(E, 0.1))


def wigner_delay(w: SphericalWell, l: int, E: float) -> float:
    """Wigner time delay hbar d delta_l / dE in fs."""
    return HBAR * phase_derivative(w, l, E)


def smith_lifetime(w: SphericalWell, E: float) -> float:
    """Single-channel (s-wave) Smith lifetime, 2 hbar d delta_0 / dE, in fs.

    With S = exp(2 i delta) the lifetime matrix reduces to 2 hbar d delta/dE;
    the sign is chosen so a resonance gives a positive lifetime.
    """
    return 2.0 * wigner_delay(w, 0, E)


def _node_function(w, l, k, box_radius):
    """Exterior solution at the box wall; zero on an interacting box level."""
    if w.is_free:
        return spherical_jn(l, k * box_radius)
    N, D = _matching(w, l, HBAR2_OVER_2M * k * k)
    x = k * box_radius
    return D * spherical_jn(l, x) - N * spherical_yn(l, x)


def box_levels(w: SphericalWell, l: int, k_lo: float, k_hi: float, box_radius: float) -> np.ndarray:
    """Wavenumbers of the hard-wall box levels with k in [k_lo, k_hi]."""
    _check_l(l)
    spacing = np.pi / box_radius
    n = max(16, int(math.ceil((k_hi - k_lo) / (spacing / 8.0))))
    ks = np.linspace(k_lo, k_hi, n + 1)
    vals = _node_function(w, l, ks, box_radius)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        if vals[i] == 0.0:
            roots.append(ks[i])
            continue
        if vals[i + 1] == 0.0:
            continue  # picked up as the left end of the next cell
        roots.append(
            numerics.find_root(
                lambda kk: float(_node_function(w, l, np.array([kk]), box_radius)[0]), ks[i], ks[i + 1], 1e-14
            )
        )
    return np.array(sorted(roots))


def _counting(levels, k):
    """Level counting function, linearly interpolated in k between levels."""
    i = int(np.searchsorted(levels, k, side="right")) - 1
    if i < 0 or i + 1 >= len(levels):
        raise NumericalError("counting window not bracketed by box levels")
    return i + (k - levels[i]) / (levels[i + 1] - levels[i])


def free_states(k_lo: float, k_hi: float, box_radius: float, l_max: int) -> float:
    """Approximate number of free box states (m-degeneracy included) with k in [k_lo, k_hi]."""
    return (l_max + 1) ** 2 * (k_hi - k_lo) * box_radius / np.pi


def default_window(E: float, box_radius: float, l_max: int, states: int = MIN_WINDOW_STATES) -> float:
    """Smallest dE whose window centred on E holds ``states`` free states, (2l+1) each."""
    dk = states * np.pi / ((l_max + 1) ** 2 * box_radius)
    k = math.sqrt(E / HBAR2_OVER_2M)
    # k window centred on k(E); convert to an energy width
    return HBAR2_OVER_2M * ((k + dk / 2) ** 2 - (k - dk / 2) ** 2)


def beth_uhlenbeck_check(
    w: SphericalWell, E: float, dE: float | None, box_radius: float, l_max: int
) -> DosComparison:
    """Compare sum_l (2l+1)/pi d delta_l/dE with box-counted level densities.

    The counted side is ``[N_int - N_free] / dE`` over the window
    ``[E - dE/2, E + dE/2]``, each counting function built from the actual
    hard-wall levels (interpolated linearly in k between consecutive
    levels). Centring the window makes its bias second order in dE.
    """
    if not E > 0:
        raise ValidationError(f"energy must be positive, got {E}")
    if not isinstance(l_max, (int, np.integer)) or not 0 <= l_max <= L_CAP:
        raise ValidationError(f"l_max must be an integer in [0, {L_CAP}]")
    if box_radius < BOX_RATIO_MIN * w.outer_radius:
        raise ValidationError(
            f"box radius {box_radius} A is below {BOX_RATIO_MIN:g}x the well radius {w.outer_radius} A"
        )
    if dE is None:
        dE = default_window(E, box_radius, l_max)
    if not 0 < dE < 2 * E:
        raise ValidationError(f"window dE={dE} eV must lie in (0, 2E)")
    k_lo = math.sqrt((E - dE / 2) / HBAR2_OVER_2M)
    k_hi = math.sqrt((E + dE / 2) / HBAR2_OVER_2M)
    n_states = free_states(k_lo, k_hi, box_radius, l_max)
    if n_states < MIN_WINDOW_STATES - 0.5:
        raise ValidationError(
            f"window dE={dE} eV holds only ~{n_states:.1f} free states; need {MIN_WINDOW_STATES}"
        )
    free = SphericalWell(0.0, w.radius)
    margin = 3.0 * np.pi / box_radius
    lo, hi = max(k_lo - margin, 1e-6), k_hi + margin
    smooth = 0.0
    counted = 0.0
    for l in range(l_max + 1):
        weight = 2 * l + 1
        smooth += weight / np.pi * phase_derivative(w, l, E)
        lv_int = box_levels(w, l, lo, hi, box_radius)
        lv_free = box_levels(free, l, lo, hi, box_radius)
        n_int = _counting(lv_int, k_hi) - _counting(lv_int, k_lo)
        n_free = _counting(lv_free, k_hi) - _counting(lv_free, k_lo)
        counted += weight * (n_int - n_free) / dE
    return DosComparison(float(E), smooth, counted, float(box_radius), int(l_max), float(dE))


DOS_HEADER = ("energy_ev", "smooth_states_per_ev", "counted_states_per_ev", "relative_gap")


def format_dos_csv(rows) -> str:
    lines = [",".join(DOS_HEADER)]
    for c in rows:
        lines.append(",".join(f"{v:.12g}" for v in (c.energy, c.smooth_side, c.counted_side, c.relative_gap)))
    return "\n".join(lines) + "\n"


def parse_dos_csv(lines, source: str = "<dos>") -> list[tuple[float, float, float, float]]:
    """Rows of ``(energy, smooth, counted, relative_gap)`` from :func:`format_dos_csv` output."""
    rows = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or tuple(c.strip() for c in rows[0].split(",")) != DOS_HEADER:
        raise ValidationError(f"{source}: expected header {','.join(DOS_HEADER)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        cells = row.split(",")
        if len(cells) != len(DOS_HEADER):
            raise ValidationError(f"{source}:{lineno}: expected {len(DOS_HEADER)} columns")
        try:
            out.append(tuple(float(c) for c in cells))
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: malformed number") from None
    return out
