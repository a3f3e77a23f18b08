"""Metal-insulator-metal junction: Simmons I-V, barrier fits, gap fits, dwell time.

Pipeline: fit the intermediate-voltage Simmons formula for a rectangular
barrier to J(V) data (one fit per temperature) to get width ``s`` and height
``phi0``; fit the temperature dependence of the energy gap to a
single-oscillator form to get the average phonon frequency; then evaluate
the dwell time of the fitted barrier at mid-barrier energy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from tunnel_chrono import numerics
from tunnel_chrono.constants import (
    ELEMENTARY_CHARGE,
    FS_TO_S,
    HBAR,
    HBAR_EV_S,
    K_BOLTZMANN,
    MASS,
    PLANCK_SI,
)
from tunnel_chrono.errors import RegimeError, ValidationError
from tunnel_chrono.numerics import FitResult
from tunnel_chrono.potential import rectangular
from tunnel_chrono.times1d import dwell_time

#: 2 sqrt(2m) / hbar  [eV^-1/2 Angstrom^-1]
SIMMONS_C2 = 2.0 * math.sqrt(2.0 * MASS) / HBAR
#: e^2 / (2 pi h), scaled so J is in A/cm^2 for s in Angstrom and phi in eV
SIMMONS_C1 = ELEMENTARY_CHARGE**2 / (2.0 * math.pi * PLANCK_SI) * 1e20 * 1e-4


@dataclass(frozen=True)
class JunctionModel:
    width_s: float  # Angstrom
    barrier_phi0: float  # eV
    temperature: float = 300.0  # K

    def __post_init__(self):
        if not self.width_s > 0:
            raise ValidationError(f"barrier width must be positive, got {self.width_s}")
        if not self.barrier_phi0 > 0:
            raise ValidationError(f"barrier height must be positive, got {self.barrier_phi0}")


@dataclass(frozen=True)
class IVPoint:
    voltage: float  # V
    current_density: float  # A/cm^2
    temperature: float  # K


@dataclass(frozen=True)
class IVDataset:
    points: tuple[IVPoint, ...]
    source_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        for p in self.points:
            if not math.isfinite(p.current_density):
                raise ValidationError(f"non-finite current density at V={p.voltage}")
        for temp, group in self.groups().items():
            v = [p.voltage for p in group]
            if any(b <= a for a, b in zip(v, v[1:])):
                raise ValidationError(f"voltages must increase strictly within the {temp} K group")

    def groups(self) -> dict[float, list[IVPoint]]:
        """Points keyed by temperature, in order of first appearance."""
        out: dict[float, list[IVPoint]] = {}
        for p in self.points:
            out.setdefault(p.temperature, []).append(p)
        return out

    @property
    def temperatures(self) -> list[float]:
        return list(self.groups())


@dataclass(frozen=True)
class GapDataset:
    points: tuple[tuple[float, float], ...]  # (temperature K, gap eV)

    def __post_init__(self):
        pts = tuple((float(t), float(g)) for t, g in self.points)
        object.__setattr__(self, "points", pts)
        temps = [t for t, _ in pts]
        if any(t <= 0 for t in temps):
            raise ValidationError("temperatures must be positive")
        if any(b <= a for a, b in zip(temps, temps[1:])):
            raise ValidationError("temperatures must be increasing")


@dataclass(frozen=True)
class GapModelParams:
    gap0: float  # eV, gap at T = 0
    coupling_S: float  # dimensionless
    omega: float  # 1/s, average phonon frequency

    def __post_init__(self):
        if not self.omega > 0:
            raise ValidationError(f"phonon frequency must be positive, got {self.omega}")
        if self.coupling_S < 0:
            raise ValidationError(f"coupling must be non-negative, got {self.coupling_S}")

    @property
    def phonon_energy(self) -> float:
        """hbar omega in eV."""
        return HBAR_EV_S * self.omega


def _simmons_forward(V, s, phi0):
    phi_bar = phi0 - 0.5 * V
    upper = phi_bar + V
    return (SIMMONS_C1 / s**2) * (
        phi_bar * np.exp(-SIMMONS_C2 * s * np.sqrt(phi_bar))
        - upper * np.exp(-SIMMONS_C2 * s * np.sqrt(upper))
    )


def simmons_j(V, s: float, phi0: float):
    """Simmons current density (A/cm^2) through a rectangular barrier.

    Intermediate-voltage form with unit correction factor and no image
    force::

        J = C1/s^2 [phi_bar exp(-C2 s sqrt(phi_bar))
                    - (phi_bar + V) exp(-C2 s sqrt(phi_bar + V))],
        phi_bar = phi0 - V/2

    Odd in V by construction. Accepts scalars or arrays; ``|V|`` must stay
    below ``phi0``.
    """
    if not s > 0:
        raise ValidationError(f"barrier width must be positive, got {s}")
    V = np.asarray(V, dtype=float)
    if np.any(np.abs(V) >= phi0):
        raise RegimeError(f"|V| must stay below phi0={phi0} V (Fowler-Nordheim regime not modelled)")
    mag = _simmons_forward(np.abs(V), s, phi0)
    out = np.sign(V) * mag
    return float(out) if out.ndim == 0 else out


def synth_iv(model: JunctionModel, voltages: Sequence[float], noise_rel: float, seed: int) -> IVDataset:
    """Model J(V) with multiplicative Gaussian noise, reproducible per ``seed``."""
    if noise_rel < 0:
        raise ValidationError("noise_rel must be non-negative")
    v = np.asarray(voltages, dtype=float)
    j = simmons_j(v, model.width_s, model.barrier_phi0)
    rng = np.random.default_rng(seed)
    j = np.atleast_1d(j) * (1.0 + noise_rel * rng.standard_normal(v.size))
    points = tuple(IVPoint(float(a), float(b), float(model.temperature)) for a, b in zip(v, j))
    return IVDataset(points, source_label=f"synthetic s={model.width_s} phi0={model.barrier_phi0} seed={seed}")


def _iv_model(params, V):
    s, phi0 = params
    if s <= 0 or phi0 <= np.max(np.abs(V)):
        return np.full_like(V, np.inf)
    return np.sign(V) * _simmons_forward(np.abs(V), s, phi0)


def fit_iv(
    data: IVDataset, initial: JunctionModel, temperature: float | None = None
) -> tuple[JunctionModel, FitResult]:
    """Fit (s, phi0) to one temperature group with relative residuals.

    ``temperature`` selects the group; it may be omitted when the dataset
    holds a single one.
    """
    groups = data.groups()
    if temperature is None:
        if len(groups) != 1:
            raise ValidationError(f"dataset holds {len(groups)} temperature groups; pass temperature=")
        temperature = next(iter(groups))
    if temperature not in groups:
        raise ValidationError(f"no data at T={temperature} K")
    pts = groups[temperature]
    if len(pts) < 10:
        raise ValidationError(f"need at least 10 points, got {len(pts)} at T={temperature} K")
    if any(p.current_density == 0.0 for p in pts):
        raise ValidationError("relative residuals need non-zero current densities")
    rows = [(p.voltage, p.current_density, 1.0 / abs(p.current_density)) for p in pts]
    fit = numerics.fit_curve(_iv_model, [initial.width_s, initial.barrier_phi0], rows)
    s, phi0 = fit.params
    return JunctionModel(float(s), float(phi0), float(temperature)), fit


def fit_iv_groups(data: IVDataset, initial: JunctionModel) -> list[tuple[JunctionModel, FitResult]]:
    """Independent (s, phi0) fit for every temperature group, in dataset order."""
    return [fit_iv(data, initial, t) for t in data.temperatures]


def gap_model(T, p: GapModelParams):
    """Single-oscillator gap: gap0 - S hbar w [coth(hbar w / 2 k_B T) - 1] (eV)."""
    T = np.asarray(T, dtype=float)
    x = p.phonon_energy / (2.0 * K_BOLTZMANN * T)
    # coth(x) - 1 = 2 / (exp(2x) - 1), stable for large x
    with np.errstate(over="ignore"):
        occupation = 2.0 / np.expm1(2.0 * x)
    out = p.gap0 - p.coupling_S * p.phonon_energy * occupation
    return float(out) if out.ndim == 0 else out


_OMEGA_UNIT = 1e13  # fit omega in units of 1e13 / s


def _gap_fit_model(params, T):
    gap0, S, w = params
    if w <= 0:
        return np.full_like(T, np.inf)
    # signed coupling during the fit keeps the residuals smooth through S = 0
    hw = HBAR_EV_S * w * _OMEGA_UNIT
    with np.errstate(over="ignore"):
        return gap0 - S * hw * 2.0 / np.expm1(hw / (K_BOLTZMANN * T))


def fit_gap(data: GapDataset, initial: GapModelParams) -> tuple[GapModelParams, FitResult]:
    """Least-squares fit of (gap0, coupling_S, omega).

    The returned FitResult holds parameters in fit units, omega in 1e13/s;
    ``near_singular`` flags data that cannot pin omega down.
    """
    temps = np.array([t for t, _ in data.points])
    if len(temps) < 5:
        raise ValidationError(f"need at least 5 points, got {len(temps)}")
    if temps.max() < 5.0 * temps.min():
        raise ValidationError("temperatures must span at least a factor 5")
    rows = [(t, g, 1.0) for t, g in data.points]
    start = [initial.gap0, initial.coupling_S, initial.omega / _OMEGA_UNIT]
    fit = numerics.fit_curve(_gap_fit_model, start, rows)
    gap0, S, w = fit.params
    # a negative coupling is unphysical; it only appears as noise around S = 0
    return GapModelParams(float(gap0), float(max(S, 0.0)), float(w * _OMEGA_UNIT)), fit


def synth_gap(p: GapModelParams, temperatures: Sequence[float], noise_rel: float, seed: int) -> GapDataset:
    """Gap samples with multiplicative Gaussian noise, reproducible per ``seed``."""
    T = np.asarray(temperatures, dtype=float)
    g = np.atleast_1d(gap_model(T, p))
    rng = np.random.default_rng(seed)
    g = g * (1.0 + noise_rel * rng.standard_normal(T.size))
    return GapDataset(tuple(zip(T.tolist(), g.tolist())))


def extract_dwell(model: JunctionModel, energy_fraction: float = 0.5) -> float:
    """Dwell time (seconds) of the fitted rectangular barrier at E = fraction * phi0."""
    if not 0 < energy_fraction < 1:
        raise ValidationError(f"energy fraction must lie in (0, 1), got {energy_fraction}")
    barrier = rectangular(model.barrier_phi0, model.width_s)
    return dwell_time(barrier, energy_fraction * model.barrier_phi0) * FS_TO_S


# --- file formats -----------------------------------------------------------

IV_HEADER = ("voltage_v", "current_density_a_per_cm2", "temperature_k")
GAP_HEADER = ("temperature_k", "gap_ev")
FIT_PARAMS_HEADER = ("temperature_k", "s_angstrom", "phi0_ev", "residual", "converged")


def _rows(lines: Iterable[str], header: tuple[str, ...], source: str):
    seen_header = False
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        cells = [c.strip() for c in next(csv.reader([text]))]
        if not seen_header:
            if tuple(cells) != header:
                raise ValidationError(f"{source}:{lineno}: expected header {','.join(header)}")
            seen_header = True
            continue
        if len(cells) != len(header):
            raise ValidationError(f"{source}:{lineno}: expected {len(header)} columns, got {len(cells)}")
        try:
            values = [float(c) for c in cells]
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: malformed number in {text!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise ValidationError(f"{source}:{lineno}: non-finite value")
        yield lineno, values
    if not seen_header:
        raise ValidationError(f"{source}: empty file, expected header {','.join(header)}")


def parse_iv_csv(lines: Iterable[str], source: str = "<iv>") -> IVDataset:
    pts = [IVPoint(v, j, t) for _, (v, j, t) in _rows(lines, IV_HEADER, source)]
    return IVDataset(tuple(pts), source_label=source)


def format_iv_csv(data: IVDataset) -> str:
    lines = [",".join(IV_HEADER)]
    lines += [f"{p.voltage:.12g},{p.current_density:.12g},{p.temperature:.12g}" for p in data.points]
    return "\n".join(lines) + "\n"


def parse_gap_csv(lines: Iterable[str], source: str = "<gap>") -> GapDataset:
    return GapDataset(tuple((t, g) for _, (t, g) in _rows(lines, GAP_HEADER, source)))


def format_gap_csv(data: GapDataset) -> str:
    lines = [",".join(GAP_HEADER)] + [f"{t:.12g},{g:.12g}" for t, g in data.points]
    return "\n".join(lines) + "\n"


def format_fit_params_csv(fits: Sequence[tuple[JunctionModel, FitResult]]) -> str:
    lines = [",".join(FIT_PARAMS_HEADER)]
    for model, fit in fits:
        lines.append(
            f"{model.temperature:.12g},{model.width_s:.12g},{model.barrier_phi0:.12g},"
            f"{fit.residual_norm:.12g},{str(fit.converged).lower()}"
        )
    return "\n".join(lines) + "\n"


def parse_fit_params_csv(lines: Iterable[str], source: str = "<fit>") -> list[dict]:
    reader = csv.reader(line for line in lines if line.strip() and not line.lstrip().startswith("#"))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != FIT_PARAMS_HEADER:
        raise ValidationError(f"{source}: expected header {','.join(FIT_PARAMS_HEADER)}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(FIT_PARAMS_HEADER) or row[4].strip() not in ("true", "false"):
            raise ValidationError(f"{source}:{lineno}: malformed row")
        try:
            t, s, phi0, res = (float(x) for x in row[:4])
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: malformed number") from None
        out.append(
            {"temperature_k": t, "s_angstrom": s, "phi0_ev": phi0, "residual": res, "converged": row[4].strip() == "true"}
        )
    return out
