"""Command-line front end.

Usage: ``tunnel-chrono <command> [flags]``; ``tunnel-chrono <command> --help``
lists the flags of one command. Physical quantities carry unit suffixes
(``1.8ev``, ``20.8A``, ``300K``, ``0.5V``, ``2.05e13/s``); the energy-grid
bounds of ``times`` also accept bare numbers in eV.

Exit status: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tunnel_chrono import junction, partialwave3d, times1d
from tunnel_chrono.constants import FS_TO_S
from tunnel_chrono.errors import NumericalError, ValidationError
from tunnel_chrono.potential import read_profile, rectangular

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

# command -> {flag: (required, help)}; "in" and "out" map to the config paths
COMMANDS: dict[str, dict[str, tuple[bool, str]]] = {
    "times": {
        "barrier": (False, "rectangular barrier HEIGHTev:WIDTHA, e.g. 1.8ev:20.8A (or --in profile file)"),
        "in": (False, "profile file, one 'width_angstrom height_ev' line per segment"),
        "emin": (True, "lowest energy of the grid (eV)"),
        "emax": (True, "highest energy of the grid (eV)"),
        "n": (True, "number of grid points"),
        "out": (True, "output CSV"),
    },
    "hartman": {
        "v0": (True, "barrier height, e.g. 1.8ev"),
        "energy": (True, "incident energy, e.g. 0.9ev"),
        "widths": (True, "comma-separated widths, e.g. 10.4A,20.8A,41.6A"),
        "out": (True, "output CSV"),
    },
    "synth-iv": {
        "width": (True, "barrier width, e.g. 20.8A"),
        "phi0": (True, "barrier height(s), comma-separated per temperature, e.g. 1.799ev,1.83ev"),
        "temperature": (True, "temperature(s) matching --phi0, e.g. 300K,3.5K"),
        "vmin": (True, "lowest bias, e.g. 0.02V"),
        "vmax": (True, "highest bias, e.g. 1.0V"),
        "n": (True, "points per temperature"),
        "noise": (False, "relative Gaussian noise (default 0)"),
        "seed": (False, "RNG seed (default 0); group i uses seed + i"),
        "out": (True, "output IV CSV"),
    },
    "fit-iv": {
        "in": (True, "IV CSV (voltage_v,current_density_a_per_cm2,temperature_k)"),
        "init-width": (False, "starting width (default 15A)"),
        "init-phi0": (False, "starting height (default 1.5ev)"),
        "params-out": (False, "fitted-parameter CSV (default: <out stem>.params.csv)"),
        "out": (True, "key=value report"),
    },
    "extract-dwell": {
        "width": (True, "barrier width, e.g. 20.8A"),
        "phi0": (True, "barrier height, e.g. 1.8ev"),
        "fraction": (False, "incident energy as a fraction of phi0 (default 0.5)"),
        "out": (False, "key=value report"),
    },
    "fit-gap": {
        "in": (True, "gap CSV (temperature_k,gap_ev)"),
        "init-gap0": (False, "starting T=0 gap (default: largest gap in the data)"),
        "init-coupling": (False, "starting coupling S (default 1)"),
        "init-omega": (False, "starting phonon frequency (default 1e13/s)"),
        "out": (True, "key=value report"),
    },
    "bu-check": {
        "well": (True, "well STRENGTHev:RADIUSA, e.g. --well=-2ev:5A"),
        "shell": (False, "optional shell STRENGTHev:WIDTHA around the well"),
        "energy": (True, "energy, e.g. 1ev"),
        "box": (True, "box radius, e.g. 500A"),
        "lmax": (True, "highest partial wave"),
        "de": (False, "counting window (default: smallest holding 30 free states)"),
        "out": (False, "output CSV"),
    },
}


@dataclass
class RunConfig:
    command: str
    output_path: Path | None
    input_path: Path | None = None
    parameters: dict[str, str] = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        flags = COMMANDS[self.command]
        unknown = sorted(set(self.parameters) - (set(flags) - {"in", "out"}))
        if unknown:
            raise ValidationError(f"{self.command}: unknown parameter(s): {', '.join(unknown)}")
        given = set(self.parameters)
        if self.input_path is not None:
            given.add("in")
        if self.output_path is not None:
            given.add("out")
        missing = [k for k, (req, _) in flags.items() if req and k not in given]
        if missing:
            raise ValidationError(f"{self.command}: missing required flag(s): {', '.join('--' + m for m in missing)}")
        return self


# --- unit-suffixed values -----------------------------------------------------

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_UNITS = {
    "ev": ("ev",),
    "A": ("a", "angstrom"),
    "K": ("k",),
    "V": ("v",),
    "1/s": ("/s", "1/s", "s^-1"),
}


def parse_quantity(text: str, unit: str, name: str, allow_bare: bool = False) -> float:
    m = re.fullmatch(rf"\s*({_NUMBER})\s*([A-Za-z/^\-1]*)\s*", text)
    if not m:
        raise ValidationError(f"--{name}: cannot parse {text!r}")
    value, suffix = float(m.group(1)), m.group(2).lower()
    if not suffix:
        if allow_bare:
            return value
        raise ValidationError(f"--{name}: {text!r} needs a unit suffix ({unit})")
    if suffix not in _UNITS[unit]:
        raise ValidationError(f"--{name}: expected unit {unit}, got {m.group(2)!r}")
    return value


def parse_pair(text: str, name: str, second_unit: str = "A") -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValidationError(f"--{name}: expected ENERGYev:LENGTHA, got {text!r}")
    return parse_quantity(parts[0], "ev", name), parse_quantity(parts[1], second_unit, name)


def parse_list(text: str, unit: str, name: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ValidationError(f"--{name}: empty list")
    return [parse_quantity(t, unit, name) for t in items]


def _int(text: str, name: str, minimum: int = 0) -> int:
    try:
        n = int(text)
    except ValueError:
        raise ValidationError(f"--{name}: expected an integer, got {text!r}") from None
    if n < minimum:
        raise ValidationError(f"--{name}: must be >= {minimum}")
    return n


def _float(text: str, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"--{name}: expected a number, got {text!r}") from None
    if not np.isfinite(value):
        raise ValidationError(f"--{name}: must be finite")
    return value


# --- argument parsing ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tunnel-chrono", description="Quantum tunneling times and MIM junction fits.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name, flags in COMMANDS.items():
        p = sub.add_parser(name, help=f"{name} ({', '.join('--' + f for f in flags)})")
        for flag, (required, text) in flags.items():
            p.add_argument(f"--{flag}", dest=flag.replace("-", "_"), help=("required; " if required else "") + text)
    return parser


def _flags_with_values() -> set[str]:
    return {f"--{flag}" for flags in COMMANDS.values() for flag in flags}


def _normalise_argv(argv: list[str]) -> list[str]:
    """Glue negative values (``--well -2ev:5A``) onto their flag; reject duplicates."""
    takes_value = _flags_with_values()
    out, seen = [], set()
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--"):
            flag = tok.split("=", 1)[0]
            if flag in seen:
                raise ValidationError(f"duplicate flag {flag}")
            seen.add(flag)
            if "=" not in tok and flag in takes_value and i + 1 < len(argv):
                nxt = argv[i + 1]
                if re.match(r"-[\d.]", nxt):
                    out.append(f"{tok}={nxt}")
                    i += 2
                    continue
        out.append(tok)
        i += 1
    return out


def parse_args(argv: list[str]) -> RunConfig:
    """Turn a command line into a validated :class:`RunConfig`.

    ``--help`` raises ``SystemExit(0)`` after printing; errors raise
    :class:`ValidationError`.
    """
    parser = _build_parser()
    if not argv:
        raise ValidationError("no command given\n" + parser.format_usage().strip())
    ns = parser.parse_args(_normalise_argv(list(argv)))
    if ns.command is None:
        raise ValidationError("no command given\n" + parser.format_usage().strip())
    values = {k: v for k, v in vars(ns).items() if k != "command" and v is not None}
    inp = values.pop("in", None)
    out = values.pop("out", None)
    params = {k.replace("_", "-"): v for k, v in values.items()}
    cfg = RunConfig(
        command=ns.command,
        output_path=Path(out) if out is not None else None,
        input_path=Path(inp) if inp is not None else None,
        parameters=params,
    )
    return cfg.validate()


# --- outputs ------------------------------------------------------------------


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_report(pairs) -> str:
    return "".join(f"{k}={v}\n" for k, v in pairs)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _read_lines(path: Path) -> list[str]:
    try:
        return Path(path).read_text().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


# --- commands -----------------------------------------------------------------


def _cmd_times(cfg: RunConfig) -> str:
    prm = cfg.parameters
    if ("barrier" in prm) == (cfg.input_path is not None):
        raise ValidationError("times: give exactly one of --barrier or --in")
    if "barrier" in prm:
        height, width = parse_pair(prm["barrier"], "barrier")
        profile = rectangular(height, width)
    else:
        profile = read_profile(cfg.input_path)
    emin = parse_quantity(prm["emin"], "ev", "emin", allow_bare=True)
    emax = parse_quantity(prm["emax"], "ev", "emax", allow_bare=True)
    n = _int(prm["n"], "n", minimum=1)
    if not 0 < emin <= emax:
        raise ValidationError("times: need 0 < emin <= emax")
    grid = np.linspace(emin, emax, n) if n > 1 else np.array([emin])
    suites = times1d.sweep(profile, grid)
    write_atomic(cfg.output_path, times1d.format_sweep_csv(suites))
    return f"times: {len(suites)} energies from {emin:g} to {emax:g} eV -> {cfg.output_path}"


def _cmd_hartman(cfg: RunConfig) -> str:
    prm = cfg.parameters
    v0 = parse_quantity(prm["v0"], "ev", "v0")
    energy = parse_quantity(prm["energy"], "ev", "energy")
    widths = parse_list(prm["widths"], "A", "widths")
    rows = times1d.hartman_sweep(v0, energy, widths)
    write_atomic(cfg.output_path, times1d.format_hartman_csv(rows))
    return f"hartman: {len(rows)} widths, tau_phase {rows[0].tau_phase:.4g} .. {rows[-1].tau_phase:.4g} fs"


def _cmd_synth_iv(cfg: RunConfig) -> str:
    prm = cfg.parameters
    width = parse_quantity(prm["width"], "A", "width")
    phis = parse_list(prm["phi0"], "ev", "phi0")
    temps = parse_list(prm["temperature"], "K", "temperature")
    if len(phis) != len(temps):
        raise ValidationError("synth-iv: --phi0 and --temperature need the same number of entries")
    vmin = parse_quantity(prm["vmin"], "V", "vmin")
    vmax = parse_quantity(prm["vmax"], "V", "vmax")
    n = _int(prm["n"], "n", minimum=2)
    noise = _float(prm.get("noise", "0"), "noise")
    seed = _int(prm.get("seed", "0"), "seed")
    if not vmin < vmax:
        raise ValidationError("synth-iv: need vmin < vmax")
    voltages = np.linspace(vmin, vmax, n)
    points = []
    for i, (phi0, temp) in enumerate(zip(phis, temps)):
        model = junction.JunctionModel(width, phi0, temp)
        points.extend(junction.synth_iv(model, voltages, noise, seed + i).points)
    data = junction.IVDataset(tuple(points), source_label="synth-iv")
    write_atomic(cfg.output_path, junction.format_iv_csv(data))
    return f"synth-iv: {len(points)} points at {len(temps)} temperature(s) -> {cfg.output_path}"


def _params_path(cfg: RunConfig) -> Path:
    if "params-out" in cfg.parameters:
        return Path(cfg.parameters["params-out"])
    out = cfg.output_path
    return out.with_name(out.stem + ".params.csv")


def _cmd_fit_iv(cfg: RunConfig) -> str:
    prm = cfg.parameters
    data = junction.parse_iv_csv(_read_lines(cfg.input_path), source=str(cfg.input_path))
    init = junction.JunctionModel(
        parse_quantity(prm.get("init-width", "15A"), "A", "init-width"),
        parse_quantity(prm.get("init-phi0", "1.5ev"), "ev", "init-phi0"),
    )
    fits = junction.fit_iv_groups(data, init)
    blocks = []
    for model, fit in fits:
        dwell_s = junction.extract_dwell(model, 0.5)
        blocks.append(
            format_report(
                [
                    ("temperature_k", _fmt(model.temperature)),
                    ("s_angstrom", _fmt(model.width_s)),
                    ("phi0_ev", _fmt(model.barrier_phi0)),
                    ("s_stderr_angstrom", _fmt(fit.stderr[0])),
                    ("phi0_stderr_ev", _fmt(fit.stderr[1])),
                    ("residual", _fmt(fit.residual_norm)),
                    ("converged", str(fit.converged).lower()),
                    ("iterations", fit.iterations),
                    ("dwell_time_fs", _fmt(dwell_s / FS_TO_S)),
                    ("dwell_time_s", _fmt(dwell_s)),
                ]
            )
        )
    write_atomic(cfg.output_path, "\n".join(blocks))
    write_atomic(_params_path(cfg), junction.format_fit_params_csv(fits))
    summary = "; ".join(f"T={m.temperature:g} K s={m.width_s:.4f} A phi0={m.barrier_phi0:.4f} eV" for m, _ in fits)
    return f"fit-iv: {summary}"


def _cmd_extract_dwell(cfg: RunConfig) -> str:
    prm = cfg.parameters
    model = junction.JunctionModel(
        parse_quantity(prm["width"], "A", "width"), parse_quantity(prm["phi0"], "ev", "phi0")
    )
    fraction = _float(prm.get("fraction", "0.5"), "fraction")
    seconds = junction.extract_dwell(model, fraction)
    report = format_report(
        [
            ("s_angstrom", _fmt(model.width_s)),
            ("phi0_ev", _fmt(model.barrier_phi0)),
            ("energy_fraction", _fmt(fraction)),
            ("energy_ev", _fmt(fraction * model.barrier_phi0)),
            ("dwell_time_fs", _fmt(seconds / FS_TO_S)),
            ("dwell_time_s", _fmt(seconds)),
        ]
    )
    if cfg.output_path is not None:
        write_atomic(cfg.output_path, report)
    return f"extract-dwell: tau_D = {seconds / FS_TO_S:.6g} fs = {seconds:.6g} s"


def _cmd_fit_gap(cfg: RunConfig) -> str:
    prm = cfg.parameters
    data = junction.parse_gap_csv(_read_lines(cfg.input_path), source=str(cfg.input_path))
    gap0 = (
        parse_quantity(prm["init-gap0"], "ev", "init-gap0")
        if "init-gap0" in prm
        else max((g for _, g in data.points), default=1.0)
    )
    init = junction.GapModelParams(
        gap0,
        _float(prm.get("init-coupling", "1"), "init-coupling"),
        parse_quantity(prm.get("init-omega", "1e13/s"), "1/s", "init-omega"),
    )
    params, fit = junction.fit_gap(data, init)
    report = format_report(
        [
            ("gap0_ev", _fmt(params.gap0)),
            ("coupling_s", _fmt(params.coupling_S)),
            ("omega_per_s", _fmt(params.omega)),
            ("phonon_energy_mev", _fmt(params.phonon_energy * 1e3)),
            ("residual", _fmt(fit.residual_norm)),
            ("converged", str(fit.converged).lower()),
            ("near_singular", str(fit.near_singular).lower()),
        ]
    )
    write_atomic(cfg.output_path, report)
    return f"fit-gap: omega = {params.omega:.4g} /s (hbar omega = {params.phonon_energy * 1e3:.4g} meV)"


def _cmd_bu_check(cfg: RunConfig) -> str:
    prm = cfg.parameters
    strength, radius = parse_pair(prm["well"], "well")
    shell_strength, shell_width = parse_pair(prm["shell"], "shell") if "shell" in prm else (0.0, 0.0)
    well = partialwave3d.SphericalWell(strength, radius, shell_strength, shell_width)
    energy = parse_quantity(prm["energy"], "ev", "energy")
    box = parse_quantity(prm["box"], "A", "box")
    lmax = _int(prm["lmax"], "lmax")
    de = parse_quantity(prm["de"], "ev", "de") if "de" in prm else None
    cmp = partialwave3d.beth_uhlenbeck_check(well, energy, de, box, lmax)
    if cfg.output_path is not None:
        write_atomic(cfg.output_path, partialwave3d.format_dos_csv([cmp]))
    return (
        f"bu-check: smooth={cmp.smooth_side:.6g} counted={cmp.counted_side:.6g} states/eV "
        f"relative_gap={cmp.relative_gap:.3g}"
    )


_DISPATCH = {
    "times": _cmd_times,
    "hartman": _cmd_hartman,
    "synth-iv": _cmd_synth_iv,
    "fit-iv": _cmd_fit_iv,
    "extract-dwell": _cmd_extract_dwell,
    "fit-gap": _cmd_fit_gap,
    "bu-check": _cmd_bu_check,
}


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute a configuration; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        config.validate()
        summary = _DISPATCH[config.command](config)
    except ValidationError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    print(summary, file=stdout)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
