"""Piecewise-constant 1D potential profiles (Angstrom, eV)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from tunnel_chrono.errors import ValidationError


@dataclass(frozen=True)
class PotentialProfile:
    """Barrier region made of constant segments between two flat leads.

    Attributes:
        segments: ``(width, height)`` pairs ordered left to right.
        left_level: potential of the left lead.
        right_level: potential of the right lead.
        origin: x coordinate of the first segment's left edge.
    """

    segments: tuple[tuple[float, float], ...]
    left_level: float = 0.0
    right_level: float = 0.0
    origin: float = 0.0

    def __post_init__(self):
        segs = tuple((float(w), float(h)) for w, h in self.segments)
        if not segs:
            raise ValidationError("a profile needs at least one segment")
        for w, h in segs:
            if not (w > 0 and math.isfinite(w)):
                raise ValidationError(f"segment width must be positive and finite, got {w}")
            if not math.isfinite(h):
                raise ValidationError(f"segment height must be finite, got {h}")
        for name in ("left_level", "right_level", "origin"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        object.__setattr__(self, "segments", segs)

    @property
    def widths(self) -> np.ndarray:
        return np.array([w for w, _ in self.segments])

    @property
    def heights(self) -> np.ndarray:
        return np.array([h for _, h in self.segments])

    @property
    def total_width(self) -> float:
        return math.fsum(w for w, _ in self.segments)

    @property
    def x1(self) -> float:
        """Barrier entrance."""
        return self.origin

    @property
    def x2(self) -> float:
        """Barrier exit."""
        return self.origin + self.total_width

    def edges(self) -> np.ndarray:
        """Interface coordinates, ``len(segments) + 1`` of them."""
        return self.origin + np.concatenate(([0.0], np.cumsum(self.widths)))

    @property
    def max_height(self) -> float:
        return max(h for _, h in self.segments)

    def mirrored(self) -> PotentialProfile:
        """Left-right reflection about the barrier centre."""
        return replace(
            self,
            segments=tuple(reversed(self.segments)),
            left_level=self.right_level,
            right_level=self.left_level,
        )

    def __call__(self, x: float) -> float:
        """Potential at ``x``; at an interface the right-hand segment wins."""
        if x < self.x1:
            return self.left_level
        if x >= self.x2:
            return self.right_level
        idx = int(np.searchsorted(self.edges(), x, side="right")) - 1
        return self.segments[min(idx, len(self.segments) - 1)][1]


def rectangular(height: float, width: float) -> PotentialProfile:
    """Single square barrier of ``height`` eV and ``width`` Angstrom starting at x = 0."""
    if not width > 0:
        raise ValidationError(f"barrier width must be positive, got {width}")
    return PotentialProfile(((width, height),))


def discretize(f: Callable[[float], float], x1: float, x2: float, n: int) -> PotentialProfile:
    """Staircase approximation of ``f`` on ``[x1, x2]`` with ``n`` equal segments.

    Each step takes the value of ``f`` at its midpoint.
    """
    if not x1 < x2:
        raise ValidationError(f"need x1 < x2, got {x1}, {x2}")
    if n < 1:
        raise ValidationError(f"need at least one segment, got n={n}")
    width = (x2 - x1) / n
    heights = [float(f(x1 + (i + 0.5) * width)) for i in range(n)]
    if not all(math.isfinite(h) for h in heights):
        raise ValidationError("potential function returned a non-finite value")
    # the last width absorbs rounding so the total is exactly x2 - x1
    span = x2 - x1
    head = [width] * (n - 1)
    last = span - math.fsum(head)
    for _ in range(8):
        total = math.fsum(head + [last])
        if total == span:
            break
        last = math.nextafter(last, math.inf if total < span else -math.inf)
    widths = head + [last]
    return PotentialProfile(tuple(zip(widths, heights)), origin=x1)


def shift_barrier(p: PotentialProfile, dV: float) -> PotentialProfile:
    """Raise every segment by ``dV``; the lead levels are untouched."""
    if dV == 0:
        return p
    return replace(p, segments=tuple((w, h + dV) for w, h in p.segments))


def parse_profile(lines: Iterable[str], source: str = "<profile>") -> PotentialProfile:
    """Read the text profile format: ``width_angstrom height_ev`` per line.

    Blank lines and ``#`` comments are ignored.
    """
    segments = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 2:
            raise ValidationError(f"{source}:{lineno}: expected 'width_angstrom height_ev', got {raw.strip()!r}")
        try:
            segments.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: not a number in {raw.strip()!r}") from None
    if not segments:
        raise ValidationError(f"{source}: no segments")
    return PotentialProfile(tuple(segments))


def read_profile(path) -> PotentialProfile:
    path = Path(path)
    with path.open() as fh:
        return parse_profile(fh, source=str(path))


def format_profile(p: PotentialProfile) -> str:
    lines = ["# width_angstrom height_ev"]
    lines += [f"{w:.12g} {h:.12g}" for w, h in p.segments]
    return "\n".join(lines) + "\n"
