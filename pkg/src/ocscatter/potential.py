"""
Compactly supported 1D barriers built from flat segments and delta spikes.

A barrier lives on a support interval ``[x1, x2]``. Flat segments carry a
constant height; delta spikes ``W * delta(x - x0)`` are stored apart from the
segments because they only act through the derivative jump condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


class PotentialError(ValueError):
    """Base class for malformed barrier definitions."""


class OverlapError(PotentialError):
    pass


class SupportError(PotentialError):
    pass


class NonFiniteError(PotentialError):
    pass


@dataclass(frozen=True)
class UnitsConfig:
    """Action and mass scales. The defaults give ``E(k) = k**2``."""

    hbar: float = 1.0
    mass: float = 0.5

    def __post_init__(self):
        for name in ("hbar", "mass"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"units.{name} must be finite and > 0, got {value!r}")

    @property
    def coupling(self) -> float:
        """``2m / hbar**2``: converts energies into squared wavenumbers."""
        return 2.0 * self.mass / self.hbar**2

    def energy(self, k):
        return (self.hbar * np.asarray(k)) ** 2 / (2.0 * self.mass)

    def velocity(self, k):
        return self.hbar * np.asarray(k) / self.mass


@dataclass(frozen=True)
class Segment:
    x_start: float
    x_end: float
    height: float


@dataclass(frozen=True)
class Delta:
    position: float
    strength: float


@dataclass(frozen=True)
class PotentialSpec:
    segments: tuple[Segment, ...] = ()
    deltas: tuple[Delta, ...] = ()
    support: tuple[float, float] = (-1.0, 1.0)

    @property
    def x1(self) -> float:
        return self.support[0]

    @property
    def x2(self) -> float:
        return self.support[1]

    @property
    def width(self) -> float:
        return self.support[1] - self.support[0]

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.support[0] + self.support[1])

    def with_delta(self, position: float, strength: float) -> "PotentialSpec":
        return validate(
            PotentialSpec(self.segments, self.deltas + (Delta(position, strength),), self.support)
        )


def make_spec(
    segments: Iterable = (),
    deltas: Iterable = (),
    support: tuple[float, float] = (-1.0, 1.0),
) -> PotentialSpec:
    """Build and validate a spec from plain tuples ``(x_start, x_end, height)``
    and ``(position, strength)``."""
    segs = tuple(s if isinstance(s, Segment) else Segment(*map(float, s)) for s in segments)
    dels = tuple(d if isinstance(d, Delta) else Delta(*map(float, d)) for d in deltas)
    return validate(PotentialSpec(segs, dels, (float(support[0]), float(support[1]))))


def validate(spec: PotentialSpec) -> PotentialSpec:
    """Return the normalized form of ``spec`` or raise a :class:`PotentialError`.

    Normalization sorts segments and deltas, drops zero-height segments and
    zero-strength deltas, merges touching segments of equal height and sums
    coincident deltas.
    """
    x1, x2 = spec.support
    values = [x1, x2]
    for s in spec.segments:
        values += [s.x_start, s.x_end, s.height]
    for d in spec.deltas:
        values += [d.position, d.strength]
    if not all(math.isfinite(v) for v in values):
        raise NonFiniteError("barrier contains a non-finite value")
    if not x1 < x2:
        raise SupportError(f"support must satisfy x1 < x2, got ({x1}, {x2})")

    segments = sorted(spec.segments, key=lambda s: (s.x_start, s.x_end))
    for s in segments:
        if not s.x_start < s.x_end:
            raise PotentialError(f"segment {s} has non-positive length")
        if s.x_start < x1 or s.x_end > x2:
            raise SupportError(f"segment {s} lies outside support [{x1}, {x2}]")
    for left, right in zip(segments, segments[1:]):
        if right.x_start < left.x_end:
            raise OverlapError(f"segments {left} and {right} overlap")

    merged: list[Segment] = []
    for s in segments:
        if s.height == 0.0:
            continue
        if merged and merged[-1].x_end == s.x_start and merged[-1].height == s.height:
            merged[-1] = Segment(merged[-1].x_start, s.x_end, s.height)
        else:
            merged.append(s)

    deltas: dict[float, float] = {}
    for d in spec.deltas:
        if d.position < x1 or d.position > x2:
            raise SupportError(f"delta {d} lies outside support [{x1}, {x2}]")
        deltas[d.position] = deltas.get(d.position, 0.0) + d.strength
    dels = tuple(Delta(x, w) for x, w in sorted(deltas.items()) if w != 0.0)

    return PotentialSpec(tuple(merged), dels, (float(x1), float(x2)))


def mirror(spec: PotentialSpec) -> PotentialSpec:
    """Reflect the barrier about its support midpoint."""
    c2 = spec.x1 + spec.x2
    segs = tuple(Segment(c2 - s.x_end, c2 - s.x_start, s.height) for s in spec.segments)
    dels = tuple(Delta(c2 - d.position, d.strength) for d in spec.deltas)
    return validate(PotentialSpec(segs, dels, spec.support))


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def is_symmetric(spec: PotentialSpec, tol: float = 1e-12) -> tuple[bool, float]:
    """Structural mirror-symmetry test about the support midpoint.

    Compares boundaries, heights, delta positions and strengths of ``spec``
    against its mirror image with relative tolerance ``tol``.
    """
    mid = spec.midpoint
    a, b = validate(spec), mirror(spec)
    if len(a.segments) != len(b.segments) or len(a.deltas) != len(b.deltas):
        return False, mid
    for s, m in zip(a.segments, b.segments):
        if not (_close(s.x_start, m.x_start, tol) and _close(s.x_end, m.x_end, tol)
                and _close(s.height, m.height, tol)):
            return False, mid
    for d, m in zip(a.deltas, b.deltas):
        if not (_close(d.position, m.position, tol) and _close(d.strength, m.strength, tol)):
            return False, mid
    return True, mid


def evaluate(spec: PotentialSpec, x):
    """Segment height at ``x`` (0 outside every segment). Deltas are ignored."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for s in spec.segments:
        out = np.where((x >= s.x_start) & (x <= s.x_end), s.height, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Region:
    """One elementary piece of the support: a flat stretch or a spike."""

    kind: str  # "flat" or "delta"
    x_start: float
    x_end: float
    value: float = field(default=0.0)


def regions(spec: PotentialSpec) -> list[Region]:
    """Left-to-right tiling of ``[x1, x2]`` into flat stretches (zero-height
    gaps included) with delta spikes interleaved at their positions."""
    cuts = {spec.x1, spec.x2}
    for s in spec.segments:
        cuts.update((s.x_start, s.x_end))
    for d in spec.deltas:
        cuts.add(d.position)
    cuts = sorted(cuts)
    spikes = {d.position: d.strength for d in spec.deltas}

    out: list[Region] = []
    for left, right in zip(cuts, cuts[1:]):
        if left in spikes:
            out.append(Region("delta", left, left, spikes[left]))
        height = float(evaluate(spec, 0.5 * (left + right)))
        out.append(Region("flat", left, right, height))
    if cuts[-1] in spikes:
        out.append(Region("delta", cuts[-1], cuts[-1], spikes[cuts[-1]]))
    return out


def max_local_wavenumber(spec: PotentialSpec, k: float, units: UnitsConfig = UnitsConfig()) -> float:
    """Largest of ``|k|`` and every ``|kappa|`` with ``kappa**2 = k**2 - 2mV/hbar**2``."""
    kmax = abs(k)
    for s in spec.segments:
        kmax = max(kmax, math.sqrt(abs(k * k - units.coupling * s.height)))
    return kmax
