"""Labanotation direction quantization and joint-range constraints.

Directions live in the robot base frame: x forward, y left, z up.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import MissingTableEntry, ZeroVector

AZIMUTHS = (
    ("forward", 0.0),
    ("forward_right", -45.0),
    ("right", -90.0),
    ("back_right", -135.0),
    ("back", 180.0),
    ("back_left", 135.0),
    ("left", 90.0),
    ("forward_left", 45.0),
)
LEVELS = (("high", 45.0), ("middle", 0.0), ("low", -45.0))


def _canonical_directions():
    names = ["place_high", "place_low"]
    vecs = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]
    for az_name, az in AZIMUTHS:
        for lvl_name, el in LEVELS:
            a, e = np.radians(az), np.radians(el)
            names.append(f"{az_name}_{lvl_name}")
            vecs.append(np.array([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)]))
    return tuple(names), np.vstack(vecs)


DIRECTION_NAMES, DIRECTION_VECTORS = _canonical_directions()
DIRECTION_VECTORS.setflags(write=False)
_INDEX = {name: i for i, name in enumerate(DIRECTION_NAMES)}


@dataclass(frozen=True)
class LabanDirection:
    name: str

    def __post_init__(self):
        if self.name not in _INDEX:
            raise ValueError(f"unknown Labanotation direction {self.name!r}")

    @property
    def index(self) -> int:
        return _INDEX[self.name]

    @property
    def unit_vector(self) -> np.ndarray:
        return DIRECTION_VECTORS[self.index].copy()

    def __str__(self):
        return self.name


ALL_DIRECTIONS = tuple(LabanDirection(n) for n in DIRECTION_NAMES)


@dataclass(frozen=True)
class LabanPose:
    upper_arm: LabanDirection
    lower_arm: LabanDirection


class Limb(str, enum.Enum):
    UPPER_ARM = "upper_arm"
    LOWER_ARM = "lower_arm"


class ConstraintStrength(str, enum.Enum):
    NONE = "none"
    ELBOW = "elbow"
    FULL = "full"


Interval = tuple[float, float]


@dataclass(frozen=True)
class JointRangeTable:
    """Manually calibrated joint windows per (limb, direction), plus the hard
    limits they must sit inside."""

    hard_limits: Mapping[str, Interval]
    entries: Mapping[tuple[Limb, str], Mapping[str, Interval]] = field(default_factory=dict)
    elbow_joint: str | None = None

    def __post_init__(self):
        for (limb, direction), joints in self.entries.items():
            for joint, (lo, hi) in joints.items():
                if joint not in self.hard_limits:
                    raise ValueError(f"{limb.value}/{direction}: unknown joint {joint!r}")
                hlo, hhi = self.hard_limits[joint]
                if not (hlo <= lo <= hi <= hhi):
                    raise ValueError(
                        f"{limb.value}/{direction}: interval [{lo}, {hi}] for {joint!r} "
                        f"not inside hard limits [{hlo}, {hhi}]"
                    )
        if self.elbow_joint is not None and self.elbow_joint not in self.hard_limits:
            raise ValueError(f"unknown elbow joint {self.elbow_joint!r}")

    def entry(self, limb: Limb, direction: LabanDirection) -> Mapping[str, Interval]:
        try:
            return self.entries[(limb, direction.name)]
        except KeyError:
            raise MissingTableEntry(limb.value, direction.name) from None


def quantize_direction(v) -> LabanDirection:
    """Nearest of the 26 canonical directions by cosine similarity.

    Exact ties resolve to the lowest canonical index (``np.argmax`` returns the
    first maximum).
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm < 1e-6:
        raise ZeroVector("cannot quantize a zero-length direction")
    return ALL_DIRECTIONS[int(np.argmax(DIRECTION_VECTORS @ (v / norm)))]


def joint_ranges(pose: LabanPose, table: JointRangeTable,
                 strength: ConstraintStrength) -> dict[str, Interval]:
    """Per-joint bounds for IK under a Labanotation pose.

    NONE gives the hard limits, ELBOW restricts only the elbow to non-negative
    angles, FULL intersects the upper- and lower-arm windows.
    """
    bounds = {name: (float(lo), float(hi)) for name, (lo, hi) in table.hard_limits.items()}
    strength = ConstraintStrength(strength)
    if strength is ConstraintStrength.NONE:
        return bounds
    if strength is ConstraintStrength.ELBOW:
        if table.elbow_joint is not None:
            lo, hi = bounds[table.elbow_joint]
            bounds[table.elbow_joint] = (max(lo, 0.0), hi)
        return bounds
    for limb, direction in ((Limb.UPPER_ARM, pose.upper_arm), (Limb.LOWER_ARM, pose.lower_arm)):
        for joint, (lo, hi) in table.entry(limb, direction).items():
            blo, bhi = bounds[joint]
            bounds[joint] = (max(blo, lo), min(bhi, hi))
    return bounds
