"""Feasible-displacement cones and the 10-class translation taxonomy.

A contact state admits the infinitesimal displacements
``C = {v : n_i . v >= 0 for every constraint normal n_i}``. The class of ``C``
is the pair (dim of its lineality space ``C ∩ -C``, dim of its linear span).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .taskir import TaskKind

RANK_TOL = 1e-8
UNIT_TOL = 1e-6


class DisplacementType(enum.Enum):
    POINT = (0, 0)
    RAY = (0, 1)
    PLANAR_CONE = (0, 2)
    SOLID_CONE = (0, 3)
    LINE = (1, 1)
    HALF_PLANE = (1, 2)
    WEDGE_SOLID = (1, 3)
    PLANE = (2, 2)
    HALF_SPACE = (2, 3)
    FULL_SPACE = (3, 3)

    @property
    def lineality_dim(self) -> int:
        return self.value[0]

    @property
    def span_dim(self) -> int:
        return self.value[1]

    @property
    def label(self) -> str:
        return "".join(part.capitalize() for part in self.name.split("_"))

    @classmethod
    def from_dims(cls, lineality: int, span: int) -> "DisplacementType":
        return cls((lineality, span))

    def __str__(self):
        return f"{self.label} ({self.lineality_dim},{self.span_dim})"


@dataclass(frozen=True)
class ContactModel:
    normals: tuple[tuple[float, float, float], ...] = ()
    semantic_normals: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        for v in self.normals + self.semantic_normals:
            if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
                raise ValueError(f"constraint normal {v} is not unit-norm")

    def all_normals(self) -> np.ndarray:
        rows = list(self.normals) + list(self.semantic_normals)
        return np.array(rows, dtype=float).reshape(-1, 3)


@dataclass(frozen=True)
class Cone:
    """H-representation ``{v : N v >= 0}`` with redundant rows dropped."""

    normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def contains(self, v, tol: float = 1e-9) -> bool:
        return bool(np.all(self.normals @ np.asarray(v, dtype=float) >= -tol))


def _rank(m: np.ndarray, tol: float = RANK_TOL) -> int:
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > tol))


def _lp_extreme(objective: np.ndarray, constraints: np.ndarray, maximize: bool) -> float:
    """Optimum of ``objective . v`` over ``constraints v >= 0, |v|_inf <= 1``."""
    c = -objective if maximize else objective
    kwargs = {}
    if len(constraints):
        kwargs = {"A_ub": -constraints, "b_ub": np.zeros(len(constraints))}
    res = linprog(c, bounds=[(-1, 1)] * 3, method="highs", **kwargs)
    return float(-res.fun if maximize else res.fun)


def feasible_cone(contacts: ContactModel | Iterable[Sequence[float]]) -> Cone:
    """Intersect all physical and semantic half-spaces, dropping duplicate and
    implied normals."""
    if isinstance(contacts, ContactModel):
        normals = contacts.all_normals()
    else:
        normals = np.array(list(contacts), dtype=float).reshape(-1, 3)
    unique: list[np.ndarray] = []
    for n in normals:
        n = n / np.linalg.norm(n)
        if not any(np.linalg.norm(n - u) < 1e-9 for u in unique):
            unique.append(n)
    kept = list(unique)
    i = 0
    while i < len(kept):
        others = np.array(kept[:i] + kept[i + 1:]).reshape(-1, 3)
        # n_i is implied if the rest of the cone never leaves its half-space
        if _lp_extreme(kept[i], others, maximize=False) >= -RANK_TOL:
            kept.pop(i)
        else:
            i += 1
    return Cone(np.array(kept).reshape(-1, 3))


def classify(cone: Cone) -> DisplacementType:
    N = cone.normals
    lineality = 3 - _rank(N)
    # implicit equalities: rows that vanish on the whole cone
    eq = [n for n in N if _lp_extreme(n, N, maximize=True) <= RANK_TOL]
    span = 3 - _rank(np.array(eq).reshape(-1, 3))
    return DisplacementType.from_dims(lineality, span)


def classify_normals(normals: Iterable[Sequence[float]]) -> DisplacementType:
    return classify(feasible_cone(normals))


_EXAMPLE_NORMALS = {
    DisplacementType.FULL_SPACE: [],
    DisplacementType.HALF_SPACE: [(0, 0, 1)],
    DisplacementType.PLANE: [(0, 0, 1), (0, 0, -1)],
    DisplacementType.WEDGE_SOLID: [(1, 0, 0), (0, 1, 0)],
    DisplacementType.HALF_PLANE: [(0, 0, 1), (0, 0, -1), (1, 0, 0)],
    DisplacementType.LINE: [(0, 0, 1), (0, 0, -1), (0, 1, 0), (0, -1, 0)],
    DisplacementType.SOLID_CONE: [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
    DisplacementType.PLANAR_CONE: [(0, 0, 1), (0, 0, -1), (1, 0, 0), (0, 1, 0)],
    DisplacementType.RAY: [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1)],
    DisplacementType.POINT: [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)],
}


def example_normals(kind: DisplacementType) -> list[tuple[float, float, float]]:
    """A minimal contact configuration realizing ``kind``."""
    return [tuple(float(c) for c in n) for n in _EXAMPLE_NORMALS[kind]]


_TRANSITIONS = {
    (DisplacementType.HALF_SPACE, DisplacementType.FULL_SPACE): TaskKind.PTG11,
    (DisplacementType.FULL_SPACE, DisplacementType.HALF_SPACE): TaskKind.PTG13,
}


def transition_task(begin: DisplacementType, end: DisplacementType,
                    has_upright_semantic: bool = False, rotational: bool = False) -> TaskKind | None:
    """Task kind implemented for a begin->end class change, or None.

    ``rotational`` marks classes computed on angular-velocity space, where a
    Line->Line transition is a hinge (door) rather than a slide (drawer).
    """
    if (begin, end) == (DisplacementType.LINE, DisplacementType.LINE):
        return TaskKind.PTG5 if rotational else TaskKind.PTG3
    if rotational:
        return None
    if (begin, end) == (DisplacementType.FULL_SPACE, DisplacementType.FULL_SPACE):
        return TaskKind.STG12 if has_upright_semantic else None
    return _TRANSITIONS.get((begin, end))
