"""Hand-centric skill library.

Skills know nothing about robot bodies: they map skill parameters plus the
current hand state to target hand configurations (pose + aperture). The
executor turns those into joint motion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .errors import MissingParam, NoHitWithinTravel
from .geometry import Pose, minimal_rotation, unit
from .taskir import GraspType, SkillParams, TaskKind

PREGRASP_OFFSET = 0.10
RETREAT_DISTANCE = 0.10
VIA_SPACING = 0.10
DESCENT_STEP = 0.005
MAX_DESCENT = 0.30
EFFORT_BASELINE = 0.1
HIT_THRESHOLD = 0.5
GRASP_APERTURE = {
    GraspType.PASSIVE_FORCE: 0.15,
    GraspType.ACTIVE_FORCE: 0.05,
    GraspType.LAZY: 0.35,
}
WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class HandTarget:
    pose: Pose
    aperture: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.aperture <= 1.0:
            raise ValueError(f"aperture {self.aperture} outside [0, 1]")


@dataclass(frozen=True)
class SkillState:
    hand_pose: Pose
    effort: float = EFFORT_BASELINE
    step_index: int = 0
    aperture: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.effort) and self.effort >= 0.0):
            raise ValueError(f"effort must be finite and non-negative, got {self.effort}")


@dataclass(frozen=True)
class SkillOutput:
    target: HandTarget
    done: bool = False
    note: str | None = None


def _require(params: SkillParams, *names: str):
    for name in names:
        if getattr(params, name) is None:
            raise MissingParam(f"skill parameter {name!r} is required")


def _start(params: SkillParams, state: SkillState | None) -> Pose:
    return state.hand_pose if state is not None else params.start_hand_pose


def densify(points: list[np.ndarray], spacing: float = VIA_SPACING) -> list[tuple[int, float]]:
    """Split each segment of a polyline into equal pieces no longer than
    ``spacing``. Returns (segment index, fraction) for every output point, the
    vertices included exactly once."""
    out = [(0, 0.0)]
    for i in range(len(points) - 1):
        length = float(np.linalg.norm(points[i + 1] - points[i]))
        n = max(1, math.ceil(length / spacing - 1e-9))
        if length == 0.0:
            continue
        out += [(i, k / n) for k in range(1, n + 1)]
    return out


def _lerp(points, seg, frac) -> np.ndarray:
    if frac == 1.0:
        return np.array(points[seg + 1], dtype=float)
    if frac == 0.0:
        return np.array(points[seg], dtype=float)
    return points[seg] + frac * (points[seg + 1] - points[seg])


# --- grasp / release -----------------------------------------------------

def grasp_waypoints(params: SkillParams, state: SkillState | None = None) -> list[HandTarget]:
    """Pre-grasp standoff, straight approach, then close to the grasp-type aperture."""
    _require(params, "grasp_type", "approach_direction")
    grasp = params.start_hand_pose
    pre = grasp.with_position(grasp.p - PREGRASP_OFFSET * unit(params.approach_direction))
    closed = GRASP_APERTURE[params.grasp_type]
    out = [HandTarget(pre, 1.0), HandTarget(grasp, 1.0), HandTarget(grasp, closed)]
    if state is not None:
        out.insert(0, HandTarget(state.hand_pose, state.aperture))
    return out


def release_waypoints(params: SkillParams, state: SkillState | None = None) -> list[HandTarget]:
    start = _start(params, state)
    if params.approach_direction is not None:
        away = -unit(params.approach_direction)
    else:
        away = WORLD_UP
    return [HandTarget(start, 1.0),
            HandTarget(start.with_position(start.p + RETREAT_DISTANCE * away), 1.0)]


# --- translations ----------------------------------------------------------

def _held_aperture(state):
    return state.aperture if state is not None else 0.0


def ptg11_waypoints(params: SkillParams, state: SkillState | None = None) -> list[HandTarget]:
    """Pick up: move by the demonstrated displacement, orientation frozen."""
    start = _start(params, state)
    pts = [start.p, start.p + np.asarray(params.displacement)]
    aperture = _held_aperture(state)
    return [HandTarget(start.with_position(_lerp(pts, s, f)), aperture)
            for s, f in densify(pts)]


def ptg3_waypoints(params: SkillParams, state: SkillState | None = None) -> list[HandTarget]:
    """Drawer: straight translation along the displacement axis."""
    return ptg11_waypoints(params, state)


def _upright(rot: Rotation, axis_in_hand: np.ndarray) -> Rotation:
    current = rot.apply(axis_in_hand)
    if np.linalg.norm(np.cross(current, WORLD_UP)) < 1e-15 and current @ WORLD_UP > 0:
        return rot
    return minimal_rotation(current, WORLD_UP) * rot


def stg12_waypoints(params: SkillParams, state: SkillState | None = None) -> list[HandTarget]:
    """Bring: follow start -> via points -> start + displacement, keeping the
    object's upright axis vertical."""
    _require(params, "object_upright_axis")
    start = _start(params, state)
    vertices = [start] + list(params.via_points)
    end_pos = start.p + np.asarray(params.displacement)
    vertices.append(params.end_hand_pose.with_position(end_pos))
    pts = [v.p for v in vertices]
    axis_in_hand = start.rotation.inv().apply(unit(params.object_upright_axis))
    aperture = _held_aperture(state)
    start_rot = start.rotation

    out = []
    for seg, frac in densify(pts):
        a, b = vertices[seg], vertices[min(seg + 1, len(vertices) - 1)]
        if seg == 0 and frac == 0.0:
            rot = start_rot
        elif frac == 0.0 or a.quaternion == b.quaternion:
            rot = a.rotation
        elif frac == 1.0:
            rot = b.rotation
        else:
            keys = Rotation.from_quat([a.quaternion, b.quaternion], scalar_first=True)
            rot = Slerp([0.0, 1.0], keys)([frac])[0]
        rot = _upright(rot, axis_in_hand)
        pose = Pose.from_rotation(_lerp(pts, seg, frac), rot)
        if rot is start_rot:
            pose = start
        out.append(HandTarget(pose, aperture))
    return out


def ptg5_waypoints(params: SkillParams, state: SkillState | None = None) -> list[HandTarget]:
    """Revolute door: arc about the hinge, hand orientation turning with it.

    Hinge axis is ``surface_normal``; the hinge line passes through the first
    via point; the signed angle (rad) is ``|displacement|`` with the sign of
    ``displacement . axis`` (non-negative when orthogonal).
    """
    _require(params, "surface_normal")
    if not params.via_points:
        raise MissingParam("PTG5 needs the hinge point as its first via point")
    start = _start(params, state)
    axis = unit(params.surface_normal)
    pivot = params.via_points[0].p
    disp = np.asarray(params.displacement)
    angle = float(np.linalg.norm(disp))
    if disp @ axis < 0:
        angle = -angle
    radius = float(np.linalg.norm(np.cross(axis, start.p - pivot)))
    n = max(1, math.ceil(radius * abs(angle) / VIA_SPACING - 1e-9)) if angle else 0
    aperture = _held_aperture(state)
    out = [HandTarget(start, aperture)]
    for k in range(1, n + 1):
        turn = Rotation.from_rotvec(axis * angle * k / n)
        out.append(HandTarget(
            Pose.from_rotation(pivot + turn.apply(start.p - pivot), turn * start.rotation), aperture))
    return out


# --- placing ---------------------------------------------------------------

def landing_start(params: SkillParams) -> Pose:
    """Demonstrated mid-height of the placing motion, moved into the column
    above the placement target (the demonstrated end position)."""
    _require(params, "surface_normal")
    n = unit(params.surface_normal)
    mid = 0.5 * (params.start_hand_pose.p + params.end_hand_pose.p)
    column = params.end_hand_pose.p
    pos = column + ((mid - column) @ n) * n
    return params.start_hand_pose.with_position(pos)


def ptg13_step(params: SkillParams, state: SkillState) -> SkillOutput:
    """One control step of placing with force feedback.

    step 0 moves to the landing start; step k >= 1 commands the k-th descent
    of ``DESCENT_STEP`` along -surface_normal. A rise of the effort signal
    above baseline + threshold ends the skill where the hand currently is.
    """
    _require(params, "surface_normal")
    if state.effort - EFFORT_BASELINE > HIT_THRESHOLD:
        return SkillOutput(HandTarget(state.hand_pose, state.aperture), done=True, note="hit_detected")
    k = state.step_index
    if k * DESCENT_STEP > MAX_DESCENT + 1e-12:
        raise NoHitWithinTravel(k - 1, (k - 1) * DESCENT_STEP)
    landing = landing_start(params)
    pose = landing.with_position(landing.p - k * DESCENT_STEP * unit(params.surface_normal))
    return SkillOutput(HandTarget(pose, state.aperture))


WAYPOINT_SKILLS = {
    TaskKind.GRASP: grasp_waypoints,
    TaskKind.RELEASE: release_waypoints,
    TaskKind.PTG3: ptg3_waypoints,
    TaskKind.PTG5: ptg5_waypoints,
    TaskKind.PTG11: ptg11_waypoints,
    TaskKind.STG12: stg12_waypoints,
}


def with_start(params: SkillParams, pose: Pose) -> SkillParams:
    return replace(params, start_hand_pose=pose)
