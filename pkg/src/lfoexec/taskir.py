"""Robot-agnostic task sequence: types, demonstration-file parsing and validation."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .errors import InvariantViolation, SchemaViolation
from .geometry import Pose
from .io_utils import Source, read_json
from .laban import LabanDirection, LabanPose

UNIT_TOL = 1e-6

Vec3 = tuple[float, float, float]


class TaskKind(str, enum.Enum):
    GRASP = "Grasp"
    RELEASE = "Release"
    PTG3 = "PTG3"
    PTG5 = "PTG5"
    PTG11 = "PTG11"
    STG12 = "STG12"
    PTG13 = "PTG13"

    @property
    def is_manipulation(self) -> bool:
        return self not in (TaskKind.GRASP, TaskKind.RELEASE)


class GraspType(str, enum.Enum):
    PASSIVE_FORCE = "passive_force"
    ACTIVE_FORCE = "active_force"
    LAZY = "lazy"


@dataclass(frozen=True)
class SkillParams:
    start_hand_pose: Pose
    end_hand_pose: Pose
    displacement: Vec3
    laban_start: LabanPose
    laban_end: LabanPose
    via_points: tuple[Pose, ...] = ()
    grasp_type: GraspType | None = None
    approach_direction: Vec3 | None = None
    surface_normal: Vec3 | None = None
    object_upright_axis: Vec3 | None = None


@dataclass(frozen=True)
class TaskStep:
    kind: TaskKind
    params: SkillParams
    utterance: str = ""


@dataclass(frozen=True)
class TaskSequence:
    steps: tuple[TaskStep, ...]
    demo_to_robot: Pose = field(default_factory=Pose.identity)

    @property
    def kinds(self) -> list[TaskKind]:
        return [s.kind for s in self.steps]


@dataclass(frozen=True)
class ReportEntry:
    step: int | None
    field: str | None
    message: str

    def __str__(self):
        loc = "sequence" if self.step is None else f"step {self.step}"
        if self.field:
            loc += f" {self.field}"
        return f"{loc}: {self.message}"


@dataclass
class ValidationReport:
    entries: list[ReportEntry] = field(default_factory=list)

    def __bool__(self):
        return bool(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def add(self, step, field_name, message):
        self.entries.append(ReportEntry(step, field_name, message))


# --- presence rules ------------------------------------------------------

def _required_optionals(kind: TaskKind) -> set[str]:
    req = set()
    if kind is TaskKind.GRASP:
        req |= {"grasp_type", "approach_direction"}
    if kind in (TaskKind.PTG13, TaskKind.PTG5):
        req.add("surface_normal")
    if kind is TaskKind.STG12:
        req.add("object_upright_axis")
    return req


def _forbidden_optionals(kind: TaskKind) -> set[str]:
    forbidden = set()
    if kind is not TaskKind.GRASP:
        forbidden |= {"grasp_type", "approach_direction"}
    if kind not in (TaskKind.PTG13, TaskKind.PTG5):
        forbidden.add("surface_normal")
    return forbidden


def validate_sequence(seq: TaskSequence) -> ValidationReport:
    """Collect every invariant violation; an empty report means ``seq`` is valid."""
    report = ValidationReport()
    steps = seq.steps
    if len(steps) < 2:
        report.add(None, "steps", "a sequence needs at least a Grasp and a Release")
    if steps:
        if steps[0].kind is not TaskKind.GRASP:
            report.add(0, "kind", f"first step must be Grasp, got {steps[0].kind.value}")
        if len(steps) > 1 and steps[-1].kind is not TaskKind.RELEASE:
            report.add(len(steps) - 1, "kind", f"last step must be Release, got {steps[-1].kind.value}")
        for i, step in enumerate(steps[1:-1], start=1):
            if not step.kind.is_manipulation:
                report.add(i, "kind", f"{step.kind.value} not allowed between Grasp and Release")

    for i, step in enumerate(steps):
        p = step.params
        for name in sorted(_required_optionals(step.kind)):
            if getattr(p, name) is None:
                report.add(i, name, f"required for {step.kind.value}")
        for name in sorted(_forbidden_optionals(step.kind)):
            if getattr(p, name) is not None:
                report.add(i, name, f"not allowed for {step.kind.value}")
        for name in ("approach_direction", "surface_normal", "object_upright_axis"):
            vec = getattr(p, name)
            if vec is not None and abs(math.sqrt(sum(c * c for c in vec)) - 1.0) > UNIT_TOL:
                report.add(i, name, "unit-norm violation")
    return report


# --- parsing -------------------------------------------------------------

_STEP_KEYS = {"kind", "utterance", "params"}
_PARAM_REQUIRED = {"start_pose", "end_pose", "displacement", "laban_start", "laban_end"}
_PARAM_OPTIONAL = {"via_points", "grasp_type", "approach_direction", "surface_normal", "object_upright_axis"}


def _check_keys(obj: Any, required: set, optional: set, step, where: str):
    if not isinstance(obj, dict):
        raise SchemaViolation(f"expected an object for {where}", step=step, field=where)
    missing = required - obj.keys()
    if missing:
        raise SchemaViolation(f"missing {sorted(missing)}", step=step, field=sorted(missing)[0])
    extra = obj.keys() - required - optional
    if extra:
        raise SchemaViolation(f"unexpected {sorted(extra)}", step=step, field=sorted(extra)[0])
    for key, value in obj.items():
        if value is None:
            raise SchemaViolation("null is not allowed; omit optional fields", step=step, field=key)


def _vector(value, n: int, step, name: str) -> tuple[float, ...]:
    if (not isinstance(value, list) or len(value) != n
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise SchemaViolation(f"expected a list of {n} numbers", step=step, field=name)
    out = tuple(float(v) for v in value)
    if not all(math.isfinite(v) for v in out):
        raise SchemaViolation("non-finite value", step=step, field=name)
    return out


def parse_pose(obj, step=None, name="pose") -> Pose:
    _check_keys(obj, {"position", "quaternion"}, set(), step, name)
    pos = _vector(obj["position"], 3, step, f"{name}.position")
    quat = _vector(obj["quaternion"], 4, step, f"{name}.quaternion")
    if abs(math.sqrt(sum(c * c for c in quat)) - 1.0) > UNIT_TOL:
        raise SchemaViolation("quaternion is not unit-norm", step=step, field=f"{name}.quaternion")
    return Pose(pos, quat)


def _direction(name, step, where) -> LabanDirection:
    if not isinstance(name, str):
        raise SchemaViolation("direction must be a string", step=step, field=where)
    try:
        return LabanDirection(name)
    except ValueError:
        raise SchemaViolation(f"unknown direction name {name!r}", step=step, field=where) from None


def _laban_pose(obj, step, where) -> LabanPose:
    _check_keys(obj, {"upper", "lower"}, set(), step, where)
    return LabanPose(_direction(obj["upper"], step, f"{where}.upper"),
                     _direction(obj["lower"], step, f"{where}.lower"))


def _enum(cls, value, step, where):
    try:
        return cls(value)
    except ValueError:
        raise SchemaViolation(f"unknown value {value!r}", step=step, field=where) from None


def _parse_step(i: int, obj) -> TaskStep:
    _check_keys(obj, {"kind", "params"}, {"utterance"}, i, "step")
    kind = _enum(TaskKind, obj["kind"], i, "kind")
    utterance = obj.get("utterance", "")
    if not isinstance(utterance, str):
        raise SchemaViolation("utterance must be a string", step=i, field="utterance")
    p = obj["params"]
    _check_keys(p, _PARAM_REQUIRED, _PARAM_OPTIONAL, i, "params")
    vias = p.get("via_points", [])
    if not isinstance(vias, list):
        raise SchemaViolation("expected a list", step=i, field="via_points")
    optional_vec = {
        name: _vector(p[name], 3, i, name)
        for name in ("approach_direction", "surface_normal", "object_upright_axis") if name in p
    }
    params = SkillParams(
        start_hand_pose=parse_pose(p["start_pose"], i, "start_pose"),
        end_hand_pose=parse_pose(p["end_pose"], i, "end_pose"),
        displacement=_vector(p["displacement"], 3, i, "displacement"),
        laban_start=_laban_pose(p["laban_start"], i, "laban_start"),
        laban_end=_laban_pose(p["laban_end"], i, "laban_end"),
        via_points=tuple(parse_pose(v, i, f"via_points[{k}]") for k, v in enumerate(vias)),
        grasp_type=_enum(GraspType, p["grasp_type"], i, "grasp_type") if "grasp_type" in p else None,
        **optional_vec,
    )
    return TaskStep(kind=kind, params=params, utterance=utterance)


def parse_task_sequence(source: Source, validate: bool = True) -> TaskSequence:
    """Read a demonstration file. Poses stay in the demonstration frame."""
    data = read_json(source)
    if not isinstance(data, dict):
        raise SchemaViolation("top level must be an object")
    _check_keys(data, {"frame_transform", "steps"}, set(), None, "top level")
    if not isinstance(data["steps"], list):
        raise SchemaViolation("expected a list", field="steps")
    seq = TaskSequence(
        steps=tuple(_parse_step(i, s) for i, s in enumerate(data["steps"])),
        demo_to_robot=parse_pose(data["frame_transform"], None, "frame_transform"),
    )
    if validate:
        report = validate_sequence(seq)
        if report:
            first = report.entries[0]
            raise InvariantViolation(first.message, step=first.step, field=first.field, report=report)
    return seq


# --- serialization -------------------------------------------------------

def _params_to_dict(p: SkillParams) -> dict:
    out = {
        "start_pose": p.start_hand_pose.to_dict(),
        "end_pose": p.end_hand_pose.to_dict(),
        "displacement": list(p.displacement),
        "via_points": [v.to_dict() for v in p.via_points],
        "laban_start": {"upper": p.laban_start.upper_arm.name, "lower": p.laban_start.lower_arm.name},
        "laban_end": {"upper": p.laban_end.upper_arm.name, "lower": p.laban_end.lower_arm.name},
    }
    if p.grasp_type is not None:
        out["grasp_type"] = p.grasp_type.value
    for name in ("approach_direction", "surface_normal", "object_upright_axis"):
        if getattr(p, name) is not None:
            out[name] = list(getattr(p, name))
    return out


def sequence_to_dict(seq: TaskSequence) -> dict:
    return {
        "frame_transform": seq.demo_to_robot.to_dict(),
        "steps": [
            {"kind": s.kind.value, "utterance": s.utterance, "params": _params_to_dict(s.params)}
            for s in seq.steps
        ],
    }


def serialize_task_sequence(seq: TaskSequence) -> str:
    return json.dumps(sequence_to_dict(seq), indent=2) + "\n"


# --- frame change --------------------------------------------------------

def to_robot_frame(seq: TaskSequence) -> TaskSequence:
    """Express every pose and direction in the robot base frame.

    Displacements and direction vectors are free vectors, so only the rotation
    part of the demonstration-to-robot transform touches them.
    """
    T = seq.demo_to_robot
    if T == Pose.identity():
        return seq

    def vec(v):
        return None if v is None else tuple(float(c) for c in T.rotate_vector(v))

    steps = []
    for s in seq.steps:
        p = s.params
        steps.append(replace(s, params=replace(
            p,
            start_hand_pose=T @ p.start_hand_pose,
            end_hand_pose=T @ p.end_hand_pose,
            via_points=tuple(T @ v for v in p.via_points),
            displacement=vec(p.displacement),
            approach_direction=vec(p.approach_direction),
            surface_normal=vec(p.surface_normal),
            object_upright_axis=vec(p.object_upright_axis),
        )))
    return TaskSequence(steps=tuple(steps), demo_to_robot=Pose.identity())


def positions(seq: TaskSequence) -> np.ndarray:
    """All positions carried by the sequence, in step order (used by rigidity checks)."""
    pts = []
    for s in seq.steps:
        p = s.params
        pts += [p.start_hand_pose.p, p.end_hand_pose.p] + [v.p for v in p.via_points]
    return np.array(pts)
