"""Runs a task sequence on a robot model inside a kinematic environment."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .errors import IkFailure, NoConvergence, SchemaViolation
from .geometry import Pose, unit
from .io_utils import Source, read_json
from .kinematics import IkOptions, RobotModel, check_limits, initial_posture, joint_frames, solve_ik
from .laban import ConstraintStrength, LabanPose
from .skills import (EFFORT_BASELINE, VIA_SPACING, WAYPOINT_SKILLS, HandTarget, SkillState,
                     ptg13_step, with_start)
from .taskir import TaskKind, TaskSequence, to_robot_frame

CONTACT_EFFORT = 1.0
GRASP_CAPTURE_MARGIN = 0.02


# --- environment -----------------------------------------------------------

@dataclass(frozen=True)
class SupportPlane:
    name: str
    height: float
    normal: tuple[float, float, float] = (0.0, 0.0, 1.0)
    bounds: tuple[float, float, float, float] = (-math.inf, math.inf, -math.inf, math.inf)

    def contains_xy(self, point) -> bool:
        xmin, xmax, ymin, ymax = self.bounds
        return xmin <= point[0] <= xmax and ymin <= point[1] <= ymax


@dataclass(frozen=True)
class Box:
    name: str
    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def contains(self, point, margin: float = 0.0) -> bool:
        """Strict containment in the box grown by ``margin`` (touching is clear)."""
        p = np.asarray(point)
        return bool(np.all(p > np.asarray(self.min) - margin) and np.all(p < np.asarray(self.max) + margin))


@dataclass(frozen=True)
class EnvObject:
    name: str
    pose: Pose
    half_extents: tuple[float, float, float]

    def __post_init__(self):
        if min(self.half_extents) <= 0:
            raise ValueError(f"object {self.name!r}: half extents must be positive")

    def lowest_along(self, normal) -> float:
        n = unit(normal)
        local = self.pose.rotation.inv().apply(n)
        return float(self.pose.p @ n - np.abs(local) @ np.asarray(self.half_extents))

    def contains(self, point, margin: float = 0.0) -> bool:
        local = self.pose.inverse().transform_point(point)
        return bool(np.all(np.abs(local) <= np.asarray(self.half_extents) + margin))


@dataclass(frozen=True)
class Environment:
    support_planes: tuple[SupportPlane, ...] = ()
    obstacles: tuple[Box, ...] = ()
    objects: tuple[EnvObject, ...] = ()

    def object(self, name: str) -> EnvObject:
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise KeyError(name)


def _vec(value, n, where):
    if not isinstance(value, list) or len(value) != n or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise SchemaViolation(f"expected {n} numbers", field=where)
    return tuple(float(v) for v in value)


def load_environment(source: Source) -> Environment:
    data = read_json(source)
    if not isinstance(data, dict) or data.keys() - {"support_planes", "obstacles", "objects"}:
        raise SchemaViolation("expected {support_planes, obstacles, objects}")
    try:
        planes = tuple(
            SupportPlane(p["name"], float(p["height"]), _vec(p.get("normal", [0, 0, 1]), 3, "normal"),
                         _vec(p["bounds"], 4, "bounds"))
            for p in data.get("support_planes", []))
        boxes = tuple(Box(b["name"], _vec(b["min"], 3, "min"), _vec(b["max"], 3, "max"))
                      for b in data.get("obstacles", []))
        objects = tuple(
            EnvObject(o["name"],
                      Pose(_vec(o["pose"]["position"], 3, "position"), _vec(o["pose"]["quaternion"], 4, "quaternion")),
                      _vec(o["half_extents"], 3, "half_extents"))
            for o in data.get("objects", []))
    except (KeyError, TypeError) as exc:
        raise SchemaViolation(f"bad environment entry: {exc}") from None
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from None
    for plane in planes:
        if abs(np.linalg.norm(plane.normal) - 1.0) > 1e-6:
            raise SchemaViolation(f"plane {plane.name!r}: normal is not unit-norm")
    for box in boxes:
        if not all(lo < hi for lo, hi in zip(box.min, box.max)):
            raise SchemaViolation(f"obstacle {box.name!r}: min must be below max")
    return Environment(planes, boxes, objects)


def environment_to_dict(env: Environment) -> dict:
    return {
        "support_planes": [{"name": p.name, "height": p.height, "normal": list(p.normal), "bounds": list(p.bounds)}
                           for p in env.support_planes],
        "obstacles": [{"name": b.name, "min": list(b.min), "max": list(b.max)} for b in env.obstacles],
        "objects": [{"name": o.name, "pose": o.pose.to_dict(), "half_extents": list(o.half_extents)}
                    for o in env.objects],
    }


def simulate_effort(env: Environment, hand: HandTarget, held_object: EnvObject | None = None) -> float:
    """Finger-effort stand-in: jumps from baseline to contact level when the
    held object's (or bare hand's) lowest point reaches a support plane inside
    that plane's bounds."""
    for plane in env.support_planes:
        if held_object is not None:
            lowest = held_object.lowest_along(plane.normal)
            xy = held_object.pose.p
        else:
            lowest = float(hand.pose.p @ unit(plane.normal))
            xy = hand.pose.p
        if lowest <= plane.height + 1e-12 and plane.contains_xy(xy):
            return CONTACT_EFFORT
    return EFFORT_BASELINE


# --- trajectory --------------------------------------------------------------

@dataclass(frozen=True)
class TrajectorySample:
    t: float
    q: tuple[float, ...]
    ee_pose: Pose
    effort: float
    task_index: int
    event: str | None = None
    aperture: float = 1.0


@dataclass(frozen=True)
class Trajectory:
    joint_names: tuple[str, ...]
    control_period: float
    samples: tuple[TrajectorySample, ...]

    def q_array(self) -> np.ndarray:
        return np.array([s.q for s in self.samples])

    def events(self) -> list[tuple[int, str]]:
        out = []
        for i, s in enumerate(self.samples):
            if s.event:
                out += [(i, tag) for tag in s.event.split(";")]
        return out

    def count_event(self, tag: str) -> int:
        return sum(1 for _, e in self.events() if e == tag)


def trajectory_to_dict(traj: Trajectory) -> dict:
    samples = []
    for s in traj.samples:
        d = {"t": s.t, "q": list(s.q), "ee_pose": s.ee_pose.to_dict(), "effort": s.effort,
             "aperture": s.aperture, "task_index": s.task_index}
        if s.event is not None:
            d["event"] = s.event
        samples.append(d)
    return {"joint_names": list(traj.joint_names), "control_period": traj.control_period, "samples": samples}


def trace_json(traj: Trajectory) -> str:
    return json.dumps(trajectory_to_dict(traj), separators=(",", ":")) + "\n"


def trace_csv(traj: Trajectory) -> str:
    n = len(traj.joint_names)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"q{i}" for i in range(n)]
                    + ["px", "py", "pz", "qw", "qx", "qy", "qz", "effort", "task_index", "event", "aperture"])
    for s in traj.samples:
        writer.writerow([repr(s.t)] + [repr(v) for v in s.q]
                        + [repr(v) for v in s.ee_pose.position + s.ee_pose.quaternion]
                        + [repr(s.effort), s.task_index, s.event or "", repr(s.aperture)])
    return buf.getvalue()


def write_trace(traj: Trajectory, path, fmt: str = "json") -> None:
    text = trace_json(traj) if fmt == "json" else trace_csv(traj)
    Path(path).write_text(text, encoding="utf-8")


def load_trace(path, fmt: str | None = None, joint_names=None, control_period=None) -> Trajectory:
    """Read a trace written by :func:`write_trace`. CSV traces carry no joint
    names or period, so those may be passed in (defaults: q0..qN, t1 - t0)."""
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix == ".csv" else "json")
    if fmt == "json":
        d = read_json(path)
        samples = tuple(
            TrajectorySample(s["t"], tuple(s["q"]), Pose(s["ee_pose"]["position"], s["ee_pose"]["quaternion"]),
                             s["effort"], s["task_index"], s.get("event"), s["aperture"])
            for s in d["samples"])
        return Trajectory(tuple(d["joint_names"]), d["control_period"], samples)
    rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
    header, body = rows[0], rows[1:]
    n = sum(1 for h in header if h.startswith("q") and h[1:].isdigit())
    samples = []
    for r in body:
        vals = r
        samples.append(TrajectorySample(
            float(vals[0]), tuple(float(v) for v in vals[1:1 + n]),
            Pose(tuple(float(v) for v in vals[1 + n:4 + n]), tuple(float(v) for v in vals[4 + n:8 + n])),
            float(vals[8 + n]), int(vals[9 + n]), vals[10 + n] or None, float(vals[11 + n])))
    if control_period is None:
        control_period = samples[1].t - samples[0].t if len(samples) > 1 else 0.0
    names = tuple(joint_names) if joint_names else tuple(f"q{i}" for i in range(n))
    return Trajectory(names, control_period, tuple(samples))


# --- execution -----------------------------------------------------------------

@dataclass(frozen=True)
class ExecOptions:
    control_period: float = 0.01
    joint_speed_limit: float = 1.0
    aperture_speed: float = 2.0
    laban_strength: ConstraintStrength | None = None
    ik: IkOptions = IkOptions()

    def __post_init__(self):
        if not self.control_period > 0:
            raise ValueError("control_period must be positive")
        if not self.joint_speed_limit > 0:
            raise ValueError("joint_speed_limit must be positive")


@dataclass
class StepReport:
    task_index: int
    kind: TaskKind
    targets: int = 0
    ik_solves: int = 0
    ik_iterations: int = 0
    max_pos_err: float = 0.0
    max_rot_err: float = 0.0
    events: list[str] = field(default_factory=list)
    # (sample index, commanded pose) for every waypoint reached
    waypoints: list[tuple[int, Pose]] = field(default_factory=list)


@dataclass
class ExecutionReport:
    robot: str
    task_kinds: list[TaskKind]
    laban_strength: ConstraintStrength
    steps: list[StepReport] = field(default_factory=list)
    initial_q: tuple[float, ...] = ()
    final_object_poses: dict[str, Pose] = field(default_factory=dict)
    events: list[tuple[int, int, str]] = field(default_factory=list)

    @property
    def ik_iterations(self) -> int:
        return sum(s.ik_iterations for s in self.steps)

    def count_event(self, tag: str) -> int:
        return sum(1 for _, _, e in self.events if e == tag)


class _Run:
    def __init__(self, model: RobotModel, env: Environment, opts: ExecOptions):
        self.model = model
        self.env = env
        self.opts = opts
        self.q: np.ndarray | None = None
        self.hand: Pose | None = None
        self.aperture = 1.0
        self.effort = EFFORT_BASELINE
        self.objects = {o.name: o for o in env.objects}
        self.held: tuple[str, Pose] | None = None
        self.samples: list[TrajectorySample] = []
        self.step: StepReport | None = None
        self.events: list[tuple[int, int, str]] = []

    # sampling
    def _actual_pose(self, q) -> Pose:
        return Pose.from_matrix(joint_frames(self.model, q)[1])

    def _emit(self, q: np.ndarray, aperture: float, task_index: int) -> None:
        ee = self._actual_pose(q)
        held_obj = None
        if self.held is not None:
            name, rel = self.held
            held_obj = EnvObject(name, ee @ rel, self.objects[name].half_extents)
            self.objects[name] = held_obj
        self.effort = simulate_effort(self.env, HandTarget(ee, aperture), held_obj)
        self.samples.append(TrajectorySample(
            t=len(self.samples) * self.opts.control_period,
            q=tuple(float(v) for v in q), ee_pose=ee, effort=self.effort,
            task_index=task_index, aperture=float(aperture)))

    def event(self, tag: str, task_index: int) -> None:
        last = self.samples[-1]
        tags = f"{last.event};{tag}" if last.event else tag
        self.samples[-1] = TrajectorySample(last.t, last.q, last.ee_pose, last.effort, last.task_index,
                                            tags, last.aperture)
        self.events.append((len(self.samples) - 1, task_index, tag))
        if self.step is not None:
            self.step.events.append(tag)

    def _segment(self, q_new: np.ndarray, aperture: float, task_index: int) -> None:
        dt = self.opts.control_period
        dq = q_new - self.q
        n_joint = np.max(np.abs(dq)) / (self.opts.joint_speed_limit * dt)
        n_grip = abs(aperture - self.aperture) / (self.opts.aperture_speed * dt)
        n = math.ceil(max(n_joint, n_grip) - 1e-9)
        for k in range(1, n + 1):
            if k == n:
                q, a = q_new, aperture
            else:
                q = self.q + (k / n) * dq
                a = self.aperture + (k / n) * (aperture - self.aperture)
            self._emit(q, a, task_index)
        self.q = q_new.copy()
        self.aperture = aperture

    # motion
    def _solve(self, target: Pose, task_index: int, waypoint_index: int):
        try:
            sol = solve_ik(self.model, target, self.q, None, self.opts.ik)
        except NoConvergence as exc:
            raise IkFailure(task_index, waypoint_index, (exc.pos_err, exc.rot_err)) from exc
        self._record(sol)
        return sol.q

    def _record(self, sol) -> None:
        st = self.step
        st.ik_solves += 1
        st.ik_iterations += sol.iterations
        st.max_pos_err = max(st.max_pos_err, sol.pos_err)
        st.max_rot_err = max(st.max_rot_err, sol.rot_err)

    def start(self, target: HandTarget, laban: LabanPose, task_index: int) -> None:
        strength = self.opts.laban_strength or self.model.default_strength()
        relaxed = False
        try:
            sol = initial_posture(self.model, target.pose, laban, strength, self.opts.ik)
        except NoConvergence:
            relaxed = True
            try:
                sol = initial_posture(self.model, target.pose, laban, ConstraintStrength.NONE, self.opts.ik)
            except NoConvergence as exc:
                raise IkFailure(task_index, 0, (exc.pos_err, exc.rot_err)) from exc
        self._record(sol)
        self.q = sol.q.copy()
        self.aperture = target.aperture
        self.hand = target.pose
        self._emit(self.q, self.aperture, task_index)
        self.step.waypoints.append((len(self.samples) - 1, target.pose))
        if relaxed:
            self.event("laban_relaxed", task_index)

    def move_to(self, target: HandTarget, task_index: int, waypoint_index: int) -> None:
        self.step.targets += 1
        for pose in _cartesian_fill(self.hand, target.pose):
            q_new = self._solve(pose, task_index, waypoint_index)
            self._segment(q_new, target.aperture, task_index)
        self.hand = target.pose
        self.step.waypoints.append((len(self.samples) - 1, target.pose))

    # object handling
    def attach(self, task_index: int) -> None:
        ee = self._actual_pose(self.q)
        candidates = [o for o in self.objects.values() if o.contains(ee.p, GRASP_CAPTURE_MARGIN)]
        if not candidates:
            self.event("grasp_empty", task_index)
            return
        obj = min(candidates, key=lambda o: (float(np.linalg.norm(o.pose.p - ee.p)), o.name))
        self.held = (obj.name, ee.inverse() @ obj.pose)
        self.event("grasped", task_index)

    def detach(self, task_index: int) -> None:
        if self.held is not None:
            self.held = None
            self.event("released", task_index)

    def held_offset(self) -> np.ndarray:
        if self.held is None:
            return np.zeros(3)
        ee = self._actual_pose(self.q)
        return self.objects[self.held[0]].pose.p - ee.p


def _cartesian_fill(start: Pose | None, end: Pose) -> list[Pose]:
    """Intermediate poses so no Cartesian hop between IK solves exceeds the
    via-point spacing."""
    if start is None:
        return [end]
    dist = float(np.linalg.norm(end.p - start.p))
    n = max(1, math.ceil(dist / VIA_SPACING - 1e-9))
    if n == 1:
        return [end]
    keys = Rotation.from_quat([start.quaternion, end.quaternion], scalar_first=True)
    slerp = Slerp([0.0, 1.0], keys)
    return [Pose.from_rotation(start.p + (k / n) * (end.p - start.p), slerp([k / n])[0])
            for k in range(1, n)] + [end]


def _placement_params(params, offset: np.ndarray):
    """Shift the placing column so the held object, not the hand, lands on the
    demonstrated target (grasp offsets differ between demo and execution)."""
    n = unit(params.surface_normal)
    lateral = offset - (offset @ n) * n
    end = params.end_hand_pose
    return replace(params, end_hand_pose=end.with_position(end.p - lateral))


def execute(model: RobotModel, seq: TaskSequence, env: Environment,
            opts: ExecOptions = ExecOptions()) -> tuple[Trajectory, ExecutionReport]:
    seq = to_robot_frame(seq)
    run = _Run(model, env, opts)
    report = ExecutionReport(model.name, seq.kinds, opts.laban_strength or model.default_strength())

    for i, step in enumerate(seq.steps):
        run.step = StepReport(i, step.kind)
        report.steps.append(run.step)
        params = step.params if run.hand is None else with_start(step.params, run.hand)

        if step.kind is TaskKind.PTG13:
            params = _placement_params(params, run.held_offset())
            k = 0
            while True:
                state = SkillState(run.hand, run.effort, k, run.aperture)
                out = ptg13_step(params, state)
                if out.done:
                    run.event(out.note, i)
                    break
                run.move_to(out.target, i, k)
                k += 1
            continue

        state = None if run.hand is None else SkillState(run.hand, run.effort, 0, run.aperture)
        targets = WAYPOINT_SKILLS[step.kind](params, state)
        for j, target in enumerate(targets):
            if run.q is None:
                run.start(target, params.laban_start, i)
                run.step.targets += 1
            else:
                run.move_to(target, i, j)
            if step.kind is TaskKind.RELEASE and j == 0:
                run.detach(i)
        if step.kind is TaskKind.GRASP:
            run.attach(i)

    for s in run.samples:
        check_limits(model, s.q)
    report.initial_q = run.samples[0].q
    report.final_object_poses = {name: o.pose for name, o in run.objects.items()}
    report.events = run.events
    traj = Trajectory(tuple(model.joint_names), opts.control_period, tuple(run.samples))
    return traj, report


def check_clearance(traj: Trajectory, env: Environment, margin: float = 0.01) -> list[tuple[int, str]]:
    """(sample index, obstacle name) for every end-effector sample inside an
    obstacle box grown by ``margin``."""
    out = []
    for i, s in enumerate(traj.samples):
        for box in env.obstacles:
            if box.contains(s.ee_pose.position, margin):
                out.append((i, box.name))
    return out
