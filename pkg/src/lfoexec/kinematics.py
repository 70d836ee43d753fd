"""Serial-chain robot models, forward kinematics and bound-constrained IK."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.stats import qmc

from .errors import BranchingChain, JointLimitViolation, NoConvergence, SchemaViolation
from .geometry import Pose
from .io_utils import Source, read_json
from .laban import (ConstraintStrength, JointRangeTable, LabanDirection, LabanPose, Limb,
                    joint_ranges)

LIMIT_TOL = 1e-12


class JointType(str, enum.Enum):
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"


@dataclass(frozen=True)
class Joint:
    name: str
    type: JointType
    axis: tuple[float, float, float]
    origin: Pose
    limits: tuple[float, float]


@dataclass(frozen=True)
class RobotModel:
    name: str
    joints: tuple[Joint, ...]
    end_effector_offset: Pose
    laban_table: JointRangeTable
    labels: dict = field(default_factory=dict)

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def joint_names(self) -> list[str]:
        return [j.name for j in self.joints]

    @property
    def limits(self) -> np.ndarray:
        return np.array([j.limits for j in self.joints], dtype=float)

    @property
    def elbow_joint(self) -> str | None:
        return self.labels.get("elbow_joint")

    @cached_property
    def _origin_mats(self) -> tuple[np.ndarray, ...]:
        return tuple(j.origin.matrix() for j in self.joints)

    @cached_property
    def _axis_skews(self) -> tuple[np.ndarray, ...]:
        return tuple(_skew(j.axis) for j in self.joints)

    @cached_property
    def _axes(self) -> np.ndarray:
        return np.array([j.axis for j in self.joints], dtype=float)

    @cached_property
    def _revolute(self) -> np.ndarray:
        return np.array([j.type is JointType.REVOLUTE for j in self.joints])

    @cached_property
    def _ee_mat(self) -> np.ndarray:
        return self.end_effector_offset.matrix()

    def joint_index(self, name: str) -> int:
        return self.joint_names.index(name)

    def bounds_array(self, bounds: dict[str, tuple[float, float]] | None) -> np.ndarray:
        if bounds is None:
            return self.limits
        return np.array([bounds[n] for n in self.joint_names], dtype=float)

    def default_strength(self) -> ConstraintStrength:
        """Arms with six or fewer DOF rarely take odd IK postures, so they only
        get the elbow-sign rule; redundant arms get the full four-joint window."""
        if self.dof > 6:
            return ConstraintStrength.FULL
        return ConstraintStrength.ELBOW if self.elbow_joint else ConstraintStrength.NONE


# --- loading -------------------------------------------------------------

def _vec(value, n, where):
    if not isinstance(value, list) or len(value) != n or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise SchemaViolation(f"expected {n} numbers", field=where)
    return tuple(float(v) for v in value)


def _pose(obj, where):
    if not isinstance(obj, dict) or set(obj) != {"position", "quaternion"}:
        raise SchemaViolation("expected {position, quaternion}", field=where)
    quat = _vec(obj["quaternion"], 4, f"{where}.quaternion")
    if abs(np.linalg.norm(quat) - 1.0) > 1e-6:
        raise SchemaViolation("quaternion is not unit-norm", field=f"{where}.quaternion")
    return Pose(_vec(obj["position"], 3, f"{where}.position"), quat)


_JOINT_KEYS = {"name", "type", "axis", "origin", "limits"}


def _check_chain(raw_joints):
    """Joints may name their parent/child links; if they do, the links must
    form a single unbranched path in list order."""
    parents = [j.get("parent") for j in raw_joints]
    if any(p is not None for p in parents):
        seen = {}
        for j in raw_joints:
            parent = j.get("parent")
            if parent in seen:
                raise BranchingChain(f"link {parent!r} has children {seen[parent]!r} and {j['name']!r}",
                                     field="joints")
            seen[parent] = j["name"]
        for prev, nxt in zip(raw_joints, raw_joints[1:]):
            if prev.get("child") is None or prev.get("child") != nxt.get("parent"):
                raise BranchingChain(f"joint {nxt['name']!r} does not attach to the child of {prev['name']!r}",
                                     field="joints")


def load_robot(source: Source) -> RobotModel:
    data = read_json(source)
    if not isinstance(data, dict):
        raise SchemaViolation("top level must be an object")
    required = {"name", "joints", "end_effector", "laban_table"}
    missing = required - data.keys()
    if missing:
        raise SchemaViolation(f"missing {sorted(missing)}", field=sorted(missing)[0])
    extra = data.keys() - required - {"labels"}
    if extra:
        raise SchemaViolation(f"unexpected {sorted(extra)}", field=sorted(extra)[0])
    raw_joints = data["joints"]
    if not isinstance(raw_joints, list) or not raw_joints:
        raise SchemaViolation("need a non-empty joint list", field="joints")

    joints = []
    for k, rj in enumerate(raw_joints):
        where = f"joints[{k}]"
        if not isinstance(rj, dict):
            raise SchemaViolation("expected an object", field=where)
        miss = _JOINT_KEYS - rj.keys()
        if miss:
            raise SchemaViolation(f"missing {sorted(miss)}", field=where)
        if rj.keys() - _JOINT_KEYS - {"parent", "child"}:
            raise SchemaViolation(f"unexpected {sorted(rj.keys() - _JOINT_KEYS)}", field=where)
        try:
            jtype = JointType(rj["type"])
        except ValueError:
            raise SchemaViolation(f"unknown joint type {rj['type']!r}", field=f"{where}.type") from None
        axis = np.array(_vec(rj["axis"], 3, f"{where}.axis"))
        if abs(np.linalg.norm(axis) - 1.0) > 1e-6:
            raise SchemaViolation("axis is not unit-norm", field=f"{where}.axis")
        lo, hi = _vec(rj["limits"], 2, f"{where}.limits")
        if not lo < hi:
            raise SchemaViolation("limits need lo < hi", field=f"{where}.limits")
        joints.append(Joint(rj["name"], jtype, tuple(axis), _pose(rj["origin"], f"{where}.origin"), (lo, hi)))
    names = [j.name for j in joints]
    if len(set(names)) != len(names):
        raise SchemaViolation("duplicate joint names", field="joints")
    _check_chain(raw_joints)

    labels = data.get("labels", {})
    if not isinstance(labels, dict):
        raise SchemaViolation("expected an object", field="labels")
    elbow = labels.get("elbow_joint")
    if elbow is not None and elbow not in names:
        raise SchemaViolation(f"unknown elbow joint {elbow!r}", field="labels.elbow_joint")

    entries = {}
    table = data["laban_table"]
    if not isinstance(table, dict) or table.keys() - {"upper_arm", "lower_arm"}:
        raise SchemaViolation("expected {upper_arm, lower_arm}", field="laban_table")
    for limb_name, by_dir in table.items():
        limb = Limb(limb_name)
        for direction, jmap in by_dir.items():
            try:
                LabanDirection(direction)
            except ValueError:
                raise SchemaViolation(f"unknown direction name {direction!r}",
                                      field=f"laban_table.{limb_name}") from None
            entries[(limb, direction)] = {
                j: _vec(iv, 2, f"laban_table.{limb_name}.{direction}.{j}") for j, iv in jmap.items()
            }
    try:
        laban_table = JointRangeTable(
            hard_limits={j.name: j.limits for j in joints}, entries=entries, elbow_joint=elbow)
    except ValueError as exc:
        raise SchemaViolation(str(exc), field="laban_table") from None

    return RobotModel(
        name=str(data["name"]),
        joints=tuple(joints),
        end_effector_offset=_pose(data["end_effector"], "end_effector"),
        laban_table=laban_table,
        labels=dict(labels),
    )


def robot_to_dict(model: RobotModel) -> dict:
    table = {"upper_arm": {}, "lower_arm": {}}
    for (limb, direction), jmap in model.laban_table.entries.items():
        table[limb.value][direction] = {j: list(iv) for j, iv in jmap.items()}
    return {
        "name": model.name,
        "joints": [
            {"name": j.name, "type": j.type.value, "axis": list(j.axis),
             "origin": j.origin.to_dict(), "limits": list(j.limits)}
            for j in model.joints
        ],
        "end_effector": model.end_effector_offset.to_dict(),
        "laban_table": table,
        "labels": dict(model.labels),
    }


# --- forward kinematics --------------------------------------------------

def _joint_motion(joint: Joint, value: float, K: np.ndarray) -> np.ndarray:
    T = np.eye(4)
    if joint.type is JointType.REVOLUTE:
        # Rodrigues with precomputed skew matrix K of the axis
        T[:3, :3] += np.sin(value) * K + (1.0 - np.cos(value)) * (K @ K)
    else:
        T[:3, 3] = np.asarray(joint.axis) * value
    return T


def _skew(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def joint_frames(model: RobotModel, q) -> tuple[list[np.ndarray], np.ndarray]:
    """World transforms of each joint frame (before its own motion) and of the
    end effector."""
    T = np.eye(4)
    frames = []
    for joint, origin, K, value in zip(model.joints, model._origin_mats, model._axis_skews, q):
        T = T @ origin
        frames.append(T)
        T = T @ _joint_motion(joint, value, K)
    return frames, T @ model._ee_mat


def check_limits(model: RobotModel, q, tol: float = LIMIT_TOL) -> None:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.dof,):
        raise JointLimitViolation(f"expected {model.dof} joint values, got shape {q.shape}")
    lim = model.limits
    bad = np.flatnonzero((q < lim[:, 0] - tol) | (q > lim[:, 1] + tol))
    if bad.size:
        k = int(bad[0])
        raise JointLimitViolation(
            f"joint {model.joints[k].name!r} = {q[k]:.6g} outside [{lim[k, 0]:.6g}, {lim[k, 1]:.6g}]")


def fk(model: RobotModel, q) -> Pose:
    check_limits(model, q)
    return Pose.from_matrix(joint_frames(model, q)[1])


def _jacobian_from_frames(model: RobotModel, frames, T_ee) -> np.ndarray:
    F = np.asarray(frames)
    axes = np.einsum("kij,kj->ki", F[:, :3, :3], model._axes)
    J = np.zeros((6, model.dof))
    lever = np.cross(axes, T_ee[:3, 3] - F[:, :3, 3])
    rev = model._revolute
    J[:3] = np.where(rev[:, None], lever, axes).T
    J[3:] = np.where(rev[:, None], axes, 0.0).T
    return J


def jacobian(model: RobotModel, q) -> np.ndarray:
    """Geometric Jacobian (rows: linear velocity, angular velocity) of the end
    effector in the world frame."""
    frames, T_ee = joint_frames(model, q)
    return _jacobian_from_frames(model, frames, T_ee)


def numerical_jacobian(model: RobotModel, q, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian; angular rows from the relative rotation."""
    q = np.asarray(q, dtype=float)
    J = np.zeros((6, model.dof))
    for k in range(model.dof):
        dq = np.zeros_like(q)
        dq[k] = h
        Tp = joint_frames(model, q + dq)[1]
        Tm = joint_frames(model, q - dq)[1]
        J[:3, k] = (Tp[:3, 3] - Tm[:3, 3]) / (2 * h)
        rel = Rotation.from_matrix(Tp[:3, :3] @ Tm[:3, :3].T)
        J[3:, k] = rel.as_rotvec() / (2 * h)
    return J


# --- inverse kinematics --------------------------------------------------

@dataclass(frozen=True)
class IkOptions:
    pos_tol: float = 1e-3
    rot_tol: float = np.radians(0.5)
    max_iters: int = 200
    restarts: int = 8
    damping: float = 1e-2
    max_step: float = 0.2
    restart_scale: float = 0.5
    # per-iteration cap on the task-space error fed to the solver
    max_pos_correction: float = 0.1
    max_rot_correction: float = 0.5


@dataclass(frozen=True)
class IkSolution:
    q: np.ndarray
    pos_err: float
    rot_err: float
    iterations: int


def _restart_offsets(n: int, dof: int) -> np.ndarray:
    """Fixed Halton points in [-0.5, 0.5)^dof; row 0 is the unperturbed seed."""
    if n <= 1:
        return np.zeros((1, dof))
    pts = qmc.Halton(d=dof, scramble=False).random(n)
    # the first unscrambled Halton point is the origin of the cube
    return np.vstack([np.zeros(dof), pts[1:] - 0.5])


def _matrix_error(T: np.ndarray, target_p: np.ndarray, target_R: np.ndarray) -> np.ndarray:
    return np.concatenate([target_p - T[:3, 3],
                           Rotation.from_matrix(target_R @ T[:3, :3].T).as_rotvec()])


def _dls_step(J, err, q, lo, hi, lam2):
    """Damped least-squares step; joints sitting on a bound that the step would
    push further out are frozen and the step is recomputed without them."""
    free = np.ones(J.shape[1], dtype=bool)
    while True:
        Jf = J * free
        dq = Jf.T @ np.linalg.solve(Jf @ Jf.T + lam2 * np.eye(6), err)
        blocked = free & (((q <= lo) & (dq < 0)) | ((q >= hi) & (dq > 0)))
        if not blocked.any():
            return dq
        free &= ~blocked


def solve_ik(model: RobotModel, target: Pose, seed, bounds=None,
             opts: IkOptions = IkOptions()) -> IkSolution:
    """Damped least squares on the 6-D pose error with per-step bound clamping.

    ``bounds`` is a joint-name -> (lo, hi) mapping (defaults to hard limits).
    Restarts perturb the seed by a fixed low-discrepancy pattern scaled to the
    bound widths, so identical inputs give identical answers.
    """
    B = model.bounds_array(bounds)
    lo, hi = B[:, 0], B[:, 1]
    seed = np.clip(np.asarray(seed, dtype=float), lo, hi)
    lam2 = opts.damping ** 2
    target_p, target_R = target.p, target.R
    best = None
    iterations = 0
    for offset in _restart_offsets(opts.restarts, model.dof):
        q = np.clip(seed + offset * (hi - lo) * opts.restart_scale, lo, hi)
        for it in range(opts.max_iters + 1):
            frames, T = joint_frames(model, q)
            err = _matrix_error(T, target_p, target_R)
            pos_err, rot_err = float(np.linalg.norm(err[:3])), float(np.linalg.norm(err[3:]))
            if best is None or pos_err + rot_err < best[1] + best[2]:
                best = (q.copy(), pos_err, rot_err)
            if pos_err < opts.pos_tol and rot_err < opts.rot_tol:
                return IkSolution(q, pos_err, rot_err, iterations)
            if it == opts.max_iters:
                break
            if pos_err > opts.max_pos_correction:
                err[:3] *= opts.max_pos_correction / pos_err
            if rot_err > opts.max_rot_correction:
                err[3:] *= opts.max_rot_correction / rot_err
            dq = _dls_step(_jacobian_from_frames(model, frames, T), err, q, lo, hi, lam2)
            step = np.max(np.abs(dq))
            if step > opts.max_step:
                dq *= opts.max_step / step
            q = np.clip(q + dq, lo, hi)
            iterations += 1
    raise NoConvergence(best[0], best[1], best[2])


def midpoint(bounds_arr: np.ndarray) -> np.ndarray:
    return bounds_arr.mean(axis=1)


def initial_posture(model: RobotModel, target: Pose, pose: LabanPose,
                    strength: ConstraintStrength | None = None,
                    opts: IkOptions = IkOptions()) -> IkSolution:
    """IK under the Labanotation-narrowed bounds, seeded at their midpoints."""
    if strength is None:
        strength = model.default_strength()
    bounds = joint_ranges(pose, model.laban_table, strength)
    return solve_ik(model, target, midpoint(model.bounds_array(bounds)), bounds, opts)
