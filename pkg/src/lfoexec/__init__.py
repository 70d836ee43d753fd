"""Hand-centric task-sequence execution on interchangeable robot arms."""
from .errors import (IkFailure, InvariantViolation, JointLimitViolation, LfoError, MalformedFile, MissingParam,
                     NoConvergence, NoHitWithinTravel, SchemaViolation)
from .executor import Environment, ExecOptions, check_clearance, execute, load_environment
from .geometry import Pose
from .kinematics import RobotModel, fk, initial_posture, jacobian, load_robot, solve_ik
from .laban import ConstraintStrength, LabanDirection, LabanPose, quantize_direction
from .taskir import TaskKind, TaskSequence, parse_task_sequence, validate_sequence
from .taxonomy import DisplacementType, classify_normals

__version__ = "0.1.0"

__all__ = [
    "ConstraintStrength", "DisplacementType", "Environment", "ExecOptions", "IkFailure", "InvariantViolation",
    "JointLimitViolation", "LabanDirection", "LabanPose", "LfoError", "MalformedFile", "MissingParam",
    "NoConvergence", "NoHitWithinTravel", "Pose", "RobotModel", "SchemaViolation", "TaskKind", "TaskSequence",
    "check_clearance", "classify_normals", "execute", "fk", "initial_posture", "jacobian", "load_environment",
    "load_robot", "parse_task_sequence", "quantize_direction", "solve_ik", "validate_sequence",
]
