"""Exception types shared across the package."""


class LfoError(Exception):
    pass


class MalformedFile(LfoError):
    """Input is not syntactically valid JSON."""


class SchemaViolation(LfoError):
    def __init__(self, message: str, step: int | None = None, field: str | None = None):
        self.step = step
        self.field = field
        where = []
        if step is not None:
            where.append(f"step {step}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class InvariantViolation(SchemaViolation):
    def __init__(self, message, step=None, field=None, report=None):
        super().__init__(message, step=step, field=field)
        self.report = report


class BranchingChain(SchemaViolation):
    pass


class JointLimitViolation(LfoError):
    pass


class NoConvergence(LfoError):
    def __init__(self, best_q, pos_err: float, rot_err: float):
        self.best_q = best_q
        self.pos_err = pos_err
        self.rot_err = rot_err
        super().__init__(f"IK did not converge (pos_err={pos_err:.4g} m, rot_err={rot_err:.4g} rad)")


class IkFailure(LfoError):
    def __init__(self, task_index: int, waypoint_index: int, best_error: tuple[float, float]):
        self.task_index = task_index
        self.waypoint_index = waypoint_index
        self.best_error = best_error
        super().__init__(
            f"IK failed at task {task_index}, waypoint {waypoint_index} "
            f"(pos_err={best_error[0]:.4g} m, rot_err={best_error[1]:.4g} rad)"
        )


class MissingTableEntry(LfoError):
    def __init__(self, limb: str, direction: str):
        self.limb = limb
        self.direction = direction
        super().__init__(f"no joint-range entry for ({limb}, {direction})")


class ZeroVector(ValueError, LfoError):
    pass


class MissingParam(LfoError):
    pass


class NoHitWithinTravel(LfoError):
    def __init__(self, steps: int, travel: float):
        self.steps = steps
        self.travel = travel
        super().__init__(f"no contact after {steps} descent steps ({travel:.3f} m)")
