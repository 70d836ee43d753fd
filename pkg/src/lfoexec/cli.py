"""Command-line front end: ``execute``, ``validate`` and ``classify``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import IkFailure, LfoError, NoHitWithinTravel
from .executor import ExecOptions, execute, load_environment, write_trace, check_clearance
from .kinematics import load_robot
from .laban import ConstraintStrength
from .taskir import parse_task_sequence, validate_sequence
from .taxonomy import classify_normals

EXIT_OK, EXIT_ERROR, EXIT_IK, EXIT_NO_HIT = 0, 1, 2, 3


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    robot_path: Path | None = None
    demo_path: Path | None = None
    env_path: Path | None = None
    trace_path: Path | None = None
    format: str = "json"
    control_period: float | None = None
    laban_strength: ConstraintStrength | None = None
    margin: float = 0.01


def resolve_path(name: str | Path) -> Path:
    """Existing paths win; otherwise a bare file name is looked up among the
    bundled fixtures."""
    path = Path(name)
    if path.exists() or path.parent != Path("."):
        return path
    bundled = resources.files("lfoexec") / "data" / path.name
    return Path(str(bundled)) if bundled.is_file() else path


def _require_file(path: Path | None, flag: str) -> Path:
    if path is None:
        raise _Usage(f"{flag} is required")
    if not path.is_file():
        raise _Usage(f"no such file: {path}")
    return path


class _Usage(Exception):
    pass


def cmd_execute(cfg: CliConfig) -> int:
    model = load_robot(_require_file(cfg.robot_path, "--robot"))
    seq = parse_task_sequence(_require_file(cfg.demo_path, "--demo"))
    env = load_environment(_require_file(cfg.env_path, "--env"))
    opts = ExecOptions(laban_strength=cfg.laban_strength)
    if cfg.control_period is not None:
        opts = ExecOptions(control_period=cfg.control_period, laban_strength=cfg.laban_strength)
    try:
        traj, report = execute(model, seq, env, opts)
    except IkFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IK
    except NoHitWithinTravel as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_HIT
    if cfg.trace_path is not None:
        write_trace(traj, cfg.trace_path, cfg.format)
    print(f"robot: {report.robot} ({model.dof} joints, laban strength {report.laban_strength.value})")
    print("tasks: " + ",".join(k.value for k in report.task_kinds))
    print(f"samples: {len(traj.samples)} ({traj.samples[-1].t:.2f} s)")
    print(f"ik iterations: {report.ik_iterations}")
    print("events: " + ", ".join(f"{tag}@{i}" for i, _, tag in report.events))
    for name, pose in report.final_object_poses.items():
        print(f"final {name}: position {_fmt(pose.position)} quaternion {_fmt(pose.quaternion)}")
    if env.obstacles:
        hits = check_clearance(traj, env, cfg.margin)
        print(f"clearance violations (margin {cfg.margin} m): {len(hits)}")
    if cfg.trace_path is not None:
        print(f"trace: {cfg.trace_path}")
    return EXIT_OK


def _fmt(values) -> str:
    return "(" + ", ".join(f"{v:.4f}" for v in values) + ")"


def cmd_validate(cfg: CliConfig) -> int:
    seq = parse_task_sequence(_require_file(cfg.demo_path, "--demo"), validate=False)
    report = validate_sequence(seq)
    if not report:
        print(f"ok: {len(seq.steps)} steps ({','.join(k.value for k in seq.kinds)})")
        return EXIT_OK
    for entry in report.entries:
        print(entry)
    return EXIT_ERROR


def cmd_classify(cfg: CliConfig, stdin=None) -> int:
    text = (stdin or sys.stdin).read()
    try:
        normals = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _Usage(f"normals are not valid JSON: {exc}") from None
    if not isinstance(normals, list) or not all(
            isinstance(n, list) and len(n) == 3 and all(isinstance(c, (int, float)) for c in n) for n in normals):
        raise _Usage("expected a JSON list of 3-vectors")
    try:
        kind = classify_normals(normals)
    except ValueError as exc:
        raise _Usage(str(exc)) from None
    print(kind)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfoexec", description="Run demonstration task sequences on robot models.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    ex = sub.add_parser("execute", help="execute a demonstration on a robot model")
    ex.add_argument("--robot", required=True)
    ex.add_argument("--demo", required=True)
    ex.add_argument("--env", required=True)
    ex.add_argument("--trace")
    ex.add_argument("--format", choices=["json", "csv"], default="json")
    ex.add_argument("--control-period", type=float)
    ex.add_argument("--laban-strength", choices=[s.value for s in ConstraintStrength])
    ex.add_argument("--margin", type=float, default=0.01)

    va = sub.add_parser("validate", help="check a demonstration file")
    va.add_argument("--demo", required=True)

    sub.add_parser("classify", help="classify contact normals read as JSON from stdin")
    return parser


def parse_config(argv=None) -> CliConfig:
    args = build_parser().parse_args(argv)
    opt = lambda name: resolve_path(getattr(args, name)) if getattr(args, name, None) else None  # noqa: E731
    strength = getattr(args, "laban_strength", None)
    return CliConfig(
        subcommand=args.subcommand,
        robot_path=opt("robot"),
        demo_path=opt("demo"),
        env_path=opt("env"),
        trace_path=Path(args.trace) if getattr(args, "trace", None) else None,
        format=getattr(args, "format", "json"),
        control_period=getattr(args, "control_period", None),
        laban_strength=ConstraintStrength(strength) if strength else None,
        margin=getattr(args, "margin", 0.01),
    )


COMMANDS = {"execute": cmd_execute, "validate": cmd_validate, "classify": cmd_classify}


def main(argv=None) -> int:
    cfg = parse_config(argv)
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (LfoError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
