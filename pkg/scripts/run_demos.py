"""Replay both bundled demonstrations on both bundled robots and write traces.

    python scripts/run_demos.py [--out traces] [--format json|csv]
"""
import argparse
import time
from pathlib import Path

import numpy as np

from lfoexec.cli import resolve_path
from lfoexec.executor import check_clearance, execute, load_environment, write_trace
from lfoexec.kinematics import load_robot
from lfoexec.taskir import parse_task_sequence

SCENES = [("place_on_plate.demo", "table_plate.env"), ("shelf.demo", "shelf.env")]
ROBOTS = ["nextage_like.robot", "fetch_like.robot"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("traces"))
    ap.add_argument("--format", choices=["json", "csv"], default="json")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    for demo_name, env_name in SCENES:
        seq = parse_task_sequence(resolve_path(demo_name))
        env = load_environment(resolve_path(env_name))
        for robot_name in ROBOTS:
            model = load_robot(resolve_path(robot_name))
            t0 = time.perf_counter()
            traj, report = execute(model, seq, env)
            elapsed = time.perf_counter() - t0
            path = args.out / f"{Path(demo_name).stem}__{model.name}.{args.format}"
            write_trace(traj, path, args.format)
            obj, pose = next(iter(report.final_object_poses.items()))
            print(f"{demo_name:22s} {model.name:13s} {len(traj.samples):4d} samples "
                  f"{traj.samples[-1].t:5.2f} s  ik_iters={report.ik_iterations:5d}  "
                  f"events={[tag for _, _, tag in report.events]}  "
                  f"{obj}@{np.round(pose.p, 3).tolist()}  clearance_hits={len(check_clearance(traj, env))}  "
                  f"({elapsed:.2f} s wall) -> {path}")


if __name__ == "__main__":
    main()
