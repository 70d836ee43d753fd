"""Write the bundled demonstration and environment files.

Scenes are laid out in the robot workcell frame and then expressed in a
demonstration (camera) frame rotated 180 deg about z and shifted, so loading
the demos exercises the frame change.

    python scripts/build_fixtures.py [--out src/lfoexec/data]
"""
import argparse
import json
import re
from pathlib import Path

import numpy as np

from lfoexec.geometry import Pose

TOP_GRASP = (0.0, 0.0, 1.0, 0.0)  # hand z pointing down
DEMO_TO_ROBOT = Pose((1.2, 0.3, -0.1), (0.0, 0.0, 0.0, 1.0))
TO_DEMO = DEMO_TO_ROBOT.inverse()
UP = (0.0, 0.0, 1.0)


def _clean(values):
    return [round(float(v), 9) + 0.0 for v in values]


def pose(xyz):
    p = TO_DEMO @ Pose(xyz, TOP_GRASP)
    return {"position": _clean(p.position), "quaternion": _clean(p.quaternion)}


def vec(v):
    return _clean(TO_DEMO.rotate_vector(v))


def laban(upper, lower):
    return {"upper": upper, "lower": lower}


def step(kind, utterance, start, end, *, via=(), lab=("forward_middle", "forward_middle"), **extra):
    params = {
        "start_pose": pose(start),
        "end_pose": pose(end),
        "displacement": vec(np.subtract(end, start)),
        "via_points": [pose(v) for v in via],
        "laban_start": laban(*lab),
        "laban_end": laban(*lab),
    }
    for key, value in extra.items():
        params[key] = value if isinstance(value, str) else vec(value)
    return {"kind": kind, "utterance": utterance, "params": params}


def demo(steps):
    return {"frame_transform": {"position": list(DEMO_TO_ROBOT.position),
                                "quaternion": list(DEMO_TO_ROBOT.quaternion)},
            "steps": steps}


GRASP_LABAN = ("forward_middle", "forward_right_low")


def place_on_plate():
    box = (0.45, -0.15, 0.74)
    lifted = (0.45, -0.15, 0.86)
    above_plate = (0.50, 0.12, 0.86)
    placed = (0.50, 0.12, 0.755)
    return demo([
        step("Grasp", "grab the box", box, box, lab=GRASP_LABAN,
             grasp_type="active_force", approach_direction=(0, 0, -1)),
        step("PTG11", "pick it up", box, lifted),
        step("STG12", "carry it over to the plate", lifted, above_plate,
             via=[(0.48, -0.02, 0.88)], object_upright_axis=UP),
        step("PTG13", "put it on the plate", above_plate, placed, surface_normal=UP),
        step("Release", "let go", placed, placed),
    ])


def shelf():
    cup = (0.45, -0.22, 0.75)
    lifted = (0.45, -0.22, 0.93)
    front = (0.32, 0.06, 0.93)
    inside = (0.48, 0.06, 0.93)
    adjusted = (0.49, 0.07, 0.92)
    placed = (0.49, 0.07, 0.90)
    return demo([
        step("Grasp", "take the cup", cup, cup, lab=GRASP_LABAN,
             grasp_type="active_force", approach_direction=(0, 0, -1)),
        step("PTG11", "lift it", cup, lifted),
        step("STG12", "bring it round to the shelf", lifted, front,
             via=[(0.34, -0.10, 0.93)], object_upright_axis=UP),
        step("STG12", "slide it in", front, inside,
             via=[(0.40, 0.06, 0.93)], object_upright_axis=UP),
        step("STG12", "a bit to the back", inside, adjusted, object_upright_axis=UP),
        step("PTG13", "set it down", adjusted, placed, surface_normal=UP),
        step("Release", "let go", placed, placed),
    ])


def table_plate_env():
    return {
        "support_planes": [
            {"name": "table", "height": 0.70, "normal": [0, 0, 1], "bounds": [0.3, 1.0, -0.5, 0.5]},
            {"name": "plate", "height": 0.715, "normal": [0, 0, 1], "bounds": [0.40, 0.60, 0.02, 0.22]},
        ],
        "obstacles": [],
        "objects": [
            {"name": "box", "pose": {"position": [0.45, -0.15, 0.74], "quaternion": [1, 0, 0, 0]},
             "half_extents": [0.03, 0.03, 0.04]},
        ],
    }


def shelf_env():
    x0, x1, y0, y1 = 0.40, 0.62, -0.05, 0.20
    return {
        "support_planes": [
            {"name": "table", "height": 0.70, "normal": [0, 0, 1], "bounds": [0.2, 1.0, -0.5, 0.5]},
            {"name": "shelf_board", "height": 0.85, "normal": [0, 0, 1], "bounds": [x0, x1, y0, y1]},
        ],
        "obstacles": [
            {"name": "bottom_board", "min": [x0, y0 - 0.02, 0.83], "max": [x1 + 0.02, y1 + 0.02, 0.85]},
            {"name": "top_board", "min": [x0, y0 - 0.02, 1.02], "max": [x1 + 0.02, y1 + 0.02, 1.04]},
            {"name": "right_wall", "min": [x0, y0 - 0.02, 0.85], "max": [x1 + 0.02, y0, 1.02]},
            {"name": "left_wall", "min": [x0, y1, 0.85], "max": [x1 + 0.02, y1 + 0.02, 1.02]},
            {"name": "back_wall", "min": [x1, y0, 0.85], "max": [x1 + 0.02, y1, 1.02]},
        ],
        "objects": [
            {"name": "cup", "pose": {"position": [0.45, -0.22, 0.75], "quaternion": [1, 0, 0, 0]},
             "half_extents": [0.03, 0.03, 0.05]},
        ],
    }


FIXTURES = {
    "place_on_plate.demo": place_on_plate,
    "shelf.demo": shelf,
    "table_plate.env": table_plate_env,
    "shelf.env": shelf_env,
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src/lfoexec/data")
    args = ap.parse_args(argv)
    for name, fn in FIXTURES.items():
        text = json.dumps(fn(), indent=2)
        text = re.sub(r"\[\s+([-0-9.,e\s]+?)\s+\]", lambda m: "[" + " ".join(m.group(1).split()) + "]", text)
        (args.out / name).write_text(text + "\n", encoding="utf-8")
        print("wrote", args.out / name)


if __name__ == "__main__":
    main()
