import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfoexec.errors import BranchingChain, JointLimitViolation, MalformedFile, NoConvergence, SchemaViolation
from lfoexec.geometry import Pose, rotation_angle
from lfoexec.kinematics import (JointType, fk, initial_posture, jacobian,
                                load_robot, numerical_jacobian, robot_to_dict, solve_ik)
from lfoexec.laban import ConstraintStrength, LabanDirection, LabanPose, joint_ranges
from conftest import data_path, planar_two_link, random_q
from oracles import two_link_ik


def test_bundled_models(nextage, fetch):
    assert nextage.dof == 6 and all(j.type is JointType.REVOLUTE for j in nextage.joints)
    assert fetch.dof == 8 and fetch.joints[0].type is JointType.PRISMATIC
    assert all(j.type is JointType.REVOLUTE for j in fetch.joints[1:])


def test_description_round_trip(nextage, fetch):
    for model in (nextage, fetch):
        again = load_robot(json.dumps(robot_to_dict(model)))
        assert again.joints == model.joints
        assert again.laban_table == model.laban_table


def test_two_children_on_one_link():
    desc = json.loads(data_path("nextage_like.robot").read_text())
    desc["joints"][2]["parent"] = desc["joints"][1]["parent"]
    with pytest.raises(BranchingChain):
        load_robot(json.dumps(desc))


def test_schema_errors():
    desc = planar_two_link()
    desc["joints"][0]["limits"] = [1.0, -1.0]
    with pytest.raises(SchemaViolation):
        load_robot(json.dumps(desc))
    with pytest.raises(MalformedFile):
        load_robot(b"{not json")
    desc = planar_two_link()
    desc["joints"][0]["axis"] = [0, 0, 2]
    with pytest.raises(SchemaViolation):
        load_robot(json.dumps(desc))


def test_planar_fk(planar):
    assert np.allclose(fk(planar, [0, 0]).p, [2, 0, 0])
    assert np.allclose(fk(planar, [np.pi / 2, 0]).p, [0, 2, 0], atol=1e-12)


def test_fk_rejects_out_of_range(planar):
    with pytest.raises(JointLimitViolation):
        fk(planar, [3.5, 0])


def test_lifter_superposition(fetch, rng):
    q = random_q(fetch, rng, 1)[0]
    q[0] = 0.0
    a = fk(fetch, q)
    q[0] = 0.1
    b = fk(fetch, q)
    assert np.allclose(b.p - a.p, [0, 0, 0.1], atol=1e-12)
    assert rotation_angle(a.rotation, b.rotation) < 1e-12


def test_fixed_point_takes_no_iterations(robots, rng):
    for model in robots.values():
        q0 = random_q(model, rng, 1)[0]
        sol = solve_ik(model, fk(model, q0), q0)
        assert sol.iterations == 0
        assert np.array_equal(sol.q, q0)


def test_two_link_matches_closed_form(planar):
    target_xy = (np.sqrt(2.0), 0.0)
    analytic = two_link_ik(*target_xy)
    assert any(np.allclose(a, [np.pi / 4, -np.pi / 2]) for a in analytic)
    for a in analytic:
        target = fk(planar, a)
        sol = solve_ik(planar, target, [0.3, 0.3])
        assert np.linalg.norm(sol.q - a) < 1e-2
        assert sol.pos_err < 1e-3


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 1.9), st.floats(-np.pi, np.pi), st.booleans(),
       st.tuples(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3)))
def test_two_link_random_targets(planar, r, phi, elbow_up, nudge):
    analytic = two_link_ik(r * np.cos(phi), r * np.sin(phi))[int(elbow_up)]
    analytic = (analytic + np.pi) % (2 * np.pi) - np.pi
    if np.any(np.abs(analytic) > 2.7):
        return
    target = fk(planar, analytic)
    sol = solve_ik(planar, target, analytic + np.asarray(nudge))
    assert np.allclose(fk(planar, sol.q).p, target.p, atol=1e-3)
    assert np.linalg.norm(sol.q - analytic) < 1e-2


def test_out_of_reach_error_is_distance_minus_reach(planar):
    target = Pose((10.0, 0.0, 0.0))
    with pytest.raises(NoConvergence) as info:
        solve_ik(planar, target, [0.4, -0.4])
    assert abs(info.value.pos_err - (10.0 - 2.0)) < 1e-3
    assert np.all(np.abs(info.value.best_q) <= 3.0)


@pytest.mark.parametrize("name", ["nextage_like", "fetch_like"])
def test_jacobian_matches_central_differences(robots, name, rng):
    model = robots[name]
    lim = model.limits
    for q in random_q(model, rng, 20):
        q = np.clip(q, lim[:, 0] + 1e-5, lim[:, 1] - 1e-5)
        assert np.max(np.abs(jacobian(model, q) - numerical_jacobian(model, q))) < 1e-5


@pytest.mark.parametrize("name", ["nextage_like", "fetch_like"])
def test_round_trip_small_sample(robots, name, rng):
    model = robots[name]
    seeds = random_q(model, rng, 20)
    for q0, seed in zip(random_q(model, rng, 20), seeds):
        try:
            sol = solve_ik(model, fk(model, q0), seed)
            assert sol.pos_err < 1e-3 and sol.rot_err < np.radians(0.5)
            q = sol.q
        except NoConvergence as exc:
            q = exc.best_q
        assert np.all(q >= model.limits[:, 0]) and np.all(q <= model.limits[:, 1])


def test_returns_respect_narrow_bounds(nextage, rng):
    bounds = {n: (lo / 4, hi / 4) for n, (lo, hi) in zip(nextage.joint_names, nextage.limits)}
    target = fk(nextage, random_q(nextage, rng, 1)[0])
    try:
        q = solve_ik(nextage, target, np.zeros(6), bounds).q
    except NoConvergence as exc:
        q = exc.best_q
    B = nextage.bounds_array(bounds)
    assert np.all(q >= B[:, 0]) and np.all(q <= B[:, 1])


def test_solver_is_deterministic(fetch, rng):
    target = fk(fetch, random_q(fetch, rng, 1)[0])
    a = solve_ik(fetch, target, np.zeros(8))
    b = solve_ik(fetch, target, np.zeros(8))
    assert np.array_equal(a.q, b.q)


LABAN = LabanPose(LabanDirection("forward_middle"), LabanDirection("forward_right_low"))
REACH = Pose((0.45, -0.15, 0.84), (0, 0, 1, 0))


def test_none_strength_is_plain_solve_from_midpoint(fetch):
    a = initial_posture(fetch, REACH, LABAN, ConstraintStrength.NONE)
    b = solve_ik(fetch, REACH, fetch.limits.mean(axis=1))
    assert np.array_equal(a.q, b.q)


def test_full_strength_keeps_constrained_joints_in_windows(fetch):
    sol = initial_posture(fetch, REACH, LABAN, ConstraintStrength.FULL)
    bounds = joint_ranges(LABAN, fetch.laban_table, ConstraintStrength.FULL)
    for name, value in zip(fetch.joint_names, sol.q):
        lo, hi = bounds[name]
        assert lo <= value <= hi


def test_elbow_strength_keeps_elbow_non_negative(nextage):
    sol = initial_posture(nextage, REACH, LABAN, ConstraintStrength.ELBOW)
    assert sol.q[nextage.joint_index("r_elbow")] >= 0.0


def test_default_strengths(nextage, fetch):
    assert nextage.default_strength() is ConstraintStrength.ELBOW
    assert fetch.default_strength() is ConstraintStrength.FULL
