import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from lfoexec.errors import MissingParam, NoHitWithinTravel
from lfoexec.executor import Environment, SupportPlane, simulate_effort
from lfoexec.geometry import Pose, rotation_angle
from lfoexec.laban import LabanDirection, LabanPose
from lfoexec.skills import (DESCENT_STEP, EFFORT_BASELINE, GRASP_APERTURE, HandTarget, SkillState, densify,
                            grasp_waypoints, landing_start, ptg3_waypoints, ptg5_waypoints, ptg11_waypoints,
                            ptg13_step, release_waypoints, stg12_waypoints)
from lfoexec.taskir import GraspType, SkillParams

LP = LabanPose(LabanDirection("forward_middle"), LabanDirection("forward_middle"))
DOWN = (0.0, 0.0, 1.0, 0.0)


def params(start=(0.5, 0.0, 0.8), end=None, disp=(0.0, 0.0, 0.0), quat=DOWN, **kw):
    s = Pose(start, quat)
    e = Pose(end if end is not None else np.add(start, disp), quat)
    return SkillParams(s, e, tuple(disp), LP, LP, **kw)


def positions(targets):
    return np.array([t.pose.position for t in targets])


# --- grasp / release ---------------------------------------------------------

def test_pregrasp_offset():
    out = grasp_waypoints(params(grasp_type=GraspType.ACTIVE_FORCE, approach_direction=(0, 0, -1)))
    assert np.allclose(out[0].pose.p, [0.5, 0, 0.9])
    assert out[0].aperture == 1.0


@pytest.mark.parametrize("kind, closed", [(GraspType.PASSIVE_FORCE, 0.15), (GraspType.ACTIVE_FORCE, 0.05),
                                          (GraspType.LAZY, 0.35)])
def test_grasp_closure_levels(kind, closed):
    out = grasp_waypoints(params(grasp_type=kind, approach_direction=(0, 0, -1)))
    assert out[-1].aperture == closed == GRASP_APERTURE[kind]
    apertures = [t.aperture for t in out]
    assert all(a >= b for a, b in zip(apertures, apertures[1:]))


def test_grasp_needs_its_parameters():
    with pytest.raises(MissingParam):
        grasp_waypoints(params(grasp_type=GraspType.LAZY))


def test_release_retreats_up_without_approach():
    out = release_waypoints(params(start=(0.6, 0.0, 0.75)))
    assert np.allclose(out[-1].pose.p, [0.6, 0, 0.85])
    assert out[-1].aperture == 1.0
    assert all(t.pose.quaternion == DOWN for t in out)


def test_release_backs_out_along_approach():
    out = release_waypoints(params(start=(0.6, 0.0, 0.75), approach_direction=(1.0, 0.0, 0.0)))
    assert np.allclose(out[-1].pose.p, [0.5, 0, 0.75])


# --- densification ---------------------------------------------------------------

def test_ptg11_worked_example():
    out = ptg11_waypoints(params(disp=(0.0, 0.0, 0.12)))
    assert np.allclose(positions(out)[:, 2], [0.8, 0.86, 0.92])
    assert np.allclose(out[-1].pose.p, [0.5, 0, 0.92])


def test_zero_displacement_single_waypoint():
    p = params()
    out = ptg11_waypoints(p)
    assert len(out) == 1 and out[0].pose == p.start_hand_pose


@given(st.lists(st.tuples(*[st.floats(-1, 1)] * 3), min_size=2, max_size=5))
def test_densify_spacing_and_vertices(raw):
    pts = [np.array(p) for p in raw]
    idx = densify(pts)
    out = [pts[s] + f * (pts[s + 1] - pts[s]) if f else pts[s] for s, f in idx]
    gaps = np.linalg.norm(np.diff(out, axis=0), axis=1)
    assert np.all(gaps <= 0.1 + 1e-9)
    for v in pts[1:]:
        assert min(np.linalg.norm(np.asarray(out) - v, axis=1)) < 1e-12


quats = st.integers(0, 2**31 - 1).map(lambda s: tuple(Rotation.random(random_state=s).as_quat(scalar_first=True)))
disps = st.tuples(*[st.floats(-0.5, 0.5)] * 3)


@settings(max_examples=50)
@given(quats, disps)
def test_ptg11_holds_orientation_exactly(q, d):
    out = ptg11_waypoints(params(quat=q, disp=d))
    assert all(t.pose.quaternion == out[0].pose.quaternion for t in out)
    assert np.allclose(out[-1].pose.p, np.add((0.5, 0, 0.8), d), atol=1e-12)
    assert np.all(np.linalg.norm(np.diff(positions(out), axis=0), axis=1) <= 0.1 + 1e-9)


@settings(max_examples=50)
@given(quats, disps)
def test_waypoints_start_at_current_pose(q, d):
    here = Pose((0.3, -0.1, 0.9), q)
    state = SkillState(here, aperture=0.05)
    p = params(disp=d, object_upright_axis=(0, 0, 1), grasp_type=GraspType.LAZY, approach_direction=(0, 0, -1))
    for skill in (ptg11_waypoints, ptg3_waypoints, stg12_waypoints, release_waypoints, grasp_waypoints):
        first = skill(p, state)[0].pose
        assert np.allclose(first.p, here.p, atol=1e-9)
        assert rotation_angle(first.rotation, here.rotation) < 1e-9


def test_ptg3_stays_on_axis():
    out = ptg3_waypoints(params(disp=(0.2, 0.0, 0.0)))
    P = positions(out)
    assert np.allclose(P[-1] - P[0], [0.2, 0, 0])
    assert np.all(P[:, 1:] == P[0, 1:])


# --- STG12 ---------------------------------------------------------------

def test_stg12_identity_carry_stays_identity():
    out = stg12_waypoints(params(quat=(1, 0, 0, 0), disp=(0.3, 0.1, 0.0), object_upright_axis=(0, 0, 1)))
    assert all(rotation_angle(t.pose.rotation, Rotation.identity()) == 0.0 for t in out)


def test_stg12_passes_via_points_verbatim():
    via = (Pose((0.55, 0.1, 0.85), DOWN), Pose((0.6, 0.2, 0.9), DOWN))
    out = stg12_waypoints(params(disp=(0.1, 0.3, 0.0), via_points=via, object_upright_axis=(0, 0, 1)))
    for v in via:
        assert any(t.pose.position == v.position for t in out)


@settings(max_examples=50)
@given(quats, quats, disps)
def test_stg12_upright_axis_is_vertical(q_start, q_via, d):
    upright = Rotation.from_quat(q_start, scalar_first=True).apply([0.3, 0.0, 0.954])
    upright /= np.linalg.norm(upright)
    via = (Pose((0.6, 0.0, 0.9), q_via),)
    out = stg12_waypoints(params(quat=q_start, disp=d, via_points=via, object_upright_axis=tuple(upright)))
    axis_in_hand = Rotation.from_quat(q_start, scalar_first=True).inv().apply(upright)
    for t in out:
        world = t.pose.rotation.apply(axis_in_hand)
        assert math.atan2(np.linalg.norm(np.cross(world, [0, 0, 1])), world[2]) < 1e-6


def test_stg12_needs_upright_axis():
    with pytest.raises(MissingParam):
        stg12_waypoints(params(disp=(0.1, 0, 0)))


# --- PTG5 ----------------------------------------------------------------

def test_ptg5_quarter_turn_chord():
    hinge = (Pose((0.2, 0.0, 0.8)),)
    out = ptg5_waypoints(params(start=(0.5, 0.0, 0.8), disp=(0.0, 0.0, math.pi / 2), via_points=hinge,
                                surface_normal=(0, 0, 1)))
    assert abs(np.linalg.norm(out[-1].pose.p - out[0].pose.p) - 0.3 * math.sqrt(2)) < 1e-9
    assert np.allclose(out[-1].pose.p, [0.2, 0.3, 0.8])
    radii = np.linalg.norm(positions(out) - [0.2, 0, 0.8], axis=1)
    assert np.allclose(radii, 0.3)
    assert np.all(np.linalg.norm(np.diff(positions(out), axis=0), axis=1) <= 0.1 + 1e-9)


def test_ptg5_needs_hinge_point():
    with pytest.raises(MissingParam):
        ptg5_waypoints(params(disp=(0, 0, 1.0), surface_normal=(0, 0, 1)))


# --- PTG13 -----------------------------------------------------------------

def _place(surface=None, start_z=0.85, end_z=0.75):
    """Run the placing stepper against the simulated effort of an empty hand."""
    p = params(start=(0.5, 0.0, start_z), end=(0.5, 0.0, end_z), surface_normal=(0, 0, 1))
    env = Environment(support_planes=(surface,) if surface else ())
    state = SkillState(p.start_hand_pose)
    commanded = []
    while True:
        out = ptg13_step(p, state)
        if out.done:
            return p, out, commanded
        commanded.append(out.target.pose)
        effort = simulate_effort(env, out.target)
        state = SkillState(out.target.pose, effort, state.step_index + 1)


def test_landing_start_height_is_demo_midpoint():
    p = params(start=(0.4, 0.1, 0.85), end=(0.5, 0.0, 0.75), surface_normal=(0, 0, 1))
    assert np.allclose(landing_start(p).p, [0.5, 0.0, 0.80])


def test_descends_onto_surface():
    plane = SupportPlane("table", 0.75, bounds=(0.0, 1.0, -1.0, 1.0))
    _, out, commanded = _place(plane)
    descents = len(commanded) - 1
    assert commanded[0].p[2] == pytest.approx(0.80)
    assert descents >= math.ceil(0.05 / DESCENT_STEP - 1e-9)
    assert abs(out.target.pose.p[2] - 0.75) <= DESCENT_STEP
    z = [c.p[2] for c in commanded]
    assert all(a >= b for a, b in zip(z, z[1:]))


def test_hit_is_absorbing():
    plane = SupportPlane("table", 0.75, bounds=(0.0, 1.0, -1.0, 1.0))
    p, out, _ = _place(plane)
    again = ptg13_step(p, SkillState(out.target.pose, 1.0, 99))
    assert again.done and again.target == out.target and again.note == "hit_detected"


def test_pre_contact_finishes_without_moving():
    p = params(end=(0.5, 0.0, 0.7), surface_normal=(0, 0, 1))
    out = ptg13_step(p, SkillState(p.start_hand_pose, effort=1.0))
    assert out.done and out.target.pose == p.start_hand_pose


def test_no_surface_gives_up_after_sixty_steps():
    with pytest.raises(NoHitWithinTravel) as info:
        _place(None)
    assert info.value.steps == 60
    assert info.value.travel == pytest.approx(0.30)


def test_surface_outside_bounds_is_missed():
    plane = SupportPlane("far", 0.75, bounds=(2.0, 3.0, 2.0, 3.0))
    with pytest.raises(NoHitWithinTravel):
        _place(plane)


def test_baseline_constant():
    assert EFFORT_BASELINE == 0.1
    assert HandTarget(Pose()).aperture == 1.0
