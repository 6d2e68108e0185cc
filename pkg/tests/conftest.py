from pathlib import Path

import numpy as np
import pytest
from helpers import workspace_scene

from hoiplan.geometry import Pose, compose, quat_from_yaw, rot6d_encode
from hoiplan.llm import render_prompt, save_fixture
from hoiplan.motion import GraspPose
from hoiplan.scene import MotionSequence, save_scene

FIXTURES = Path(__file__).parent / "fixtures"

WORKSPACE_INSTRUCTION = "set up a workspace in front of the door"


@pytest.fixture
def workspace_files(tmp_path):
    """Scene JSON plus a mock-backend fixture dir keyed to the workspace prompt."""
    scene = workspace_scene()
    scene_path = tmp_path / "scene.json"
    save_scene(scene, scene_path)
    fixtures_dir = tmp_path / "llm_fixtures"
    bundle = render_prompt(scene, WORKSPACE_INSTRUCTION)
    save_fixture(fixtures_dir, bundle,
                 (FIXTURES / "llm_response_workspace.txt").read_text(encoding="utf-8"))
    return {"scene": scene_path, "fixtures": fixtures_dir, "out": tmp_path / "out",
            "instruction": WORKSPACE_INSTRUCTION}


def build_interaction_motion(t=90, fps=30, contact_range=(30, 60), noise=0.01, seed=0):
    """Synthetic pick-and-carry motion for the right hand with a known grasp.

    The object drifts slightly in its static phases (as a generator would
    produce), travels from A to B during contact, and the wrist joint tracks
    the grasp with a little error. Joints: 0 root, 1 shoulder, 2 elbow,
    3 wrist.
    """
    rng = np.random.default_rng(seed)
    s, e = contact_range
    grasp = GraspPose(Pose(np.array([0.05, -0.3, 0.1]), quat_from_yaw(0.4)),
                      finger_pose=rng.uniform(size=5))

    pose_a = Pose(np.array([1.0, 0.5, 0.4]), quat_from_yaw(0.2))
    pose_b = Pose(np.array([-0.8, 1.2, 0.4]), quat_from_yaw(-0.9))

    object_poses = []
    for i in range(t):
        if i < s:
            jitter = noise * np.sin(i * 0.7) * np.array([1.0, -0.5, 0.0])
            object_poses.append(Pose(pose_a.position + jitter, pose_a.orientation))
        elif i >= e:
            jitter = noise * np.cos(i * 0.3) * np.array([0.5, 1.0, 0.0])
            object_poses.append(Pose(pose_b.position + jitter, pose_b.orientation))
        else:
            u = (i - s) / max(1, e - s - 1)
            blend = 3 * u * u - 2 * u * u * u
            pos = (1 - blend) * pose_a.position + blend * pose_b.position \
                + np.array([0.0, 0.0, 0.3 * math_sin_pi(u)])
            yaw = (1 - blend) * 0.2 + blend * -0.9
            object_poses.append(Pose(pos, quat_from_yaw(yaw)))

    joints = np.zeros((t, 4, 3))
    rot6d = np.tile(np.array([1.0, 0, 0, 0, 1.0, 0]), (t, 4, 1))
    for i in range(t):
        wrist_world = compose(object_poses[i], grasp.wrist_pose)
        wrist_pos = wrist_world.position
        if not s <= i < e:
            wrist_pos = wrist_pos + noise * np.array([np.sin(i * 0.5), 0.2, 0.1])
        shoulder = wrist_pos + np.array([0.15, 0.5, 0.35])
        elbow = shoulder + 0.55 * (wrist_pos - shoulder) + np.array([0.0, 0.0, -0.08])
        joints[i, 0] = shoulder + np.array([0.0, 0.1, -0.4])
        joints[i, 1] = shoulder
        joints[i, 2] = elbow
        joints[i, 3] = wrist_pos
        rot6d[i, 3] = rot6d_encode(wrist_world.orientation)

    contact = np.zeros((t, 2))
    contact[s:e, 1] = 1.0
    motion = MotionSequence(fps, joints, rot6d,
                            np.array([p.position for p in object_poses]),
                            np.array([p.orientation for p in object_poses]),
                            contact)
    return motion, grasp


def math_sin_pi(u):
    import math
    return math.sin(math.pi * u)
