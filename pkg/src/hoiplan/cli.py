"""Command-line surface: plan, render, score, postprocess, route.

Exit codes: 0 success, 1 domain error (structured JSON on stderr), 2 usage
error. With the mock backend and a fixed seed every command is deterministic
down to the output bytes.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import HoiplanError
from .geometry import Pose, matrix_to_quat, rot6d_decode
from .layout import load_scene_map, save_scene_map, solve
from .llm import HttpBackend, MockBackend, complete, render_prompt
from .motion import load_grasps, postprocess_motion
from .planner import (DEFAULT_AGENT_RADIUS, DEFAULT_RESOLUTION, DEFAULT_STRIDE, astar,
                      dependency_order, downsample, load_plan, plan_routes, rasterize,
                      save_plan)
from .relations import parse_plan, parse_relations
from .reward import (DEFAULT_BODY_WEIGHTS, BodyWeights, LengthMismatch, body_reward,
                     energy_reward, finite_difference_accels, load_weights, tracking_error)
from .scene import dump_json, load_motion, load_scene, save_motion
from .svg import render_scene_svg


def _write(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _parse_xy(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 'x,y'")
    return np.array([float(parts[0]), float(parts[1])])


def _parse_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 'left,right' joint indices")
    return {hand: int(p) for hand, p in zip(("left", "right"), parts) if p.strip() != ""}


def _parse_chains(text: str):
    chains = {}
    for hand, chunk in zip(("left", "right"), text.split(";")):
        chunk = chunk.strip()
        if not chunk:
            continue
        idx = [int(v) for v in chunk.split(",")]
        if len(idx) != 3:
            raise argparse.ArgumentTypeError("each chain is 'shoulder,elbow,wrist'")
        chains[hand] = tuple(idx)
    return chains


# ---------------------------------------------------------------------------
# commands

def cmd_plan(args) -> int:
    scene = load_scene(args.scene)
    bundle = render_prompt(scene, args.instruction)
    if args.backend == "mock":
        if not args.fixtures:
            raise HoiplanError("--fixtures is required with the mock backend")
        backend = MockBackend(args.fixtures)
    else:
        backend = HttpBackend.from_env()
    response = complete(bundle, backend)
    relations = parse_relations(response.relations_text)
    proposed = parse_plan(response.plan_text)

    warnings: list = []
    scene_map = solve(scene, relations, args.seed, warnings)
    corrections: list = []
    steps = dependency_order(scene, relations, proposed, corrections)
    agent_start = args.agent_start if args.agent_start is not None else None
    plan = plan_routes(scene, scene_map, steps, agent_radius=args.agent_radius,
                       resolution=args.resolution, agent_start=agent_start)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_scene_map(scene_map, out / "scene_map.json")
    save_plan(plan, out / "plan.json")
    summary = {
        "scene_map": str(out / "scene_map.json"),
        "plan": str(out / "plan.json"),
        "steps": [s.object_id for s in plan.steps],
        "corrections": corrections,
        "warnings": [{"kind": w.kind, "object": w.object_id, "message": w.message}
                     for w in warnings],
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_render(args) -> int:
    scene = load_scene(args.scene)
    scene_map = load_scene_map(args.scene_map) if args.scene_map else None
    plan = load_plan(args.plan) if args.plan else None
    _write(args.out, render_scene_svg(scene, scene_map, plan))
    return 0


def _joint_pose(motion, t, j) -> Pose:
    return Pose(motion.joints[t, j], matrix_to_quat(rot6d_decode(motion.joint_rot6d[t, j])))


def _score_report(ref, sim, weights: BodyWeights, joint_names) -> dict:
    if (ref.num_frames, ref.num_joints) != (sim.num_frames, sim.num_joints):
        raise LengthMismatch("reference and simulated motions disagree in shape")
    t = ref.num_frames
    if joint_names is None:
        # uniform weights when the skeleton is anonymous
        names = [f"joint{j}" for j in range(ref.num_joints)]
        weights = BodyWeights({n: 1.0 for n in names}, {n: 1.0 for n in names})
    else:
        names = joint_names
        if len(names) != ref.num_joints:
            raise LengthMismatch(f"--joint-names lists {len(names)} names for "
                                 f"{ref.num_joints} joints")

    # energy needs identifiable end effectors; an anonymous skeleton scores 1.0
    effectors = [j for j, n in enumerate(names)
                 if n in ("left_wrist", "right_wrist", "left_foot", "right_foot")]
    sim_accels = finite_difference_accels(sim.joints[:, effectors, :], sim.fps) \
        if effectors else np.zeros((0, 0, 3))

    body_sum = 0.0
    energy_sum = 0.0
    for i in range(t):
        sim_frame = {n: _joint_pose(sim, i, j) for j, n in enumerate(names)}
        ref_frame = {n: _joint_pose(ref, i, j) for j, n in enumerate(names)}
        sim_frame["object"] = sim.object_pose(i)
        ref_frame["object"] = ref.object_pose(i)
        body_sum += body_reward(sim_frame, ref_frame, weights, active_object="object")
        if effectors and 1 <= i <= t - 2:
            energy_sum += energy_reward(sim_accels[i - 1])
        else:
            energy_sum += 1.0
    r_body = body_sum / t
    r_hand = 1.0  # the motion format carries no finger tracks
    r_energy = energy_sum / t
    err = tracking_error(sim, ref)
    return {
        "frames": t,
        "tracking_error": {"e_h_cm": err.e_h_cm, "e_o_cm": err.e_o_cm},
        "reward": {
            "r_body": r_body,
            "r_hand": r_hand,
            "r_energy": r_energy,
            "total": 0.8 * r_body + 0.2 * r_hand + 0.05 * r_energy,
        },
    }


def cmd_score(args) -> int:
    ref = load_motion(args.ref)
    sim = load_motion(args.sim)
    weights = load_weights(args.weights) if args.weights else DEFAULT_BODY_WEIGHTS
    names = args.joint_names.split(",") if args.joint_names else None
    report = _score_report(ref, sim, weights, names)
    text = dump_json(report)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_postprocess(args) -> int:
    motion = load_motion(args.motion)
    grasps = load_grasps(args.grasp)
    wrist_joints = _parse_pair(args.wrist_joints) if args.wrist_joints else None
    arm_chains = _parse_chains(args.arm_chains) if args.arm_chains else None
    out_motion, diagnostics = postprocess_motion(
        motion, grasps, threshold=args.threshold, min_run=args.min_run,
        window=args.window, wrist_joints=wrist_joints, arm_chains=arm_chains)
    save_motion(out_motion, args.out)
    sidecar = Path(args.out).with_suffix(".diagnostics.json")
    _write(sidecar, dump_json(diagnostics))
    print(json.dumps({"motion": str(args.out), "diagnostics": str(sidecar)}, indent=2))
    return 0


def cmd_route(args) -> int:
    scene = load_scene(args.scene)
    grid = rasterize(scene, resolution=args.resolution, agent_radius=args.agent_radius)
    waypoints = astar(grid, args.start, args.goal)
    if args.stride:
        waypoints = downsample(waypoints, args.stride)
    text = dump_json({"route": [[x, y] for x, y in waypoints]})
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hoiplan",
                                     description="Scene layout solving, route planning, "
                                                 "and motion post-processing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="instruction + scene -> scene_map.json and plan.json")
    p.add_argument("scene")
    p.add_argument("--instruction", required=True)
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    p.add_argument("--fixtures", help="fixture directory for the mock backend")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION)
    p.add_argument("--agent-radius", type=float, default=DEFAULT_AGENT_RADIUS)
    p.add_argument("--agent-start", type=_parse_xy, default=None)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("render", help="scene (+ scene map, plan) -> top-down SVG")
    p.add_argument("scene")
    p.add_argument("scene_map", nargs="?", default=None)
    p.add_argument("--plan")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("score", help="reward + tracking error of sim vs reference motion")
    p.add_argument("--ref", required=True)
    p.add_argument("--sim", required=True)
    p.add_argument("--weights", help="body weight JSON; defaults to the built-in table")
    p.add_argument("--joint-names", help="comma list naming each joint column")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("postprocess", help="pin static phases, smooth seams, rebuild wrists")
    p.add_argument("--motion", required=True)
    p.add_argument("--grasp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--min-run", type=int, default=5)
    p.add_argument("--window", type=int, default=15)
    p.add_argument("--wrist-joints", help="'left,right' wrist joint indices")
    p.add_argument("--arm-chains", help="'ls,le,lw;rs,re,rw' joint index chains")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("route", help="single collision-free route between two points")
    p.add_argument("scene")
    p.add_argument("--start", type=_parse_xy, required=True)
    p.add_argument("--goal", type=_parse_xy, required=True)
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION)
    p.add_argument("--agent-radius", type=float, default=DEFAULT_AGENT_RADIUS)
    p.add_argument("--stride", type=float, default=DEFAULT_STRIDE)
    p.add_argument("--out")
    p.set_defaults(func=cmd_route)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HoiplanError as e:
        sys.stderr.write(json.dumps({"error": e.payload()}, default=str) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
