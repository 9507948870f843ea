"""Command-line front end: track, eval, synth, sweep, mda-oracle.

Every command resolves its parameters, runs deterministically and writes a
JSON run manifest next to its primary output, so any run can be reproduced
from the manifest alone. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .base_tracker import TrackerParams
from .base_tracker import run as run_base
from .mda_dp import MdaInstance, avs_solve, exact_solve
from .metrics import LabeledBox, evaluate
from .motio import (
    DataError,
    attach_features,
    read_detections,
    read_features,
    read_gt,
    write_detections,
    write_features,
    write_gt,
    write_results,
)
from .rollout import AdpConfig, Variant
from .rollout import run as run_adp
from .synthworld import ScenarioConfig, generate, occlusion_preset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_EVAL_HEADER = "sequence,IDF1,MOTA,FP,FN,IDSW,Frag"
_SWEEP_HEADER = "param,value,IDF1,MOTA,FP,FN,IDSW,Frag,runtime_s"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_manifest(out_path: Path, command: str, args: dict, inputs: list, outputs: list) -> None:
    manifest = {
        "tool": "adptrack",
        "version": __version__,
        "command": command,
        "args": args,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
    }
    out_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest_args(ns: argparse.Namespace) -> dict:
    args = {k: v for k, v in vars(ns).items() if k != "func"}
    return args


def _load_sequence(dets_path, features_path):
    frames = read_detections(dets_path)
    table = read_features(features_path, frames)
    return attach_features(frames, table)


def _tracker_params(ns) -> TrackerParams:
    return TrackerParams(match_threshold=ns.match_threshold, max_age=ns.max_age)


def _adp_config(ns) -> AdpConfig:
    return AdpConfig(
        alpha=ns.alpha,
        horizon=ns.horizon,
        window=ns.window,
        beta=ns.beta,
        variant=Variant(ns.variant),
        cand_iou=ns.cand_iou,
        cand_app=ns.cand_app,
        crowd_ratio=ns.crowd_ratio,
        enable_candidate_filter=not ns.no_candidate_filter,
        enable_crowd_heuristic=not ns.no_crowd,
    )


def cmd_track(ns) -> int:
    frames = _load_sequence(ns.dets, ns.features)
    if not frames:
        raise DataError(f"{ns.dets}: no frames to track")
    params = _tracker_params(ns)
    if ns.mode == "base":
        rows = run_base(frames, params)
    else:
        rows = run_adp(frames, params, _adp_config(ns))
    write_results(ns.out, rows)
    _write_manifest(Path(str(ns.out) + ".manifest.json"), "track", _manifest_args(ns), [ns.dets, ns.features], [ns.out])
    print(f"wrote {ns.out}: {len(rows)} rows")
    return EXIT_OK


def _format_report(name, report) -> str:
    return (
        f"{name},{report.idf1:.6f},{report.mota:.6f},"
        f"{report.fp},{report.fn},{report.idsw},{report.frag}"
    )


def cmd_eval(ns) -> int:
    gt = read_gt(ns.gt)
    res = read_gt(ns.res)
    report = evaluate(gt, res, ns.iou_thresh)
    name = ns.name if ns.name else Path(ns.res).stem
    line = _format_report(name, report)
    Path(ns.out).write_text(_EVAL_HEADER + "\n" + line + "\n", encoding="utf-8")
    if ns.json_out:
        payload = {
            "sequence": name,
            "IDF1": report.idf1,
            "MOTA": report.mota,
            "FP": report.fp,
            "FN": report.fn,
            "IDSW": report.idsw,
            "Frag": report.frag,
        }
        Path(ns.json_out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(
        Path(str(ns.out) + ".manifest.json"),
        "eval",
        _manifest_args(ns),
        [ns.gt, ns.res],
        [ns.out] + ([ns.json_out] if ns.json_out else []),
    )
    print(_EVAL_HEADER)
    print(line)
    return EXIT_OK


def _emit_scenario(cfg: ScenarioConfig, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = generate(cfg)
    gt_path = out_dir / "gt.txt"
    det_path = out_dir / "det.txt"
    feat_path = out_dir / "features.csv"
    write_gt(gt_path, list(scenario.gt))
    write_detections(det_path, list(scenario.det_frames))
    write_features(feat_path, list(scenario.det_frames))
    return [gt_path, det_path, feat_path]


def cmd_synth(ns) -> int:
    out_dir = Path(ns.out_dir)
    explicit = [ns.seed, ns.frames, ns.objects, ns.crossings, ns.noise, ns.feature_dim, ns.drop_prob]
    if ns.preset:
        if any(v is not None for v in explicit):
            raise DataError("--preset cannot be combined with explicit scenario flags")
        if ns.preset != "occlusion-20":
            raise DataError(f"unknown preset {ns.preset!r}")
        outputs = []
        for i, cfg in enumerate(occlusion_preset()):
            outputs.extend(_emit_scenario(cfg, out_dir / f"occ_{i:02d}"))
        _write_manifest(out_dir / "manifest.json", "synth", _manifest_args(ns), [], outputs)
        print(f"wrote {len(outputs)} files under {out_dir}")
        return EXIT_OK

    cfg = ScenarioConfig(
        seed=ns.seed if ns.seed is not None else 1,
        frames=ns.frames if ns.frames is not None else 64,
        identities=ns.objects if ns.objects is not None else 4,
        crossings=ns.crossings if ns.crossings is not None else 0,
        det_noise_px=ns.noise if ns.noise is not None else 0.0,
        feature_dim=ns.feature_dim if ns.feature_dim is not None else 16,
        drop_prob_occluded=ns.drop_prob if ns.drop_prob is not None else 0.0,
        feature_noise=ns.feature_noise,
        occlusion_iou=ns.occlusion_iou,
        mix_features=not ns.no_mix,
    )
    outputs = _emit_scenario(cfg, out_dir)
    _write_manifest(out_dir / "manifest.json", "synth", _manifest_args(ns), [], outputs)
    print(f"wrote scenario under {out_dir}")
    return EXIT_OK


_SWEEP_PARAMS = ("alpha", "horizon", "window", "beta")


def _sweep_worker(task):
    dets_path, features_path, gt_path, ns_dict, param, value = task
    ns = argparse.Namespace(**ns_dict)
    frames = _load_sequence(dets_path, features_path)
    params = _tracker_params(ns)
    cfg_kwargs = {
        "alpha": ns.alpha,
        "horizon": ns.horizon,
        "window": ns.window,
        "beta": ns.beta,
        "variant": Variant(ns.variant),
        "cand_iou": ns.cand_iou,
        "cand_app": ns.cand_app,
        "crowd_ratio": ns.crowd_ratio,
        "enable_candidate_filter": not ns.no_candidate_filter,
        "enable_crowd_heuristic": not ns.no_crowd,
    }
    cfg_kwargs[param] = int(value) if param in ("horizon", "window") else value
    cfg = AdpConfig(**cfg_kwargs)
    start = time.perf_counter()
    rows = run_adp(frames, params, cfg)
    runtime = time.perf_counter() - start
    gt = read_gt(gt_path)
    pred_boxes = [LabeledBox(frame=f, id=tid, bbox=det.bbox) for f, tid, det in rows]
    report = evaluate(gt, pred_boxes, 0.5)
    return {
        "param": param,
        "value": value,
        "IDF1": report.idf1,
        "MOTA": report.mota,
        "FP": report.fp,
        "FN": report.fn,
        "IDSW": report.idsw,
        "Frag": report.frag,
        "runtime_s": runtime,
    }


def cmd_sweep(ns) -> int:
    if ns.param not in _SWEEP_PARAMS:
        raise DataError(f"unknown sweep parameter {ns.param!r}, expected one of {_SWEEP_PARAMS}")
    try:
        values = [float(v) for v in ns.values.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise DataError(f"bad --values list: {exc}") from None
    if not values:
        raise DataError("--values must list at least one value")
    if ns.param in ("horizon", "window"):
        for v in values:
            if v != int(v) or v < 1:
                raise DataError(f"{ns.param} values must be positive integers, got {v}")

    ns_dict = {k: v for k, v in vars(ns).items() if k != "func"}
    tasks = [(ns.dets, ns.features, ns.gt, ns_dict, ns.param, v) for v in values]
    if len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(4, len(tasks))) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    else:
        rows = [_sweep_worker(tasks[0])]

    lines = [_SWEEP_HEADER]
    for row in rows:
        lines.append(
            f"{row['param']},{row['value']:g},{row['IDF1']:.6f},{row['MOTA']:.6f},"
            f"{row['FP']},{row['FN']},{row['IDSW']},{row['Frag']},{row['runtime_s']:.3f}"
        )
    Path(ns.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(Path(str(ns.out) + ".manifest.json"), "sweep", _manifest_args(ns), [ns.dets, ns.features, ns.gt], [ns.out])
    print("\n".join(lines))
    return EXIT_OK


def cmd_mda_oracle(ns) -> int:
    if ns.m < 1 or ns.m > 4:
        raise DataError(f"--m must lie in 1..4, got {ns.m}")
    if ns.n_layers < 2 or ns.n_layers > 5:
        raise DataError(f"--n-layers must lie in 2..5, got {ns.n_layers}")
    if ns.instances < 1:
        raise DataError(f"--instances must be >= 1, got {ns.instances}")

    rng = np.random.default_rng(ns.seed)
    stages = ns.n_layers - 1
    lines = ["instance,exact,avs,gap"]
    max_gap = 0.0
    for idx in range(ns.instances):
        arcs = [rng.uniform(0.0, 1.0, size=(ns.m, ns.m)) for _ in range(stages)]
        if ns.bonus:
            bonus_mat = rng.uniform(0.0, 2.0, size=(ns.m, ns.m))
            inst = MdaInstance(arcs, grouping_bonus=lambda chain, b=bonus_mat: float(b[chain[0], chain[-1]]))
        else:
            inst = MdaInstance(arcs)
        _, exact_value = exact_solve(inst)
        _, avs_value = avs_solve(inst, lambda k, hist, a=arcs: a[k])
        gap = exact_value - avs_value
        max_gap = max(max_gap, gap)
        if gap < -1e-9:
            raise DataError(f"instance {idx}: forward pass beat the exact optimum (gap {gap})")
        if not ns.bonus and abs(gap) > 1e-9:
            raise DataError(f"instance {idx}: additive instance has nonzero gap {gap}")
        lines.append(f"{idx},{exact_value:.9g},{avs_value:.9g},{gap:.9g}")
    lines.append(f"# instances={ns.instances} family={'bonus' if ns.bonus else 'additive'} max_gap={max_gap:.9g}")

    text = "\n".join(lines) + "\n"
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
        _write_manifest(Path(str(ns.out) + ".manifest.json"), "mda-oracle", _manifest_args(ns), [], [ns.out])
    print(text, end="")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="adptrack", description=__doc__)
    parser.add_argument("--version", action="version", version=f"adptrack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run the base or rollout tracker on a detection file")
    p_track.add_argument("--dets", required=True)
    p_track.add_argument("--features", required=True)
    p_track.add_argument("--out", required=True)
    p_track.add_argument("--mode", choices=("base", "adp"), default="adp")
    p_track.add_argument("--variant", choices=("main", "f1", "f2", "f3"), default="main")
    p_track.add_argument("--alpha", type=float, default=0.25)
    p_track.add_argument("--horizon", type=int, default=15)
    p_track.add_argument("--window", type=int, default=5)
    p_track.add_argument("--beta", type=float, default=0.15)
    p_track.add_argument("--cand-iou", type=float, default=0.3)
    p_track.add_argument("--cand-app", type=float, default=0.25)
    p_track.add_argument("--crowd-ratio", type=float, default=0.5)
    p_track.add_argument("--no-candidate-filter", action="store_true")
    p_track.add_argument("--no-crowd", action="store_true")
    p_track.add_argument("--match-threshold", type=float, default=0.2)
    p_track.add_argument("--max-age", type=int, default=30)
    p_track.set_defaults(func=cmd_track)

    p_eval = sub.add_parser("eval", help="score a result file against ground truth")
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--res", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--json-out", default=None)
    p_eval.add_argument("--iou-thresh", type=float, default=0.5)
    p_eval.add_argument("--name", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic scenario (or the occlusion-20 preset)")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--preset", default=None)
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--frames", type=int, default=None)
    p_synth.add_argument("--objects", type=int, default=None)
    p_synth.add_argument("--crossings", type=int, default=None)
    p_synth.add_argument("--noise", type=float, default=None)
    p_synth.add_argument("--feature-dim", type=int, default=None)
    p_synth.add_argument("--drop-prob", type=float, default=None)
    p_synth.add_argument("--feature-noise", type=float, default=0.0)
    p_synth.add_argument("--occlusion-iou", type=float, default=0.25)
    p_synth.add_argument("--no-mix", action="store_true")
    p_synth.set_defaults(func=cmd_synth)

    p_sweep = sub.add_parser("sweep", help="evaluate the tracker over a list of parameter values")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True)
    p_sweep.add_argument("--dets", required=True)
    p_sweep.add_argument("--features", required=True)
    p_sweep.add_argument("--gt", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--variant", choices=("main", "f1", "f2", "f3"), default="main")
    p_sweep.add_argument("--alpha", type=float, default=0.25)
    p_sweep.add_argument("--horizon", type=int, default=15)
    p_sweep.add_argument("--window", type=int, default=5)
    p_sweep.add_argument("--beta", type=float, default=0.15)
    p_sweep.add_argument("--cand-iou", type=float, default=0.3)
    p_sweep.add_argument("--cand-app", type=float, default=0.25)
    p_sweep.add_argument("--crowd-ratio", type=float, default=0.5)
    p_sweep.add_argument("--no-candidate-filter", action="store_true")
    p_sweep.add_argument("--no-crowd", action="store_true")
    p_sweep.add_argument("--match-threshold", type=float, default=0.2)
    p_sweep.add_argument("--max-age", type=int, default=30)
    p_sweep.set_defaults(func=cmd_sweep)

    p_mda = sub.add_parser("mda-oracle", help="compare the exact solver with the forward pass on random instances")
    p_mda.add_argument("--m", type=int, required=True)
    p_mda.add_argument("--n-layers", type=int, required=True)
    p_mda.add_argument("--instances", type=int, required=True)
    p_mda.add_argument("--seed", type=int, required=True)
    p_mda.add_argument("--bonus", action="store_true")
    p_mda.add_argument("--out", default=None)
    p_mda.set_defaults(func=cmd_mda_oracle)

    return parser


_COMMANDS = {
    "track": cmd_track,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "sweep": cmd_sweep,
    "mda-oracle": cmd_mda_oracle,
}


def replay_manifest(path) -> int:
    """Re-run a command from its manifest; outputs are reproduced byte-exactly."""
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    func = _COMMANDS[manifest["command"]]
    return func(argparse.Namespace(**manifest["args"]))


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except DataError as exc:
        print(f"adptrack: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"adptrack: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def console_main() -> None:
    sys.exit(main())
