"""Command-line entry point: ``objflow <subcommand> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .core import FlowField, load_candidates
from .errors import ObjflowError
from .evaluation import aee, aggregate_reports, csv_table, should_exclude
from .flo import load_flo, read_flo, save_flo, write_flo
from .flowfield import flow_stats, inject_translation_field, rasterize_translation_field
from .matching import MatchSet, explain_match, match_instances
from .synthgen import generate_scene, sample_seeds, synthesize_candidates, write_sample
from .viz import render_flow_png, save_png, side_by_side


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


# -- generate --------------------------------------------------------------

def _generate_one(job):
    index, out_dir, cfg_dict, base_seed = job
    cfg = RunConfig.from_dict(cfg_dict)
    scene_seed, noise_seed = sample_seeds(base_seed, index)
    scene = dataclasses.replace(cfg.scene, seed=scene_seed)
    noise = dataclasses.replace(cfg.noise, seed=noise_seed)
    frame_ref, frame_tgt, truth = generate_scene(scene)
    cands = synthesize_candidates(truth, noise)
    extra = {"sample": index, "scene": scene.to_dict(), "noise": noise.to_dict()}
    return write_sample(Path(out_dir) / f"sample_{index:04d}", (frame_ref, frame_tgt), truth, cands, extra)


def cmd_generate(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_seed = cfg.scene.seed
    jobs = [(i, str(out), cfg.to_dict(), base_seed) for i in range(args.count)]
    manifests = _map(_generate_one, jobs, args.jobs)
    index = {"count": len(manifests), "base_seed": base_seed, "config": cfg.to_dict(),
             "samples": [f"sample_{m['sample']:04d}" for m in manifests]}
    (out / "dataset.json").write_text(json.dumps(index, indent=1, sort_keys=True))

    objs = [o for m in manifests for o in m["objects"]]
    print(f"samples:      {len(manifests)}")
    if objs:
        counts = [len(m["objects"]) for m in manifests]
        trans = [float(np.hypot(*o["translation"])) for o in objs]
        rots = [abs(np.degrees(o["rotation"])) for o in objs]
        print(f"objects:      {len(objs)} total, {min(counts)}-{max(counts)} per sample")
        print(f"translation:  {min(trans):.1f}-{max(trans):.1f} px (mean {np.mean(trans):.1f})")
        print(f"rotation:     {min(rots):.1f}-{max(rots):.1f} deg (mean {np.mean(rots):.1f})")
    return 0


# -- match / rasterize -----------------------------------------------------

def _read_candidates(path):
    text = Path(path).read_text()
    if not text.strip():
        return [], [], None, None
    return load_candidates(text)


def cmd_match(args) -> int:
    cfg = _config(args)
    ref, tgt, _, _ = _read_candidates(args.candidates)
    matches, trace = explain_match(ref, tgt, cfg.matching)
    text = matches.to_json()
    if args.out:
        Path(args.out).write_text(text)
        print(trace.summary(matches))
    else:
        print(text)
        print(trace.summary(matches), file=sys.stderr)
    return 0


def cmd_rasterize(args) -> int:
    matches = MatchSet.from_json(Path(args.matchset).read_text())
    ref, tgt, width, height = _read_candidates(args.candidates)
    width = args.width or width
    height = args.height or height
    if not width or not height:
        raise ObjflowError("field size unknown: pass --width and --height")
    field = rasterize_translation_field(matches, ref, tgt, width, height)
    data = write_flo(field)
    Path(args.out).write_bytes(data)
    if read_flo(Path(args.out).read_bytes()) != field:
        raise ObjflowError(f"read-back of {args.out} does not match the rasterized field")
    stats = flow_stats(field)
    print(f"wrote {args.out}: {width}x{height}, {len(matches.pairs)} objects, "
          f"max |flow| {stats.max_magnitude:.2f} px")
    return 0


# -- inject ----------------------------------------------------------------

def cmd_inject(args) -> int:
    cfg = _config(args)
    dt = load_flo(args.dt)
    base = {}
    for spec in args.base or []:
        level, _, path = spec.partition("=")
        base[int(level)] = load_flo(path)
    if not base:
        for level in cfg.injection.alphas:
            f = 2 ** (level - 1)
            base[level] = FlowField.zeros(dt.width // f, dt.height // f)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = inject_translation_field(base, dt, cfg.injection)
    for level in sorted(result):
        save_flo(result[level], out / f"level_{level}.flo")
        print(f"level {level}: {result[level].width}x{result[level].height} -> {out / f'level_{level}.flo'}")
    return 0


# -- eval ------------------------------------------------------------------

def _eval_pair(job):
    est_path, truth_path, edges, limit, mode = job
    truth = load_flo(truth_path)
    report = aee(load_flo(est_path), truth, edges)
    report.excluded = should_exclude(truth, limit, mode)
    return report


def _pairs(args):
    if args.dataset:
        root = Path(args.dataset)
        samples = sorted(p for p in root.iterdir() if p.is_dir())
        return [(s / args.estimate_name, s / args.truth_name) for s in samples]
    if not args.estimate or not args.truth:
        raise ObjflowError("eval needs ESTIMATE and TRUTH, or --dataset")
    est, truth = Path(args.estimate), Path(args.truth)
    if est.is_dir() and truth.is_dir():
        names = sorted(p.relative_to(truth) for p in truth.rglob("*.flo"))
        return [(est / n, truth / n) for n in names]
    if est.is_dir() or truth.is_dir():
        raise ObjflowError("ESTIMATE and TRUTH must both be files or both be directories")
    return [(est, truth)]


def cmd_eval(args) -> int:
    cfg = _config(args)
    e = cfg.eval
    pairs = _pairs(args)
    if not pairs:
        raise ObjflowError("no flow pairs to evaluate")
    jobs = [(str(a), str(b), e.bin_edges, e.exclusion_limit, e.exclusion_mode) for a, b in pairs]
    reports = _map(_eval_pair, jobs, args.jobs)
    for (a, _), r in zip(pairs, reports):
        if r.excluded:
            print(f"excluded {a}: ground truth exceeds {e.exclusion_limit} px", file=sys.stderr)
    merged = aggregate_reports(reports, e.weighting) if len(reports) > 1 else reports[0]
    if merged.excluded:
        raise ObjflowError("the only sample is excluded by the flow-magnitude limit")
    doc = merged.to_dict()
    doc["samples"] = len(reports)
    doc["excluded_samples"] = sum(r.excluded for r in reports)
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=1, sort_keys=True))
    table = csv_table([(args.method, merged)])
    if args.csv:
        path = Path(args.csv)
        if path.exists() and path.stat().st_size:
            with open(path, "a") as fh:
                fh.write(table.split("\n", 1)[1])
        else:
            path.write_text(table)
    sys.stdout.write(table)
    return 0


# -- viz -------------------------------------------------------------------

def cmd_viz(args) -> int:
    field = load_flo(args.flow)
    if args.compare:
        other = load_flo(args.compare)
        norm = args.max_norm
        if norm is None:
            norm = max(flow_stats(field).max_magnitude, flow_stats(other).max_magnitude) or 1.0
        img = side_by_side(render_flow_png(field, norm), render_flow_png(other, norm))
    else:
        img = render_flow_png(field, args.max_norm)
    save_png(img, args.out)
    print(f"wrote {args.out} ({img.shape[1]}x{img.shape[0]})")
    return 0


# -- bench -----------------------------------------------------------------

def cmd_bench(args) -> int:
    cfg = _config(args)
    rows = []
    for i in range(args.count):
        scene_seed, noise_seed = sample_seeds(cfg.scene.seed, i)
        scene = dataclasses.replace(cfg.scene, seed=scene_seed)
        noise = dataclasses.replace(cfg.noise, seed=noise_seed)
        t0 = time.perf_counter()
        _, _, truth = generate_scene(scene)
        c = synthesize_candidates(truth, noise)
        t1 = time.perf_counter()
        matches = match_instances(c.ref, c.tgt, cfg.matching)
        t2 = time.perf_counter()
        rasterize_translation_field(matches, c.ref, c.tgt, truth.width, truth.height)
        t3 = time.perf_counter()
        rows.append((t1 - t0, t2 - t1, t3 - t2, len(c.ref) + len(c.tgt)))
    print("scene  candidates  generate_ms  match_ms  rasterize_ms")
    for i, (g, m, r, n) in enumerate(rows):
        print(f"{i:5d}  {n:10d}  {1e3 * g:11.1f}  {1e3 * m:8.1f}  {1e3 * r:12.1f}")
    if rows:
        arr = np.array(rows)
        print(f"mean   {arr[:, 3].mean():10.1f}  {1e3 * arr[:, 0].mean():11.1f}  "
              f"{1e3 * arr[:, 1].mean():8.1f}  {1e3 * arr[:, 2].mean():12.1f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="objflow", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="JSON run configuration")
        if seed:
            p.add_argument("--seed", type=int, help="override every seed in the configuration")

    p = sub.add_parser("generate", help="write a synthetic dataset")
    common(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("match", help="match candidates between frames")
    common(p)
    p.add_argument("candidates")
    p.add_argument("--out", help="match set JSON (stdout if omitted)")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("rasterize", help="translation field from a match set")
    p.add_argument("matchset")
    p.add_argument("candidates")
    p.add_argument("--out", required=True, help="output .flo")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.set_defaults(func=cmd_rasterize)

    p = sub.add_parser("inject", help="add a translation field to pyramid levels")
    common(p, seed=False)
    p.add_argument("dt", help="full-resolution translation field (.flo)")
    p.add_argument("--base", action="append", metavar="LEVEL=PATH",
                   help="base pyramid level; zero levels are used when none is given")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("eval", help="average endpoint error")
    common(p, seed=False)
    p.add_argument("estimate", nargs="?")
    p.add_argument("truth", nargs="?")
    p.add_argument("--dataset", help="dataset directory of sample_* folders")
    p.add_argument("--estimate-name", default="dt_hat.flo")
    p.add_argument("--truth-name", default="flow_translation.flo")
    p.add_argument("--method", default="estimate", help="row label in the CSV output")
    p.add_argument("--out", help="report JSON")
    p.add_argument("--csv", help="append the CSV row to this file")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("viz", help="color-wheel rendering of a .flo")
    p.add_argument("flow")
    p.add_argument("--out", required=True)
    p.add_argument("--max-norm", type=float)
    p.add_argument("--compare", help="second .flo rendered side by side with a shared norm")
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("bench", help="time matching and rasterization")
    common(p)
    p.add_argument("--count", type=int, default=5)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ObjflowError, OSError, json.JSONDecodeError) as exc:
        print(f"objflow {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
