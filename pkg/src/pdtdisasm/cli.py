"""Command line front end: ``pdt-disasm <subcommand> ...``.

Exit status: 0 on success, 1 on bad input, 2 when an internal invariant
fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analyze
from .detect import aggregate_rates, detect_violations, truth_from_scores
from .errors import InputError, InvariantError
from .isa import DECODERS, INVALID, InstKind
from .masks import (DEFAULT_MAX_STEPS, DEFAULT_WINDOW, OVERLAP_MAGIC,
                    REACH_MAGIC, global_connections, overlap_mask,
                    reachability_mask, write_global, write_mask)
from .pdt import default_workers
from .prune import MODES, prune
from .scores import (evaluate, labels_to_scores, load_labels, load_scores,
                     write_labels)

log = logging.getLogger("pdtdisasm")


def _int(text: str) -> int:
    value = int(text, 0)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_region(args):
    data = Path(args.input).read_bytes()
    t0 = time.perf_counter()
    cfg, forest = analyze(data, isa=args.isa, workers=args.threads)
    log.info("built CFG and forest for %d bytes (%d components) in %.3fs",
             len(data), forest.n_wcc, time.perf_counter() - t0)
    return cfg, forest


def _scores_for(args, cfg):
    """Per-offset scores from --labels or --scores."""
    if args.labels:
        return labels_to_scores(load_labels(args.labels, len(cfg)))
    return load_scores(args.scores, len(cfg), probabilities=args.probabilities)


def _truth_for(args, cfg):
    if args.labels:
        return load_labels(args.labels, len(cfg))
    return truth_from_scores(load_scores(args.scores, len(cfg), args.probabilities), cfg)


def render_cfg(cfg, base: int = 0) -> str:
    lines = []
    for o in range(len(cfg)):
        code = int(cfg.kind[o])
        if code == INVALID:
            cls, kind = "invalid", "-"
        else:
            cls, kind = "decodable", InstKind(code).name.lower()
        succ = ",".join(str(base + s) for s in cfg.successors(o)) or "-"
        lines.append(f"{base + o}\t{cls}\t{kind}\t{int(cfg.length[o])}\t{succ}")
    return "\n".join(lines) + ("\n" if lines else "")


def cmd_decode(args):
    cfg, forest = _load_region(args)
    _emit(render_cfg(cfg, args.base), args.out)
    if args.pdt_out:
        _emit(forest.dump(args.base), args.pdt_out)


def cmd_check(args):
    cfg, forest = _load_region(args)
    report = detect_violations(forest, cfg, _truth_for(args, cfg))
    _emit(_dumps(report.to_dict(args.base)), args.out)


def cmd_prune(args):
    cfg, forest = _load_region(args)
    result = prune(forest, cfg, _scores_for(args, cfg), mode=args.mode)
    _emit(_dumps(result.to_dict(args.base)), args.out)
    if args.out_labels:
        write_labels(args.out_labels, result.truth(len(cfg)))


def cmd_masks(args):
    cfg, _ = _load_region(args)
    if not (args.out_reach or args.out_overlap or args.out_global):
        raise InputError("masks: give at least one of --out-reach, --out-overlap, --out-global")
    if args.out_reach:
        write_mask(args.out_reach, reachability_mask(cfg, args.window, args.max_steps), REACH_MAGIC)
    if args.out_overlap:
        write_mask(args.out_overlap, overlap_mask(cfg, args.window), OVERLAP_MAGIC)
    if args.out_global:
        write_global(args.out_global, global_connections(cfg))


def _load_prediction(path, region_len, base=0):
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        return np.asarray(doc["retained"], dtype=np.int64) - base
    return np.flatnonzero(load_labels(path, region_len) == 1)


def cmd_eval(args):
    labels = load_labels(args.labels)
    pred = _load_prediction(args.pred, len(labels), args.base)
    _emit(_dumps(evaluate(pred, labels).to_dict()), args.out)


def _check_one(job):
    region, truth_path, isa, is_scores, probabilities = job
    data = Path(region).read_bytes()
    cfg, forest = analyze(data, isa=isa)
    if is_scores:
        truth = truth_from_scores(load_scores(truth_path, len(cfg), probabilities), cfg)
    else:
        truth = load_labels(truth_path, len(cfg))
    return detect_violations(forest, cfg, truth)


def cmd_batch_check(args):
    root = Path(args.directory)
    if not root.is_dir():
        raise InputError(f"{root} is not a directory")
    ext = args.scores_ext if args.scores_ext else args.labels_ext
    regions = sorted(p for p in root.rglob(args.pattern) if p.is_file())
    jobs = [(p, p.with_suffix(ext), args.isa, bool(args.scores_ext), args.probabilities)
            for p in regions]

    reports, failed = [], []

    def record(path, outcome):
        if isinstance(outcome, Exception):
            failed.append({"file": str(path.relative_to(root)), "error": str(outcome)})
        else:
            reports.append(outcome)

    if args.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            futures = [pool.submit(_check_one, j) for j in jobs]
            for path, fut in zip(regions, futures):
                try:
                    record(path, fut.result())
                except (InputError, OSError, ValueError) as exc:
                    record(path, exc)
    else:
        for path, job in zip(regions, jobs):
            try:
                record(path, _check_one(job))
            except (InputError, OSError, ValueError) as exc:
                record(path, exc)

    if not reports:
        raise InputError(f"no checkable files under {root}")
    summary = aggregate_rates(reports).to_dict()
    summary["failed"] = failed
    _emit(_dumps(summary), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdt-disasm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="timing diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def region_cmd(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("input", help="raw code region")
        p.add_argument("--base", type=_int, default=0, help="base address for rendered offsets")
        p.add_argument("--isa", choices=sorted(DECODERS), default="tbc1")
        p.add_argument("--threads", type=_int, default=None)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.set_defaults(func=func)
        return p

    def truth_args(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--labels", help="int8 label file (1/0/-1)")
        g.add_argument("--scores", help="float32 score file")
        p.add_argument("--probabilities", action="store_true",
                       help="scores are probabilities; convert with the inverse sigmoid")

    p = region_cmd("decode", cmd_decode, "dump the superset CFG")
    p.add_argument("--pdt-out", help="also dump 'offset -> ipdom' lines here")

    truth_args(region_cmd("check", cmd_check, "report structural violations"))

    p = region_cmd("prune", cmd_prune, "prune scores into a consistent instruction set")
    truth_args(p)
    p.add_argument("--mode", choices=MODES, default="faithful")
    p.add_argument("--out-labels", help="write retained set as an int8 label file")

    p = region_cmd("masks", cmd_masks, "export attention masks and adjacency")
    p.add_argument("--window", type=_int, default=DEFAULT_WINDOW)
    p.add_argument("--max-steps", type=_int, default=DEFAULT_MAX_STEPS)
    p.add_argument("--out-reach")
    p.add_argument("--out-overlap")
    p.add_argument("--out-global")

    p = sub.add_parser("eval", help="precision / recall / F1 against labels")
    p.add_argument("--labels", required=True)
    p.add_argument("--pred", required=True, help="prune JSON or int8 label file")
    p.add_argument("--base", type=_int, default=0, help="base used when the JSON was rendered")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval, threads=1)

    p = sub.add_parser("batch-check", help="check every region in a directory and aggregate rates")
    p.add_argument("directory")
    p.add_argument("--pattern", default="*.bin", help="glob for region files")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--labels-ext", default=".i8")
    g.add_argument("--scores-ext")
    p.add_argument("--probabilities", action="store_true")
    p.add_argument("--isa", choices=sorted(DECODERS), default="tbc1")
    p.add_argument("--threads", type=_int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_batch_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are bad input; keep 2 for invariant failures
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        if getattr(args, "threads", None) is None:
            args.threads = default_workers()
        args.func(args)
    except InvariantError as exc:
        print(f"pdt-disasm: internal error: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError, ValueError) as exc:
        print(f"pdt-disasm: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
