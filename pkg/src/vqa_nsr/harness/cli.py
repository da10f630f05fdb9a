"""``vqa-nsr`` command line: run, emit-asp, gen, metrics."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from ..compiler import emit_asp, load_questions, parse_question
from ..compiler.program import dump_questions
from ..confidence import ScoreStats, candidate_sets, confidence_threshold, score_statistics
from ..detector_sim import load_presets, preset, simulate
from ..scene_model import apply_bbox_threshold, dump_scene_graphs, load_prediction_matrices, matrix_to_dict
from .benchmark import CSV_FIELDS, read_csv, run_benchmark
from .config import load_config
from .tasks import SyntheticConfig, generate_synthetic_tasks

log = logging.getLogger("vqa_nsr")


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.output:
        from dataclasses import replace

        cfg = replace(cfg, output_dir=args.output)
    report = run_benchmark(cfg)
    _print_table(report.rows())
    if cfg.output_dir:
        print(f"wrote {Path(cfg.output_dir) / 'report.csv'}")
    return 0


def _load_question(path: str, index: int):
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "questions" in data:
        return load_questions(data)[index]
    return parse_question(data, require_answer=True)


def cmd_emit_asp(args: argparse.Namespace) -> int:
    question = _load_question(args.question, args.index)
    matrices = load_prediction_matrices(args.predictions)
    if not matrices:
        raise SystemExit("no prediction matrices in " + args.predictions)
    matrices = [apply_bbox_threshold(m, args.bbox_threshold) for m in matrices]
    by_id = {m.image_id: m for m in matrices}
    if question.image_id in by_id:
        target = by_id[question.image_id]
    elif len(matrices) == 1:
        target = matrices[0]
    else:
        raise SystemExit(f"no predictions for image {question.image_id!r}")
    if (args.mu is None) != (args.sigma is None):
        raise SystemExit("--mu and --sigma go together")
    stats = ScoreStats(args.mu, args.sigma, 0) if args.mu is not None else score_statistics(matrices)
    theta = confidence_threshold(stats, args.alpha)
    text = emit_asp(question, candidate_sets(target, theta, args.k, args.deterministic))
    header = f"% image {target.image_id}  mu={stats.mu:.6f} sigma={stats.sigma:.6f} theta={theta:.6f}\n"
    if args.output:
        Path(args.output).write_text(header + text)
    else:
        sys.stdout.write(header + text)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SyntheticConfig(
        num_scenes=args.scenes,
        questions_per_scene=args.questions_per_scene,
        seed=args.seed,
        max_depth=args.max_depth,
    )
    scenes, questions = generate_synthetic_tasks(cfg)
    noise = preset(args.noise, args.seed)
    _write_json(out / "scenes.json", dump_scene_graphs(scenes))
    _write_json(out / "questions.json", dump_questions(questions))
    _write_json(out / "predictions.json", {"predictions": [matrix_to_dict(simulate(s, noise)) for s in scenes]})
    print(f"wrote {len(scenes)} scenes and {len(questions)} questions to {out}")
    return 0


def _print_table(rows: Sequence[dict]) -> None:
    cols = [c for c in CSV_FIELDS if c not in ("mu", "sigma", "search_nodes")]
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c) for i, c in enumerate(cols)]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    for row in cells:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)))


def _cell(v) -> str:
    if v is None or v == "":
        return "-"
    if isinstance(v, float):
        return f"{v:.2f}"
    try:
        f = float(v)
    except ValueError:
        return str(v)
    return str(v) if f.is_integer() and "." not in str(v) else f"{f:.2f}"


def cmd_metrics(args: argparse.Namespace) -> int:
    rows = read_csv(args.report)
    if not rows:
        raise SystemExit(f"{args.report} has no rows")
    missing = set(CSV_FIELDS) - set(rows[0])
    if missing:
        raise SystemExit(f"{args.report} lacks columns {sorted(missing)}")
    _print_table(rows)
    bad = [r for r in rows if abs(sum(float(r[k]) for k in ("correct", "wrong", "no_answer")) - 100.0) > 0.01]
    if bad:
        print(f"warning: {len(bad)} rows do not sum to 100%", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vqa-nsr", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a benchmark from a TOML config")
    r.add_argument("--config", required=True)
    r.add_argument("-o", "--output", help="override [output].dir")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("emit-asp", help="write the ASP program for one question")
    e.add_argument("--question", required=True, help="question JSON (single entry or questions file)")
    e.add_argument("--index", type=int, default=0, help="question index within a questions file")
    e.add_argument("--predictions", required=True)
    e.add_argument("--alpha", type=float, default=1.0)
    e.add_argument("--k", type=int, default=1)
    e.add_argument("--deterministic", action="store_true")
    e.add_argument("--bbox-threshold", type=float, default=0.0)
    e.add_argument("--mu", type=float, help="calibrated mean (default: computed from --predictions)")
    e.add_argument("--sigma", type=float)
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_emit_asp)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--scenes", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--questions-per-scene", type=int, default=10)
    g.add_argument("--max-depth", type=int)
    g.add_argument("--noise", default="good", choices=sorted(load_presets()))
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("metrics", help="summarize a report.csv")
    m.add_argument("--report", required=True)
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as e:
        print(f"vqa-nsr: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
