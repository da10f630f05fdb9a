"""End-to-end benchmark: detections -> thresholds -> candidate sets -> answers."""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .. import __version__
from ..compiler.program import QuestionProgram, load_questions
from ..confidence import CandidateSet, ScoreStats, candidate_sets, confidence_threshold, score_statistics
from ..detector_sim import detection_metrics, simulate
from ..reasoner import Answer, Outcome, direct_interpret, solve
from ..scene_model import PredictionMatrix, SceneGraph, apply_bbox_threshold, load_prediction_matrices, load_scene_graphs
from .config import RunConfig
from .tasks import generate_synthetic_tasks

log = logging.getLogger(__name__)

CSV_FIELDS = (
    "noise",
    "bbox_threshold",
    "mode",
    "alpha",
    "correct",
    "wrong",
    "no_answer",
    "questions",
    "precision",
    "recall",
    "mu",
    "sigma",
    "theta",
    "ties",
    "mean_candidates",
    "search_nodes",
    "wall_time_ms",
)
TIMING_FIELDS = ("wall_time_ms",)


@dataclass
class Tasks:
    scenes: dict[str, SceneGraph]
    questions: list[QuestionProgram]
    calibration_ids: list[str]
    evaluation_ids: list[str]
    predictions: dict[str, PredictionMatrix] | None = None


@dataclass(frozen=True)
class QuestionResult:
    question_id: str | None
    image_id: str
    expected: str
    outcome: Outcome

    @property
    def verdict(self) -> str:
        if self.outcome.result is None:
            return "no_answer"
        return "correct" if self.outcome.result == Answer.parse(self.expected) else "wrong"


@dataclass
class CellResult:
    noise: str
    bbox_threshold: float
    mode: str
    alpha: float | None
    correct: float
    wrong: float
    no_answer: float
    questions: int
    precision: float
    recall: float
    mu: float
    sigma: float
    theta: float | None
    ties: int
    mean_candidates: float
    search_nodes: int
    wall_time_ms: float
    results: list[QuestionResult] = field(default_factory=list, repr=False)

    @property
    def key(self) -> tuple:
        return (self.noise, self.bbox_threshold, self.mode, self.alpha)

    def row(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in CSV_FIELDS}


@dataclass
class RunReport:
    cells: list[CellResult]
    manifest: dict[str, Any]

    def cell(self, mode: str, alpha: float | None = None, noise: str | None = None, bbox: float | None = None) -> CellResult:
        for c in self.cells:
            if (
                c.mode == mode
                and (alpha is None or c.alpha == alpha)
                and (noise is None or c.noise == noise)
                and (bbox is None or c.bbox_threshold == bbox)
            ):
                return c
        raise KeyError((mode, alpha, noise, bbox))

    def rows(self, timing: bool = True) -> list[dict[str, Any]]:
        rows = [c.row() for c in self.cells]
        if not timing:
            for r in rows:
                for k in TIMING_FIELDS:
                    r.pop(k)
        return rows

    def write(self, out_dir: str | Path, trace: bool = False) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(self.rows(), out / "report.csv")
        (out / "manifest.json").write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")
        if trace:
            with (out / "trace.jsonl").open("w") as fh:
                for c in self.cells:
                    for r in c.results:
                        fh.write(json.dumps(_trace_record(c, r)) + "\n")


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def write_csv(rows: Sequence[dict[str, Any]], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(CSV_FIELDS), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in CSV_FIELDS})


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _trace_record(cell: CellResult, r: QuestionResult) -> dict[str, Any]:
    o = r.outcome
    return {
        "noise": cell.noise,
        "bbox_threshold": cell.bbox_threshold,
        "mode": cell.mode,
        "alpha": cell.alpha,
        "question_id": r.question_id,
        "image_id": r.image_id,
        "expected": r.expected,
        "answer": None if o.result is None else str(o.result),
        "verdict": r.verdict,
        "cost": o.cost,
        "tie": o.tie,
        "selection": None if o.selection is None else list(o.selection),
    }


# --- tasks ---------------------------------------------------------------------


def split_images(image_ids: Iterable[str], fraction: float, seed: int) -> tuple[list[str], list[str]]:
    """Seeded disjoint (calibration, evaluation) split of image ids."""
    ids = sorted(set(image_ids))
    if len(ids) < 2:
        raise ValueError("need at least two images for a calibration/evaluation split")
    perm = np.random.default_rng(seed).permutation(len(ids))
    n_cal = min(max(1, math.ceil(fraction * len(ids))), len(ids) - 1)
    cal = sorted(ids[i] for i in perm[:n_cal])
    ev = sorted(ids[i] for i in perm[n_cal:])
    return cal, ev


def prepare_tasks(cfg: RunConfig) -> Tasks:
    predictions = None
    if cfg.synthetic is not None:
        scene_list, questions = generate_synthetic_tasks(cfg.synthetic)
        seed = cfg.synthetic.seed
    else:
        scene_list = load_scene_graphs(cfg.dataset.scenes)
        questions = load_questions(cfg.dataset.questions)
        if cfg.dataset.predictions:
            predictions = {m.image_id: m for m in load_prediction_matrices(cfg.dataset.predictions)}
        seed = 0
    scenes = {s.image_id: s for s in scene_list}
    cal, ev = split_images(scenes, cfg.calibration_fraction, seed)
    ev_set = set(ev)
    kept = []
    for q in questions:
        if q.image_id not in scenes:
            raise ValueError(f"question {q.question_id} refers to unknown image {q.image_id}")
        if q.image_id not in ev_set:
            continue
        if q.expected_answer is None:
            ans = direct_interpret(q, scenes[q.image_id])
            if ans is None:
                log.warning("skipping question %s: no answer on ground truth", q.question_id)
                continue
            q = QuestionProgram(q.nodes, str(ans), q.question_text, q.image_id, q.question_id, q.metadata)
        kept.append(q)
    if not kept:
        raise ValueError("empty task set")
    return Tasks(scenes, kept, cal, ev, predictions)


# --- cells ---------------------------------------------------------------------


def _answer(args: tuple[QuestionProgram, list[CandidateSet]]) -> Outcome:
    program, cands = args
    return solve(cands, program)


def run_cell(
    questions: Sequence[QuestionProgram],
    matrices: dict[str, PredictionMatrix],
    theta: float,
    k: int,
    deterministic: bool,
    workers: int = 1,
) -> tuple[list[QuestionResult], list[list[CandidateSet]], float]:
    """Answer every question; returns results, candidate sets per image and elapsed ms."""
    start = time.perf_counter()
    cands = {img: candidate_sets(m, theta, k, deterministic) for img, m in matrices.items()}
    jobs = [(q, cands[q.image_id]) for q in questions]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_answer, jobs))
    else:
        outcomes = [_answer(j) for j in jobs]
    elapsed = (time.perf_counter() - start) * 1000.0
    results = [QuestionResult(q.question_id, q.image_id, q.expected_answer, o) for q, o in zip(questions, outcomes)]
    return results, list(cands.values()), elapsed


def _summarize(results: Sequence[QuestionResult]) -> dict[str, Any]:
    n = len(results)
    counts = {"correct": 0, "wrong": 0, "no_answer": 0}
    for r in results:
        counts[r.verdict] += 1
    return {
        **{k: 100.0 * v / n for k, v in counts.items()},
        "questions": n,
        "ties": sum(r.outcome.tie for r in results),
        "search_nodes": sum(r.outcome.explored for r in results),
    }


def run_benchmark(cfg: RunConfig, tasks: Tasks | None = None) -> RunReport:
    tasks = tasks or prepare_tasks(cfg)
    cal_ids, ev_ids = tasks.calibration_ids, tasks.evaluation_ids
    truth_ev = [tasks.scenes[i] for i in ev_ids]
    cells: list[CellResult] = []
    calibration: dict[str, Any] = {}

    sources = [("loaded", None)] if tasks.predictions is not None else list(cfg.noise.items())
    for noise_name, noise in sources:
        if noise is None:
            missing = set(tasks.scenes) - set(tasks.predictions)
            if missing:
                raise ValueError(f"no predictions for {len(missing)} images, e.g. {sorted(missing)[0]}")
            raw = {i: tasks.predictions[i] for i in tasks.scenes}
        else:
            raw = {i: simulate(s, noise) for i, s in tasks.scenes.items()}
        for t in cfg.bbox_thresholds:
            filtered = {i: apply_bbox_threshold(m, t) for i, m in raw.items()}
            stats: ScoreStats = score_statistics(filtered[i] for i in cal_ids)
            precision, recall = detection_metrics([filtered[i] for i in ev_ids], truth_ev, cfg.iou_min)
            ev_matrices = {i: filtered[i] for i in ev_ids}
            settings: list[tuple[str, float | None]] = []
            if "deterministic" in cfg.modes:
                settings.append(("deterministic", None))
            if "nondeterministic" in cfg.modes:
                settings += [("nondeterministic", a) for a in cfg.alphas]
            thetas = {}
            for mode, alpha in settings:
                theta = None if alpha is None else confidence_threshold(stats, alpha)
                results, cands, ms = run_cell(
                    tasks.questions, ev_matrices, 0.0 if theta is None else theta, cfg.k, mode == "deterministic", cfg.workers
                )
                n_rows = sum(len(c) for c in cands)
                mean_c = sum(len(cs) for c in cands for cs in c) / n_rows if n_rows else 0.0
                cells.append(
                    CellResult(
                        noise=noise_name,
                        bbox_threshold=t,
                        mode=mode,
                        alpha=alpha,
                        precision=precision,
                        recall=recall,
                        mu=stats.mu,
                        sigma=stats.sigma,
                        theta=theta,
                        mean_candidates=mean_c,
                        wall_time_ms=ms,
                        results=results,
                        **_summarize(results),
                    )
                )
                if alpha is not None:
                    thetas[str(alpha)] = theta
                log.info("%s bbox=%.2f %s alpha=%s: %s", noise_name, t, mode, alpha, _summarize(results))
            calibration[f"{noise_name}@{t}"] = {
                "mu": stats.mu,
                "sigma": stats.sigma,
                "rows": stats.count,
                "theta": thetas,
                "alpha": list(cfg.alphas),
                "k": cfg.k,
            }

    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "seed": None if cfg.synthetic is None else cfg.synthetic.seed,
        "calibration": calibration,
        "calibration_images": len(cal_ids),
        "evaluation_images": len(ev_ids),
        "questions": len(tasks.questions),
        "versions": {
            "vqa_nsr": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    report = RunReport(cells, manifest)
    if cfg.output_dir:
        report.write(cfg.output_dir, trace=cfg.trace)
    return report


def cell_dict(cell: CellResult) -> dict[str, Any]:
    d = asdict(cell)
    d.pop("results")
    return d
