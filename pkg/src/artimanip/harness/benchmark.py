"""Seeded batch runs, per-category aggregation and report files."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .episode import EpisodeResult, run_episode

REPORT_TXT = "report.txt"
REPORT_JSONL = "report.jsonl"
EPISODES_JSONL = "episodes.jsonl"


def display_name(category: str) -> str:
    return category.replace("_", " ").title()


@dataclass
class CategoryRow:
    category: str
    episodes: int
    successes: int
    mean_iou: float
    mean_f1: float
    valid: bool = True

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0

    def to_record(self) -> dict:
        return {
            "category": self.category, "episodes": self.episodes, "successes": self.successes,
            "success_rate": self.success_rate, "mean_iou": self.mean_iou, "mean_f1": self.mean_f1,
            "valid": self.valid,
        }


@dataclass
class BenchmarkReport:
    rows: list[CategoryRow]
    digest: str
    episodes: list[EpisodeResult] = field(default_factory=list)

    def row(self, category: str) -> CategoryRow:
        return next(r for r in self.rows if r.category == category)

    def to_text(self) -> str:
        width = max([len("Category")] + [len(display_name(r.category)) for r in self.rows])
        lines = [f"# config sha256:{self.digest}", f"{'Category':<{width}} | IoU   | F1    | SR"]
        for r in self.rows:
            name = display_name(r.category)
            if not r.valid:
                lines.append(f"{name:<{width}} | -     | -     | invalid (0 completed)")
                continue
            lines.append(
                f"{name:<{width}} | {r.mean_iou:.3f} | {r.mean_f1:.3f} | {r.success_rate:.2f} ({r.successes}/{r.episodes})"
            )
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        recs = [{"config_sha256": self.digest}] + [r.to_record() for r in self.rows]
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in recs)

    def violations(self, thresholds: dict) -> list[str]:
        out = []
        checks = (("min_success_rate", "success_rate"), ("min_iou", "mean_iou"), ("min_f1", "mean_f1"))
        for key, attr in checks:
            if key not in thresholds:
                continue
            for r in self.rows:
                val = getattr(r, attr) if r.valid else float("nan")
                if not val >= thresholds[key]:
                    out.append(f"{r.category}: {attr} {val:.4f} < {key} {thresholds[key]}")
        return out


def aggregate(episodes: list[EpisodeResult], categories, digest: str) -> BenchmarkReport:
    rows = []
    for cat in categories:
        done = [e for e in episodes if e.category == cat and e.completed]
        n = len(done)
        if n == 0:
            rows.append(CategoryRow(cat, 0, 0, 0.0, 0.0, valid=False))
            continue
        rows.append(CategoryRow(
            cat, n, sum(1 for e in done if e.success),
            sum(e.iou for e in done) / n, sum(e.f1 for e in done) / n,
        ))
    return BenchmarkReport(rows, digest, list(episodes))


def _safe_episode(args) -> EpisodeResult:
    cfg, cat, seed = args
    try:
        return run_episode(cfg, cat, seed)
    except Exception as exc:  # an unexpected fault must not sink the batch
        return EpisodeResult(cat, seed, completed=False, failure_stage="none", message=f"{type(exc).__name__}: {exc}")


def episode_jobs(cfg: RunConfig):
    return [(cfg, cat, cfg.seed_offset + i) for cat in cfg.categories for i in range(cfg.seeds)]


def run_benchmark(cfg: RunConfig, write: bool = True) -> BenchmarkReport:
    jobs = episode_jobs(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            episodes = list(pool.map(_safe_episode, jobs, chunksize=4))
    else:
        episodes = [_safe_episode(j) for j in jobs]
    report = aggregate(episodes, cfg.categories, cfg.digest())
    if write:
        write_report(report, cfg.output_dir)
    return report


def episodes_jsonl(episodes) -> str:
    return "".join(json.dumps(e.to_record(), sort_keys=True, separators=(",", ":")) + "\n" for e in episodes)


def write_report(report: BenchmarkReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / REPORT_TXT).write_text(report.to_text(), encoding="utf-8")
    (out / REPORT_JSONL).write_text(report.to_jsonl(), encoding="utf-8")
    (out / EPISODES_JSONL).write_text(episodes_jsonl(report.episodes), encoding="utf-8")


def report_from_log(path: str | Path, digest: str = "") -> BenchmarkReport:
    """Recompute the aggregate report from an episode log."""
    episodes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                episodes.append(EpisodeResult.from_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    categories = list(dict.fromkeys(e.category for e in episodes))
    return aggregate(episodes, categories, digest)
