from __future__ import annotations

import json

import pytest

from artimanip.grounding import GroundingError, Providers, make_providers
from artimanip.harness import (
    ConfigError,
    EpisodeResult,
    RunConfig,
    aggregate,
    load_config,
    report_from_log,
    run_benchmark,
    run_episode,
)
from artimanip.harness import benchmark as bench
from artimanip.harness.cli import main
from artimanip.scene import CATEGORIES
from artimanip.skills import SkillConfig

# --- configuration -----------------------------------------------------------


def test_defaults_without_file():
    cfg = load_config()
    assert cfg.categories == CATEGORIES and cfg.seeds == 100 and cfg.budget == 200
    assert cfg.skills == SkillConfig()


def test_ini_file_and_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[run]\ncategories = bottle, Pen\nseeds = 3  # short\n"
        "[skills]\nK = 100\nk = 8\n[providers]\nground = perturbed\ndilation = 0.1\n"
        "[paths]\noutput = results\n"
    )
    cfg = load_config(ini, ["run.seeds=5", "acceptance.min_success_rate=0.9"])
    assert cfg.categories == ("bottle", "pen") and cfg.seeds == 5
    assert cfg.skills.K == 100.0 and cfg.skills.k == 8
    assert cfg.providers.ground == "perturbed" and cfg.providers.dilation == 0.1
    assert cfg.output_dir == str(tmp_path / "results")
    assert cfg.acceptance == {"min_success_rate": 0.9}


@pytest.mark.parametrize(
    "overrides, fragment",
    [
        (["run.colour=red"], "unknown keys"),
        (["gpu.count=2"], "unknown config sections"),
        (["run.seeds=0"], "seeds"),
        (["run.affordance=model"], "paths.model"),
        (["providers.codegen=remote"], "endpoint"),
        (["seeds=3"], "section.key=value"),
    ],
)
def test_config_errors(overrides, fragment):
    with pytest.raises(ConfigError, match=fragment):
        load_config(None, overrides)


def test_invalid_values_surface_as_value_errors():
    with pytest.raises(ValueError):
        load_config(None, ["skills.D=1"])
    with pytest.raises(ValueError):
        load_config(None, ["run.categories=toaster"])


def test_digest_tracks_semantics_only():
    a = load_config(None, ["run.workers=1", "paths.output=a"])
    b = load_config(None, ["run.workers=4", "paths.output=b"])
    c = load_config(None, ["run.budget=150"])
    assert a.digest() == b.digest() != c.digest()
    assert len(a.digest()) == 64


# --- episodes ----------------------------------------------------------------


def test_episode_record_round_trip():
    res = run_episode(RunConfig(), "bottle", 0)
    assert res.success and res.failure_stage == "none" and res.iou == 1.0 and res.f1 == 1.0
    back = EpisodeResult.from_record(json.loads(json.dumps(res.to_record())))
    assert back.to_record() == res.to_record()


def test_grounding_failure_is_attributed():
    def no_box(*_):
        raise GroundingError("ground", "part not visible")

    base = make_providers()
    res = run_episode(RunConfig(), "pen", 0, providers=Providers(base.describe, no_box, base.segment))
    assert not res.success and res.failure_stage == "grounding" and "not visible" in res.message


def test_program_failure_is_attributed():
    res = run_episode(RunConfig(), "door", 0, codegen=lambda task: "while {")
    assert res.failure_stage == "program"


def test_budget_exhaustion_is_a_skill_failure():
    res = run_episode(RunConfig(budget=3), "bottle", 1)
    assert not res.success and res.failure_stage == "skill" and res.steps == 3


def test_wrong_direction_program_fails_within_budget():
    src = "grasp(part)\nwhile true { rotate_cw()\n pull_part() }"
    res = run_episode(RunConfig(budget=40), "bottle", 2, codegen=lambda task: src)
    assert not res.success and res.unlock_rotations == 0


# --- batches and reports -----------------------------------------------------


def test_faulting_episode_does_not_sink_the_batch(monkeypatch, tmp_path):
    real = bench.run_episode

    def flaky(cfg, cat, seed):
        if cat == "pen" and seed == 1:
            raise RuntimeError("simulated crash")
        return real(cfg, cat, seed)

    monkeypatch.setattr(bench, "run_episode", flaky)
    cfg = RunConfig(categories=("bottle", "pen"), seeds=3, output_dir=str(tmp_path))
    report = run_benchmark(cfg)
    pen = report.row("pen")
    assert pen.episodes == 2 and pen.successes == 2
    crashed = [e for e in report.episodes if not e.completed]
    assert len(crashed) == 1 and "simulated crash" in crashed[0].message
    assert (tmp_path / "episodes.jsonl").read_text().count("\n") == 6


def test_aggregation_matches_recount():
    eps = [
        EpisodeResult("bottle", 0, iou=1.0, f1=0.5, success=True),
        EpisodeResult("bottle", 1, iou=0.5, f1=1.0, success=False),
        EpisodeResult("bottle", 2, completed=False),
    ]
    row = aggregate(eps, ("bottle", "pen"), "d").rows
    assert row[0].episodes == 2 and row[0].successes == 1
    assert row[0].mean_iou == pytest.approx(0.75) and row[0].mean_f1 == pytest.approx(0.75)
    assert not row[1].valid


def test_report_text_layout():
    report = run_benchmark(RunConfig(categories=("pressure_cooker",), seeds=2), write=False)
    lines = report.to_text().splitlines()
    assert lines[0].startswith("# config sha256:")
    assert [c.strip() for c in lines[1].split("|")][:2] == ["Category", "IoU"]
    assert [c.strip() for c in lines[2].split("|")][:2] == ["Pressure Cooker", "1.000"] and "(2/2)" in lines[2]


def test_rerun_is_byte_identical(tmp_path):
    cfg_a = RunConfig(categories=("window", "lamp"), seeds=3, output_dir=str(tmp_path / "a"))
    cfg_b = RunConfig(categories=("window", "lamp"), seeds=3, output_dir=str(tmp_path / "b"))
    run_benchmark(cfg_a)
    run_benchmark(cfg_b)
    for name in ("report.txt", "report.jsonl", "episodes.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_from_log_recomputes(tmp_path):
    cfg = RunConfig(categories=("coffee_machine",), seeds=2, output_dir=str(tmp_path))
    report = run_benchmark(cfg)
    again = report_from_log(tmp_path / "episodes.jsonl", report.digest)
    assert again.to_text() == report.to_text()


def test_violations():
    eps = [EpisodeResult("bottle", 0, iou=1.0, f1=1.0, success=False)]
    report = aggregate(eps, ("bottle",), "d")
    bad = report.violations({"min_success_rate": 0.5, "min_iou": 0.9})
    assert len(bad) == 1 and "success" in bad[0].lower()


# --- command line ------------------------------------------------------------


def test_cli_run_and_report(tmp_path, capsys):
    out = tmp_path / "out"
    args = ["--set", "run.categories=bottle", "--set", "run.seeds=2", "--set", f"paths.output={out}"]
    assert main(["run", *args]) == 0
    text = capsys.readouterr().out
    assert "Bottle   | 1.000" in text
    assert main(["report", *args]) == 0
    assert capsys.readouterr().out.splitlines()[0] == text.splitlines()[0]
    assert main(["run", *args, "--set", "acceptance.min_success_rate=1.1"]) == 1


def test_cli_config_errors_exit_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["run", "--set", "run.bogus=1"]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_dataset_train_eval(tmp_path, capsys):
    data, model = tmp_path / "d.txt", tmp_path / "m.bin"
    assert main(["gen-dataset", "--archetypes", "cap,button", "--count", "3", "--points", "128", "--out", str(data)]) == 0
    assert "cap: 3" in capsys.readouterr().out
    assert main(["train", "--dataset", str(data), "--out", str(model), "--epochs", "3"]) == 0
    assert main(["eval-affordance", "--model", str(model), "--dataset", str(data)]) == 0
    assert "all: F1" in capsys.readouterr().out
    assert main(["eval-grounding", "--set", "run.categories=lamp", "--set", "run.seeds=2"]) == 0
    assert "Lamp | IoU 1.000" in capsys.readouterr().out


def test_model_mode_episode(tmp_path):
    data, model = tmp_path / "d.txt", tmp_path / "m.bin"
    assert main(["gen-dataset", "--archetypes", "cap", "--count", "4", "--points", "256", "--out", str(data)]) == 0
    assert main(["train", "--dataset", str(data), "--out", str(model), "--epochs", "2"]) == 0
    cfg = load_config(None, ["run.affordance=model", f"paths.model={model}"])
    res = run_episode(cfg, "bottle", 0)
    assert res.completed and 0.0 <= res.f1 <= 1.0
    assert "model_sha256" in cfg.semantic()


def test_success_rate_formatting_nine_of_ten():
    eps = [EpisodeResult("bottle", i, iou=1.0, f1=1.0, success=i != 3) for i in range(10)]
    row = aggregate(eps, ("bottle",), "d").rows[0]
    assert row.success_rate == 0.9
    assert "0.90 (9/10)" in aggregate(eps, ("bottle",), "d").to_text()


def test_wide_dilation_degrades_iou():
    from artimanip.grounding import ProviderConfig

    cfg = RunConfig(providers=ProviderConfig.perturbed(0.5))
    res = run_episode(cfg, "pressure_cooker", 0)
    assert res.iou < 1.0 and not res.success


def test_dataset_round_trip_edge_cases(tmp_path):
    from artimanip.affordance import DatasetFormatError, generate_part_library, read_dataset, write_dataset

    empty = tmp_path / "empty.txt"
    write_dataset([], empty)
    assert empty.read_text() == "" and list(read_dataset(empty)) == []
    data = generate_part_library(["cap", "knob", "button", "lever"], 25, seed=3, n_points=64)
    path = tmp_path / "lib.txt"
    write_dataset(data, path)
    assert len(data) == 100 and list(read_dataset(path)) == list(data)
    text = path.read_text()
    cut = text[: text.index("\n", len(text) // 2) + 40]  # last line ends mid-record
    path.write_text(cut)
    with pytest.raises(DatasetFormatError, match=f"line {cut.count(chr(10)) + 1}:"):
        read_dataset(path)


@pytest.mark.slow
def test_full_gt_benchmark_all_succeed():
    report = run_benchmark(RunConfig(), write=False)
    assert len(report.episodes) == 700
    assert all(r.success_rate == 1.0 and r.mean_iou == 1.0 for r in report.rows)
