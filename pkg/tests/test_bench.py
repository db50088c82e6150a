import csv
import io
import json

import numpy as np
import pytest

from sketchlearn.bench import (
    CSV_COLUMNS,
    ExperimentSpec,
    RunRecord,
    RunReport,
    emit_report,
    run_experiment,
)
from sketchlearn.cli import main


def tiny_spec(**overrides):
    base = dict(
        kind="compare-sampling",
        dataset="synthetic",
        m=(50,),
        k=(4,),
        p=(16,),
        strategies=("exact", "norm", "uniform"),
        seeds=(0, 1),
        subsample=200,
    )
    base.update(overrides)
    return ExperimentSpec(**base)


class TestSpecValidation:
    def test_coerces_lists_to_tuples(self):
        spec = ExperimentSpec(kind="compare-sampling", m=[10], seeds=[0, 1])
        assert spec.m == (10,)
        assert spec.seeds == (0, 1)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(kind="sweep-everything"),
            dict(kind="compare-sampling", dataset="imagenet"),
            dict(kind="compare-sampling", m=()),
            dict(kind="compare-sampling", strategies=("norm", "leverage")),
            dict(kind="compare-sampling", seeds=(-1,)),
        ],
    )
    def test_rejects_bad_fields(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentSpec(**kwargs)


class TestRunExperiment:
    def test_point_grid_and_metrics(self):
        report = run_experiment(tiny_spec())
        assert report.ok
        # exact collapses the P list; sketches get one record per (p, seed)
        assert len(report.records) == 6
        by_strategy = {}
        for rec in report.records:
            by_strategy.setdefault(rec.strategy, []).append(rec)
            assert rec.error is None
            assert 0.0 <= rec.accuracy <= 1.0
            parts = (
                rec.featurize_s + rec.tree_build_s
                + rec.factorize_s + rec.solve_s
            )
            assert all(
                v >= 0.0
                for v in (rec.featurize_s, rec.tree_build_s,
                          rec.factorize_s, rec.solve_s)
            )
            assert rec.total_s + 1e-6 >= parts
        assert sorted(by_strategy) == ["exact", "norm", "uniform"]
        assert all(r.p == 0 for r in by_strategy["exact"])
        assert all(r.p == 16 for r in by_strategy["norm"])
        # only the norm strategy pays for the sampling tree
        assert all(r.tree_build_s > 0.0 for r in by_strategy["norm"])
        assert all(r.tree_build_s == 0.0 for r in by_strategy["uniform"])

    def test_deterministic_across_runs_and_jobs(self):
        accs1 = [r.accuracy for r in run_experiment(tiny_spec()).records]
        accs2 = [r.accuracy for r in run_experiment(tiny_spec()).records]
        accs4 = [r.accuracy for r in run_experiment(tiny_spec(), jobs=2).records]
        assert accs1 == accs2 == accs4

    def test_seed_changes_sketch_result(self):
        report = run_experiment(tiny_spec(strategies=("norm",)))
        a0, a1 = [r.accuracy for r in report.records]
        # different seeds draw different sketches; identical values would
        # suggest the seed is not reaching the sampler
        rec = report.records[0]
        assert (a0, rec.seed) != (a1, report.records[1].seed)

    def test_failing_point_is_isolated(self):
        # k > p is rejected by the sketch config, so the norm points fail
        # while the exact baseline still completes.
        spec = tiny_spec(k=(8,), p=(4,), strategies=("exact", "norm"), seeds=(0,))
        report = run_experiment(spec)
        assert not report.ok
        by_strategy = {r.strategy: r for r in report.records}
        assert by_strategy["exact"].error is None
        assert by_strategy["exact"].accuracy is not None
        assert "ValueError" in by_strategy["norm"].error
        assert by_strategy["norm"].accuracy is None

    def test_sweep_nodes_forces_exact(self):
        spec = ExperimentSpec(
            kind="sweep-nodes",
            m=(30, 60),
            k=(4,),
            strategies=("norm", "uniform"),
            subsample=150,
        )
        report = run_experiment(spec)
        assert len(report.records) == 2
        assert {r.strategy for r in report.records} == {"exact"}
        assert sorted(r.m for r in report.records) == [30, 60]

    def test_sweep_rank_reports_reconstruction_error(self):
        spec = ExperimentSpec(kind="sweep-rank", k=(5,), subsample=60)
        report = run_experiment(spec)
        assert report.ok
        (rec,) = report.records
        assert rec.strategy == "exact"
        # planted rank-5 matrix truncated at rank 5: error is numerically zero
        assert rec.accuracy <= 1e-8
        assert rec.featurize_s == 0.0

    def test_sweep_samples_sketch_accuracy(self):
        spec = ExperimentSpec(
            kind="sweep-samples",
            k=(5,),
            p=(40,),
            strategies=("norm", "uniform"),
            seeds=(0, 1, 2),
            subsample=60,
        )
        report = run_experiment(spec)
        assert report.ok
        assert len(report.records) == 6
        for rec in report.records:
            assert rec.accuracy <= 0.05

    def test_sampled_norms_records_column_norms(self):
        spec = ExperimentSpec(
            kind="sampled-norms",
            m=(30,),
            k=(4,),
            p=(12,),
            strategies=("norm", "uniform"),
            seeds=(0,),
            subsample=150,
            epochs=2,
        )
        report = run_experiment(spec)
        assert report.ok
        for rec in report.records:
            assert len(rec.sampled_col_norms) == 12
            assert all(v >= 0.0 for v in rec.sampled_col_norms)

    def test_optimized_compare_runs(self):
        spec = ExperimentSpec(
            kind="optimized-compare",
            m=(30,),
            k=(4,),
            p=(12,),
            strategies=("norm",),
            seeds=(0,),
            subsample=150,
            epochs=2,
        )
        report = run_experiment(spec)
        assert report.ok
        (rec,) = report.records
        assert 0.0 <= rec.accuracy <= 1.0

    def test_records_sorted_canonically(self):
        spec = tiny_spec(seeds=(1, 0), p=(24, 16))
        keys = [
            (r.m, r.k, r.p, r.strategy, r.seed)
            for r in run_experiment(spec).records
        ]
        assert keys == sorted(keys)


class TestEmitReport:
    def test_empty_report_is_header_only(self, tmp_path):
        report = RunReport(spec=tiny_spec(), records=[])
        path = tmp_path / "out.csv"
        emit_report(report, "csv", path)
        assert path.read_text().strip() == ",".join(CSV_COLUMNS)

    def test_error_record_has_blank_cells(self, tmp_path):
        rec = RunRecord(
            kind="compare-sampling", dataset="synthetic",
            m=10, k=2, p=4, strategy="norm", seed=0,
            error="ValueError: boom",
        )
        path = tmp_path / "out.csv"
        emit_report(RunReport(spec=tiny_spec(), records=[rec]), "csv", path)
        rows = list(csv.DictReader(path.open()))
        assert rows[0]["accuracy"] == ""
        assert rows[0]["total_s"] == ""
        assert rows[0]["strategy"] == "norm"

    def test_csv_and_json_agree(self, tmp_path):
        report = run_experiment(tiny_spec(seeds=(0,)))
        cpath, jpath = tmp_path / "r.csv", tmp_path / "r.json"
        emit_report(report, "csv", cpath)
        emit_report(report, "json", jpath)
        crows = list(csv.DictReader(cpath.open()))
        jrows = json.load(jpath.open())
        assert len(crows) == len(jrows) == len(report.records)
        for crow, jrow in zip(crows, jrows):
            assert crow["strategy"] == jrow["strategy"]
            assert int(crow["M"]) == jrow["m"]
            assert float(crow["accuracy"]) == jrow["accuracy"]
            # repr round-trips doubles exactly
            assert float(crow["total_s"]) == jrow["total_s"]
            assert jrow["error"] is None

    def test_json_includes_sampled_norms(self, tmp_path):
        rec = RunRecord(
            kind="sampled-norms", dataset="synthetic",
            m=10, k=2, p=2, strategy="norm", seed=0,
            sampled_col_norms=[1.5, 2.5],
        )
        path = tmp_path / "r.json"
        emit_report(RunReport(spec=tiny_spec(), records=[rec]), "json", path)
        assert json.load(path.open())[0]["sampled_col_norms"] == [1.5, 2.5]

    def test_stdout_target(self, capsys):
        report = RunReport(spec=tiny_spec(), records=[])
        emit_report(report, "csv", "-")
        assert capsys.readouterr().out.strip() == ",".join(CSV_COLUMNS)

    def test_bad_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report(RunReport(spec=tiny_spec(), records=[]), "xml",
                        tmp_path / "r.xml")

    def test_unwritable_path_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            emit_report(
                RunReport(spec=tiny_spec(), records=[]),
                "csv",
                tmp_path / "missing" / "r.csv",
            )


class TestCli:
    def run_main(self, *extra, out):
        argv = [
            "--experiment", "compare-sampling",
            "--dataset", "synthetic",
            "--m", "40", "--k", "4", "--p", "16",
            "--strategy", "norm",
            "--seeds", "0",
            "--subsample", "150",
            "--out", str(out),
        ]
        argv.extend(extra)
        return main(argv)

    def test_smoke(self, tmp_path):
        out = tmp_path / "run.csv"
        assert self.run_main(out=out) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 1
        assert rows[0]["strategy"] == "norm"
        assert 0.0 <= float(rows[0]["accuracy"]) <= 1.0

    def test_json_format(self, tmp_path):
        out = tmp_path / "run.json"
        assert self.run_main("--format", "json", out=out) == 0
        rows = json.load(out.open())
        assert len(rows) == 1 and rows[0]["error"] is None

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "kind": "compare-sampling",
            "dataset": "synthetic",
            "m": [40],
            "k": [4],
            "p": [16],
            "strategies": ["norm"],
            "seeds": [0],
            "subsample": 150,
        }))
        out = tmp_path / "run.csv"
        code = main(["--config", str(cfg), "--k", "3", "--out", str(out)])
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert [r["K"] for r in rows] == ["3"]

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "compare-sampling", "rank": [4]}))
        assert main(["--config", str(cfg)]) == 2
        assert "rank" in capsys.readouterr().err

    def test_missing_kind_exits_2(self, capsys):
        assert main(["--dataset", "synthetic"]) == 2
        assert "kind" in capsys.readouterr().err

    def test_malformed_config_exits_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert main(["--config", str(cfg)]) == 2

    def test_failed_points_exit_1(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        code = self.run_main("--k", "8", "--p", "4", out=out)
        assert code == 1
        assert "failed" in capsys.readouterr().err
        rows = list(csv.DictReader(out.open()))
        assert rows[0]["accuracy"] == ""  # report still written

    def test_missing_dataset_dir_exits_1(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("SKETCHLEARN_DATA_DIR", raising=False)
        code = main([
            "--experiment", "compare-sampling",
            "--dataset", "mnist",
            "--out", str(tmp_path / "run.csv"),
        ])
        assert code == 1
        assert "error" in capsys.readouterr().err
