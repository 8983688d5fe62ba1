"""Benchmark harness: spec validation, CSV rows and resumability, strategy
comparisons, bound-accuracy measurement, and figure rendering."""

from __future__ import annotations

import json
import os

import pytest

from plexbound.bench import (
    CSV_COLUMNS,
    BenchSpec,
    bench,
    load_bench_spec,
)
from plexbound.features import FEATURE_NAMES
from plexbound.graph import write_edge_list
from plexbound.learn import ConstraintModel, TermSpec, load_model, save_model
from plexbound.pipeline import TrainingPlan, gen_random_graph, train
from plexbound.preprocess import PreprocessParams, preprocess
from plexbound.search import SearchConfig, search

from oracles import maximum_kplex_masks


def _zero_model_path(tmp_path):
    spec = TermSpec(len(FEATURE_NAMES))
    model = ConstraintModel(term_spec=spec, weights=(0.0,) * spec.num_terms, offset=0.0)
    path = tmp_path / "zero_model.json"
    save_model(model, path)
    return str(path)


def _graph_files(tmp_path, count=5, n=12, p=0.4, seed0=50):
    paths = []
    for i in range(count):
        g = gen_random_graph(n, p, seed=seed0 + i)
        path = tmp_path / f"g{i}.el"
        write_edge_list(g, path)
        paths.append(str(path))
    return paths


class TestBenchSpec:
    def test_learned_strategy_requires_a_model(self):
        with pytest.raises(ValueError, match="model_path"):
            BenchSpec(
                datasets=("a.el",),
                k_values=(1,),
                lb_values=(2,),
                time_limits=(None,),
                strategies=("learned",),
            )

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"datasets": ()},
            {"k_values": (0,)},
            {"lb_values": ()},
            {"time_limits": ()},
            {"time_limits": (0.0,)},
            {"strategies": ()},
            {"strategies": ("fancy",)},
        ],
    )
    def test_invalid_fields_are_rejected(self, kwargs):
        base = dict(
            datasets=("a.el",),
            k_values=(1,),
            lb_values=(2,),
            time_limits=(None,),
            strategies=("basic",),
        )
        base.update(kwargs)
        with pytest.raises(ValueError):
            BenchSpec(**base)

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(ValueError, match="unknown bench spec fields: extra"):
            BenchSpec.from_dict(
                {
                    "datasets": ["a.el"],
                    "k_values": [1],
                    "lb_values": [2],
                    "time_limits": [None],
                    "strategies": ["basic"],
                    "extra": 1,
                }
            )

    def test_load_spec_from_file(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(
            json.dumps(
                {
                    "datasets": ["a.el"],
                    "k_values": [2],
                    "lb_values": [3],
                    "time_limits": [None, 1.5],
                    "strategies": ["basic", "none"],
                    "output": "out.csv",
                }
            )
        )
        spec = load_bench_spec(path)
        assert spec.time_limits == (None, 1.5)
        assert spec.strategies == ("basic", "none")
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        with pytest.raises(ValueError, match="not valid JSON"):
            load_bench_spec(bad)

    def test_missing_dataset_file_fails_before_any_run(self, tmp_path):
        spec = BenchSpec(
            datasets=(str(tmp_path / "ghost.el"),),
            k_values=(1,),
            lb_values=(2,),
            time_limits=(None,),
            strategies=("basic",),
            output=str(tmp_path / "out.csv"),
        )
        with pytest.raises(FileNotFoundError, match="ghost"):
            bench(spec, plots=False)


class TestBenchRuns:
    def test_five_datasets_two_strategies_yield_ten_ordered_rows(self, tmp_path):
        datasets = _graph_files(tmp_path)
        out = tmp_path / "bench.csv"
        spec = BenchSpec(
            datasets=tuple(datasets),
            k_values=(2,),
            lb_values=(3,),
            time_limits=(None,),
            strategies=("basic", "learned"),
            model_path=_zero_model_path(tmp_path),
            output=str(out),
        )
        rows = bench(spec, plots=False)
        assert len(rows) == 10
        assert [(r["dataset"], r["strategy"]) for r in rows] == [
            (d, s) for d in datasets for s in ("basic", "learned")
        ]
        for row in rows:
            assert row["size"] == 0 or row["size"] >= 3
            assert row["nodes"] >= 1
            assert row["bound_calls"] >= row["bound_prunes"] >= 0
        with open(out, newline="") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 11

    def test_unbounded_search_visits_at_least_as_many_nodes_as_basic(self, tmp_path):
        datasets = _graph_files(tmp_path, count=2, n=12, p=0.5, seed0=70)
        spec = BenchSpec(
            datasets=tuple(datasets),
            k_values=(2,),
            lb_values=(3,),
            time_limits=(None,),
            strategies=("basic", "none"),
            output=str(tmp_path / "cmp.csv"),
        )
        rows = bench(spec, plots=False)
        by = {(r["dataset"], r["strategy"]): r for r in rows}
        for d in datasets:
            basic, none = by[(d, "basic")], by[(d, "none")]
            assert none["nodes"] >= basic["nodes"]
            assert none["size"] == basic["size"]
            assert none["bound_calls"] == 0 and none["accuracy"] is None

    def test_resume_skips_existing_rows_and_appends_new_ones(self, tmp_path):
        datasets = _graph_files(tmp_path, count=2, seed0=90)
        out = tmp_path / "resume.csv"
        first = BenchSpec(
            datasets=tuple(datasets),
            k_values=(1,),
            lb_values=(3,),
            time_limits=(None,),
            strategies=("basic",),
            output=str(out),
        )
        rows1 = bench(first, plots=False)
        original = out.read_text()
        extended = BenchSpec(
            datasets=tuple(datasets),
            k_values=(1, 2),
            lb_values=(3,),
            time_limits=(None,),
            strategies=("basic",),
            output=str(out),
        )
        rows2 = bench(extended, plots=False)
        assert len(rows1) == 2 and len(rows2) == 4
        after = out.read_text()
        assert after.startswith(original)  # old rows untouched, not recomputed
        assert len(after.splitlines()) == 5
        # resumed results carry the old measurements through at CSV precision
        key = lambda r: (r["dataset"], r["k"], r["strategy"])
        old = {key(r): r for r in rows1}
        for r in rows2:
            if key(r) in old:
                want = old[key(r)]
                assert {k: v for k, v in r.items() if k != "wall_time_s"} == {
                    k: v for k, v in want.items() if k != "wall_time_s"
                }
                assert r["wall_time_s"] == float(f"{want['wall_time_s']:.6f}")

    def test_existing_csv_with_a_different_header_is_rejected(self, tmp_path):
        datasets = _graph_files(tmp_path, count=1, seed0=95)
        out = tmp_path / "clash.csv"
        out.write_text("dataset,size\nx,1\n")
        spec = BenchSpec(
            datasets=tuple(datasets),
            k_values=(1,),
            lb_values=(2,),
            time_limits=(None,),
            strategies=("basic",),
            output=str(out),
        )
        with pytest.raises(ValueError, match="does not match"):
            bench(spec, plots=False)

    def test_time_limited_rows_never_carry_accuracy(self, tmp_path):
        datasets = _graph_files(tmp_path, count=1, n=14, p=0.5, seed0=97)
        spec = BenchSpec(
            datasets=tuple(datasets),
            k_values=(2,),
            lb_values=(3,),
            time_limits=(5.0, None),
            strategies=("basic", "learned"),
            model_path=_zero_model_path(tmp_path),
            output=str(tmp_path / "tl.csv"),
        )
        rows = bench(spec, plots=False)
        for row in rows:
            if row["strategy"] == "learned" and row["time_limit"] is None:
                assert row["accuracy"] is not None
            else:
                assert row["accuracy"] is None

    def test_pruneless_learned_run_scores_perfect_accuracy(self, tmp_path):
        datasets = _graph_files(tmp_path, count=1, seed0=99)
        spec = BenchSpec(
            datasets=tuple(datasets),
            k_values=(2,),
            lb_values=(3,),
            time_limits=(None,),
            strategies=("learned",),
            model_path=_zero_model_path(tmp_path),  # never prunes
            output=str(tmp_path / "acc1.csv"),
        )
        rows = bench(spec, plots=False)
        assert rows[0]["bound_prunes"] == 0
        assert rows[0]["accuracy"] == 1.0

    def test_accuracy_matches_a_manual_prune_replay(self, tmp_path):
        # Train a real model, benchmark it to exhaustion, then recompute the
        # accuracy independently: replay the same search recording every
        # prune and test each pruned region against the true maximum
        # solutions of the same reduced graph.
        plan = TrainingPlan(
            graph_sizes=(14, 16),
            graphs_per_size=2,
            k_values=(2,),
            lb_values=(3,),
            per_run_budget=10.0,
            solver_budget=60.0,
            edge_probability=0.3,
            seed=5,
            trace_cap=20_000,
        )
        model_path = tmp_path / "trained.json"
        train(plan, model_out=model_path)
        datasets = _graph_files(tmp_path, count=2, n=14, p=0.3, seed0=120)
        spec = BenchSpec(
            datasets=tuple(datasets),
            k_values=(2,),
            lb_values=(3,),
            time_limits=(None,),
            strategies=("learned",),
            model_path=str(model_path),
            output=str(tmp_path / "acc2.csv"),
        )
        rows = bench(spec, plots=False)
        model = load_model(model_path)
        for row in rows:
            assert 0.0 <= row["accuracy"] <= 1.0
            from plexbound.graph import load_edge_list

            reduced = preprocess(
                load_edge_list(row["dataset"]), PreprocessParams(k=2, lb=3)
            ).result
            maxima = maximum_kplex_masks(reduced, k=2, lb=3)
            prunes = []

            def on_prune(vs, va):
                vs_m = sum(1 << v for v in vs)
                va_m = sum(1 << v for v in va)
                prunes.append((vs_m, va_m))

            search(
                reduced,
                SearchConfig(k=2, lb=3, bound=model),
                on_prune=on_prune,
            )
            assert len(prunes) == row["bound_prunes"]
            if not prunes:
                assert row["accuracy"] == 1.0
                continue
            wrong = 0
            for vs_m, va_m in prunes:
                reach = vs_m | va_m
                if any(m & vs_m == vs_m and m | reach == reach for m in maxima):
                    wrong += 1
            assert row["accuracy"] == 1.0 - wrong / len(prunes)

    def test_figures_are_rendered_next_to_the_csv(self, tmp_path):
        datasets = _graph_files(tmp_path, count=2, seed0=130)
        out = tmp_path / "figs.csv"
        spec = BenchSpec(
            datasets=tuple(datasets),
            k_values=(1,),
            lb_values=(3,),
            time_limits=(None,),
            strategies=("basic", "learned"),
            model_path=_zero_model_path(tmp_path),
            output=str(out),
        )
        bench(spec, plots=True)
        fig_dir = tmp_path / "figs_figs"
        assert fig_dir.is_dir()
        names = sorted(os.listdir(fig_dir))
        assert names == ["accuracy.png", "compare_k1_lb3_tlnone.png"]
        for name in names:
            assert (fig_dir / name).stat().st_size > 0

    def test_parallel_jobs_produce_the_same_rows_as_serial(self, tmp_path):
        datasets = _graph_files(tmp_path, count=3, n=11, p=0.4, seed0=140)
        serial_out = tmp_path / "serial.csv"
        parallel_out = tmp_path / "parallel.csv"
        base = dict(
            datasets=tuple(datasets),
            k_values=(1, 2),
            lb_values=(3,),
            time_limits=(None,),
            strategies=("basic",),
        )
        rows_serial = bench(BenchSpec(**base, output=str(serial_out)), plots=False)
        rows_parallel = bench(
            BenchSpec(**base, output=str(parallel_out)), jobs=3, plots=False
        )
        strip = lambda r: {k: v for k, v in r.items() if k != "wall_time_s"}
        assert [strip(r) for r in rows_serial] == [strip(r) for r in rows_parallel]
