import numpy as np
import pytest

from egokit.bench import (
    ConfigError,
    RunConfig,
    aggregate_directory,
    emit_sweep_trace,
    initial_design,
    main,
    median_best_curve,
    parse_config_file,
    read_best_curve,
    run_benchmark,
)


def tiny_ego_config(out, **overrides):
    settings = dict(algorithm="ego", function="sphere", dimension=1,
                    init_size=4, budget=6, repetitions=2, base_seed=3,
                    ei_search_budget=200, output_path=str(out))
    settings.update(overrides)
    return RunConfig(**settings)


class TestRunConfig:
    def test_protocol_defaults(self):
        config = RunConfig(algorithm="ensemble", function="sphere", dimension=5).finalize()
        assert config.init_size == 15
        assert config.budget == 75
        assert config.repetitions == 8
        assert config.ei_search_budget == 10000

    def test_ego_defaults(self):
        config = RunConfig(algorithm="ego", function="ackley", dimension=5).finalize()
        assert config.budget == 350
        assert config.repetitions == 5

    def test_invalid_algorithm(self):
        with pytest.raises(ConfigError):
            RunConfig(algorithm="annealing", function="sphere", dimension=2).finalize()

    def test_invalid_function(self):
        with pytest.raises(ConfigError):
            RunConfig(algorithm="ego", function="mystery", dimension=2).finalize()

    def test_theta_grid_by_count(self):
        config = RunConfig(algorithm="greedy-sweep", function="sphere", dimension=2,
                           theta_min=0.01, theta_step=0.1, theta_count=64)
        grid = config.theta_grid()
        assert grid.shape == (64,)
        assert grid[0] == pytest.approx(0.01)
        assert grid[-1] == pytest.approx(0.01 + 0.1 * 63)

    def test_theta_grid_by_range(self):
        config = RunConfig(algorithm="greedy-sweep", function="sphere", dimension=1,
                           theta_min=0.01, theta_max=20.0, theta_step=0.1)
        grid = config.theta_grid()
        assert grid[0] == pytest.approx(0.01)
        assert grid[-1] <= 20.0
        assert grid.size == 200


class TestInitialDesign:
    def test_shared_across_algorithms(self):
        kwargs = dict(function="sphere", dimension=3, init_size=9, base_seed=42)
        a = RunConfig(algorithm="ego", **kwargs).finalize()
        b = RunConfig(algorithm="ensemble", **kwargs).finalize()
        doe_a = initial_design(a, repetition=2)
        doe_b = initial_design(b, repetition=2)
        assert np.array_equal(doe_a.X, doe_b.X)
        assert np.array_equal(doe_a.y, doe_b.y)

    def test_differs_across_repetitions(self):
        config = RunConfig(algorithm="ego", function="sphere", dimension=2).finalize()
        assert not np.array_equal(initial_design(config, 0).X,
                                  initial_design(config, 1).X)


class TestRunBenchmark:
    def test_record_files_and_row_counts(self, tmp_path):
        config = tiny_ego_config(tmp_path)
        result = run_benchmark(config)
        assert not result["failures"]
        assert len(result["records"]) == 2
        for path in result["records"]:
            lines = path.read_text().strip().splitlines()
            assert lines[0] == "run_id,eval_index,x_0,f,best_so_far,provenance"
            assert len(lines) == 1 + config.budget
            provenances = [line.split(",")[-1] for line in lines[1:]]
            assert provenances[:4] == ["init"] * 4
            assert provenances[4:] == ["ml-ego"] * 2

    def test_byte_identical_reruns(self, tmp_path):
        result_a = run_benchmark(tiny_ego_config(tmp_path / "a"))
        result_b = run_benchmark(tiny_ego_config(tmp_path / "b"))
        for pa, pb in zip(result_a["records"], result_b["records"]):
            assert pa.read_bytes() == pb.read_bytes()
        assert result_a["aggregate"].read_bytes() == result_b["aggregate"].read_bytes()

    def test_aggregate_matches_independent_recomputation(self, tmp_path):
        config = tiny_ego_config(tmp_path, repetitions=3)
        result = run_benchmark(config)
        # recompute medians directly from the raw column data
        tables = []
        for path in result["records"]:
            rows = [line.split(",") for line in path.read_text().strip().splitlines()[1:]]
            tables.append([float(r[-2]) for r in rows])
        expected = np.median(np.array(tables), axis=0)
        agg_rows = result["aggregate"].read_text().strip().splitlines()[1:]
        got = np.array([float(r.split(",")[1]) for r in agg_rows])
        np.testing.assert_allclose(got, expected, rtol=0, atol=0)

    def test_ensemble_provenances(self, tmp_path):
        config = RunConfig(algorithm="ensemble", function="sphere", dimension=2,
                           init_size=6, budget=2, repetitions=1, base_seed=1,
                           ei_search_budget=200, output_path=str(tmp_path))
        result = run_benchmark(config)
        lines = result["records"][0].read_text().strip().splitlines()[1:]
        tags = {line.split(",")[-1] for line in lines}
        assert tags <= {"init", "selected", "densified", "fallback"}
        manifest = result["manifest"].read_text()
        assert "t_threshold = 2" in manifest

    def test_manifest_lists_every_setting(self, tmp_path):
        config = tiny_ego_config(tmp_path)
        result = run_benchmark(config)
        manifest = result["manifest"].read_text()
        for key in ("algorithm = ego", "function = sphere", "dimension = 1",
                    "budget = 6", "repetitions = 2", "base_seed = 3",
                    "ei_search_budget = 200", "init_size = 4"):
            assert key in manifest


class TestSweepTraces:
    def test_single_theta_grid_gives_single_row_traces(self, tmp_path):
        config = RunConfig(algorithm="greedy-sweep", function="sphere", dimension=1,
                           init_size=4, budget=2, repetitions=1, base_seed=0,
                           ei_search_budget=200, theta_min=1.0, theta_step=0.1,
                           theta_count=1, output_path=str(tmp_path))
        paths = emit_sweep_trace(config)
        assert len(paths) == 2
        for path in paths:
            lines = path.read_text().strip().splitlines()
            assert lines[0] == "theta,x_0,f,group"
            assert len(lines) == 2
            assert lines[1].split(",")[-1] == "1"

    def test_sixty_four_thetas_form_eight_groups_of_eight(self, tmp_path):
        config = RunConfig(algorithm="greedy-sweep", function="sphere", dimension=2,
                           init_size=5, budget=1, repetitions=1, base_seed=0,
                           ei_search_budget=150, theta_min=0.01, theta_step=0.1,
                           theta_count=64, output_path=str(tmp_path))
        paths = emit_sweep_trace(config)
        assert len(paths) == 1
        rows = paths[0].read_text().strip().splitlines()[1:]
        groups = [int(r.split(",")[-1]) for r in rows]
        assert len(rows) == 64
        counts = {g: groups.count(g) for g in sorted(set(groups))}
        assert counts == {g: 8 for g in range(1, 9)}

    def test_requires_greedy_sweep_algorithm(self, tmp_path):
        with pytest.raises(ConfigError):
            emit_sweep_trace(tiny_ego_config(tmp_path))


class TestMedianCurve:
    def test_carries_short_runs_forward(self):
        curves = [
            (np.array([1, 2, 3]), np.array([5.0, 4.0, 3.0])),
            (np.array([1, 2, 3, 4, 5]), np.array([6.0, 6.0, 2.0, 2.0, 1.0])),
        ]
        index, med = median_best_curve(curves)
        assert list(index) == [1, 2, 3, 4, 5]
        np.testing.assert_allclose(med, [5.5, 5.0, 2.5, 2.5, 2.0])


class TestCli:
    def test_run_and_aggregate_roundtrip(self, tmp_path):
        out = tmp_path / "results"
        code = main(["run", "--algorithm", "ego", "--function", "sphere",
                     "--dim", "1", "--budget", "6", "--reps", "2", "--seed", "3",
                     "--init-size", "4", "--ei-budget", "200", "--out", str(out)])
        assert code == 0
        agg = tmp_path / "median.csv"
        code = main(["aggregate", "--in", str(out), "--out", str(agg)])
        assert code == 0
        assert agg.read_bytes() == (out / "ego_sphere_d1_median.csv").read_bytes()

    def test_invalid_config_exits_nonzero(self, capsys):
        code = main(["run", "--algorithm", "ego", "--function", "sphere",
                     "--dim", "0", "--out", "unused"])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_missing_required_setting_exits_nonzero(self, capsys):
        code = main(["run", "--function", "sphere", "--dim", "2"])
        assert code == 2
        assert "algorithm" in capsys.readouterr().err

    def test_config_file_with_flag_overrides(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# benchmark settings\n"
            "algorithm = ego\n"
            "function = sphere\n"
            "dimension = 1\n"
            "init_size = 4\n"
            "budget = 5\n"
            "repetitions = 1\n"
            "base_seed = 9\n"
            "ei_search_budget = 150\n")
        out = tmp_path / "results"
        code = main(["run", "--config", str(cfg), "--budget", "6", "--out", str(out)])
        assert code == 0
        lines = (out / "ego_sphere_d1_rep00.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 6  # flag overrides the file's budget of 5

    def test_config_file_parsing(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("algorithm = ensemble  # trailing comment\n"
                       "dimension = 3\n"
                       "densify_on_updated_doe = true\n")
        values = parse_config_file(cfg)
        assert values == {"algorithm": "ensemble", "dimension": 3,
                          "densify_on_updated_doe": True}

    def test_config_file_rejects_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("algorithm = ego\nwarp_speed = 9\n")
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path)])
        assert code == 2

    def test_aggregate_rejects_mixed_prefixes(self, tmp_path, capsys):
        run_benchmark(tiny_ego_config(tmp_path))
        run_benchmark(tiny_ego_config(tmp_path, function="ackley"))
        code = main(["aggregate", "--in", str(tmp_path), "--out", str(tmp_path / "m.csv")])
        assert code == 2
        assert "prefixes" in capsys.readouterr().err


class TestReadBestCurve:
    def test_roundtrip(self, tmp_path):
        config = tiny_ego_config(tmp_path, repetitions=1)
        result = run_benchmark(config)
        idx, best = read_best_curve(result["records"][0])
        assert list(idx) == list(range(1, config.budget + 1))
        assert all(a >= b for a, b in zip(best, best[1:]))

    def test_aggregate_directory_empty_dir_raises(self, tmp_path):
        with pytest.raises(ConfigError):
            aggregate_directory(tmp_path, tmp_path / "out.csv")
