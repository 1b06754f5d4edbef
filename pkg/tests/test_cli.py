import json

import numpy as np
import pytest

from crfconv.constants.output_dir import OUTPUT_DIR_ENV
from crfconv.core.cloud import read_cloud
from crfconv.main import main
from crfconv.models.enums.cloud import CloudFormat
from crfconv.tasks.diffusion import REPORT_HEADER
from crfconv.utils.fixtures import planted_clusters


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


@pytest.fixture
def write_file(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text if isinstance(text, str) else json.dumps(text))
        return str(path)

    return write


def _csv(rows):
    return "".join(",".join("%.17g" % v for v in row) + "\n" for row in rows)


def _rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def _synthetic(write_file, points=120, clusters=3, noise=0.1, **extra):
    return write_file("run.json", {"input": {"synthetic": {"points": points, "clusters": clusters, "noise": noise}}, **extra})


class TestBuildGraph:
    def test_knn_edges(self, tmp_path, write_file):
        cloud = write_file("cloud.csv", "0,0,0\n1,0,0\n3,0,0\n")
        assert main(["build-graph", "--input", cloud, "--k", "1", "--output-dir", str(tmp_path / "out")]) == 0
        header, rows = _rows(tmp_path / "out" / "graph.csv")
        assert header == ["src", "dst", "distance"]
        assert rows == [["0", "1", "1"], ["1", "0", "1"], ["2", "1", "2"]]

    def test_saturated_k_gives_complete_graph(self, tmp_path, write_file, rng):
        positions = rng.standard_normal((6, 3))
        cloud = write_file("cloud.csv", _csv(positions))
        assert main(["build-graph", "--input", cloud, "--k", "10"]) == 0
        _, rows = _rows(tmp_path / "graph.csv")
        assert len(rows) == 6 * 5

    def test_missing_input(self, tmp_path, capsys):
        assert main(["build-graph", "--input", str(tmp_path / "nope.csv")]) == 1
        assert "crfconv build-graph:" in capsys.readouterr().err

    def test_abort_is_one_line_unless_verbose(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.csv")
        assert main(["build-graph", "--input", missing]) == 1
        err = capsys.readouterr().err
        assert len(err.strip().splitlines()) == 1
        assert "Traceback" not in err
        assert main(["build-graph", "--input", missing, "--verbose"]) == 1
        assert "Traceback" in capsys.readouterr().err

    def test_parse_error_names_line(self, write_file, capsys):
        cloud = write_file("bad.csv", "0,0,0\n1,2\n")
        assert main(["build-graph", "--input", cloud]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_sampling_writes_selected_indices(self, tmp_path, write_file, rng):
        positions = rng.standard_normal((10, 3))
        cloud = write_file("cloud.csv", _csv(positions))
        assert main(["build-graph", "--input", cloud, "--k", "2", "--sample-ratio", "0.5", "--seed", "4"]) == 0
        header, rows = _rows(tmp_path / "samples.csv")
        assert header == ["index"] and len(rows) == 5
        assert len({int(r[0]) for r in rows}) == 5
        _, edges = _rows(tmp_path / "graph.csv")
        assert len(edges) == 5 * 2
        assert max(int(e[0]) for e in edges) == 4

    def test_radius_requires_radius(self, write_file, capsys):
        cloud = write_file("cloud.csv", "0,0,0\n1,0,0\n")
        assert main(["build-graph", "--input", cloud, "--graph-kind", "radius"]) == 1
        assert "radius" in capsys.readouterr().err


class TestSmooth:
    def test_infinite_tolerance_is_readout_of_input(self, tmp_path, write_file, rng):
        data = np.hstack([rng.standard_normal((8, 3)), rng.standard_normal((8, 2))])
        cloud = write_file("cloud.csv", _csv(data))
        assert main(["smooth", "--input", cloud, "--k", "3", "--tol", "inf"]) == 0
        out = read_cloud(tmp_path / "smoothed.csv", CloudFormat.CSV_XYZ)
        features = data[:, 3:]
        np.testing.assert_allclose(out.features, np.where(features > 0, features, 0.1 * features))
        _, trace = _rows(tmp_path / "trace.csv")
        assert len(trace) == 1

    def test_two_node_trace_and_exact_check(self, tmp_path, write_file, capsys):
        cloud = write_file("pair.csv", "0,0,0,0\n1,0,0,2\n")
        argv = ["smooth", "--input", cloud, "--k", "1", "--identity-compat", "--steps", "60", "--check-exact"]
        assert main(argv) == 0
        header, trace = _rows(tmp_path / "trace.csv")
        assert header == ["step", "energy"]
        energies = [float(e) for _, e in trace]
        assert energies[0] == pytest.approx(4.0)
        assert energies[-1] == pytest.approx(4 / 3, abs=1e-12)
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
        out = read_cloud(tmp_path / "smoothed.csv", CloudFormat.CSV_XYZ)
        np.testing.assert_allclose(out.features.ravel(), [2 / 3, 4 / 3], atol=1e-12)
        err = capsys.readouterr().err
        assert "max deviation from exact solution:" in err
        assert float(err.split("solution:")[1].split()[0]) < 1e-12

    def test_isolated_node_trace_descends_from_step_one(self, tmp_path, write_file, capsys):
        cloud = write_file("line.csv", "0,0,0,0\n1,0,0,2\n10,0,0,5\n")
        config = write_file("run.json", {"graph": {"kind": "radius", "radius": 2.0}})
        argv = ["smooth", "--config", config, "--input", cloud, "--identity-compat", "--schedule", "gauss-seidel", "--steps", "3"]
        assert main(argv) == 0
        _, trace = _rows(tmp_path / "trace.csv")
        energies = [float(e) for _, e in trace]
        assert len(energies) == 4
        assert energies[1] > energies[0]
        assert all(b <= a + 1e-10 for a, b in zip(energies[1:], energies[2:]))
        assert "1 isolated node(s)" in capsys.readouterr().err

    def test_positions_only_cloud_is_rejected(self, write_file, capsys):
        cloud = write_file("cloud.csv", "0,0,0\n1,0,0\n")
        assert main(["smooth", "--input", cloud, "--k", "1"]) == 1
        assert "no feature channels" in capsys.readouterr().err

    def test_compat_file_shape_checked(self, write_file, capsys):
        cloud = write_file("pair.csv", "0,0,0,0\n1,0,0,2\n")
        compat = write_file("c.csv", "1,0\n0,1\n")
        assert main(["smooth", "--input", cloud, "--k", "1", "--compat-file", compat]) == 1
        assert "compat file" in capsys.readouterr().err


class TestRefineLabels:
    @pytest.fixture
    def labelled_cloud(self, write_file, rng):
        data = np.hstack([rng.standard_normal((6, 3)), rng.standard_normal((6, 2))])
        cloud = write_file("cloud.csv", _csv(data))
        p = rng.dirichlet(np.ones(3), size=6)
        probabilities = write_file("p.csv", _csv(p))
        return cloud, probabilities, p

    def test_zero_kernel_keeps_probabilities(self, tmp_path, labelled_cloud):
        cloud, probabilities, p = labelled_cloud
        argv = ["refine-labels", "--input", cloud, "--probabilities", probabilities, "--k", "2", "--zero-kernel"]
        assert main(argv) == 0
        header, rows = _rows(tmp_path / "refined.csv")
        assert header == ["p0", "p1", "p2"]
        np.testing.assert_allclose(np.array(rows, dtype=float), p, atol=1e-12)
        _, labels = _rows(tmp_path / "labels.csv")
        assert [int(r[0]) for r in labels] == np.argmax(p, axis=1).tolist()

    def test_malformed_row_is_named(self, write_file, labelled_cloud, capsys):
        cloud, _, p = labelled_cloud
        p = p.copy()
        p[1, 0] += 0.01
        bad = write_file("bad.csv", _csv(p))
        assert main(["refine-labels", "--input", cloud, "--probabilities", bad, "--k", "2"]) == 1
        assert "row 1" in capsys.readouterr().err

    def test_row_count_must_match(self, write_file, labelled_cloud, capsys):
        cloud, _, p = labelled_cloud
        short = write_file("short.csv", _csv(p[:4]))
        assert main(["refine-labels", "--input", cloud, "--probabilities", short, "--k", "2"]) == 1
        assert "4 rows for 6 points" in capsys.readouterr().err

    def test_planted_clusters_are_cleaned_up(self, tmp_path, write_file):
        config = _synthetic(write_file, points=200, clusters=2, noise=0.15, graph={"k": 8})
        assert main(["refine-labels", "--config", config]) == 0
        planted = planted_clusters(200, 2, 0.15, seed=0)
        _, rows = _rows(tmp_path / "labels.csv")
        labels = np.array([int(r[0]) for r in rows])
        before = np.mean(np.argmax(planted.probabilities, axis=1) == planted.truth)
        after = np.mean(labels == planted.truth)
        assert after > before and after > 0.95


class TestDiffuseCompare:
    def test_report(self, tmp_path, write_file):
        config = _synthetic(write_file, graph={"k": 6})
        assert main(["diffuse-compare", "--config", config, "--steps", "5"]) == 0
        header, rows = _rows(tmp_path / "report.csv")
        assert header == REPORT_HEADER
        assert [int(r[0]) for r in rows] == list(range(6))
        step1 = [float(v) for v in rows[1]]
        assert step1[1] == pytest.approx(step1[3], abs=1e-12)
        crf_fidelity = [float(r[1]) for r in rows]
        diff_fidelity = [float(r[3]) for r in rows]
        assert crf_fidelity[-1] < diff_fidelity[-1]

    def test_unstable_coefficient_rejected(self, write_file, capsys):
        config = _synthetic(write_file)
        assert main(["diffuse-compare", "--config", config, "--c", "1.5"]) == 1
        assert "invalid configuration" in capsys.readouterr().err


class TestSweepSteps:
    def test_single_step_matches_smooth(self, tmp_path, write_file):
        config = _synthetic(write_file, graph={"k": 6})
        assert main(["smooth", "--config", config, "--steps", "1"]) == 0
        assert main(["sweep-steps", "--config", config, "--steps", "1"]) == 0
        _, trace = _rows(tmp_path / "trace.csv")
        header, sweep = _rows(tmp_path / "sweep.csv")
        assert header == ["T", "energy", "fidelity", "diffusion_fidelity"]
        assert sweep[0][0] == "1"
        assert sweep[0][1] == trace[-1][1]

    def test_timing_column_is_opt_in(self, tmp_path, write_file):
        config = _synthetic(write_file, graph={"k": 6})
        assert main(["sweep-steps", "--config", config, "--steps", "3", "1", "--report-timing"]) == 0
        header, rows = _rows(tmp_path / "sweep.csv")
        assert header[-1] == "wall_time"
        assert [r[0] for r in rows] == ["1", "3"]

    def test_energy_and_fidelity_against_diffusion(self, tmp_path, write_file):
        config = _synthetic(write_file, points=300, clusters=3)
        assert main(["sweep-steps", "--config", config, "--schedule", "gauss-seidel"]) == 0
        _, rows = _rows(tmp_path / "sweep.csv")
        table = np.array(rows, dtype=float)
        assert table[:, 0].tolist() == [1, 2, 5, 10, 20, 50]
        energy = table[:, 1]
        assert np.all(np.diff(energy) <= 1e-10 * (1 + np.abs(energy[:-1])))
        late = table[:, 0] >= 5
        assert np.all(table[late, 2] <= table[late, 3])


class TestCheckOracle:
    def test_random_instance_passes(self, tmp_path):
        assert main(["check-oracle", "--seed", "7"]) == 0
        header, rows = _rows(tmp_path / "oracle.csv")
        assert header == ["check", "value", "tolerance", "passed"]
        assert rows and all(r[3] == "1" for r in rows)

    def test_synthetic_cloud_passes(self, tmp_path, write_file):
        config = _synthetic(write_file, points=60, graph={"k": 5})
        assert main(["check-oracle", "--config", config]) == 0


class TestDeterminism:
    @pytest.mark.parametrize(
        "command,extra,outputs",
        [
            ("build-graph", [], ["graph.csv", "samples.csv"]),
            ("smooth", [], ["smoothed.csv", "trace.csv"]),
            ("refine-labels", [], ["refined.csv", "labels.csv"]),
            ("diffuse-compare", ["--steps", "20"], ["report.csv"]),
            ("sweep-steps", ["--steps", "1", "5", "20"], ["sweep.csv"]),
            ("check-oracle", [], ["oracle.csv"]),
        ],
    )
    def test_thread_count_does_not_change_outputs(self, tmp_path, write_file, command, extra, outputs):
        config = _synthetic(write_file, points=600, graph={"k": 8, "sampleRatio": 0.9})
        for threads in ("1", "4"):
            assert main([command, *extra, "--config", config, "--threads", threads, "--output-dir", str(tmp_path / threads)]) == 0
        for name in outputs:
            assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "4" / name).read_bytes()

    def test_repeated_runs_are_identical(self, tmp_path, write_file):
        config = _synthetic(write_file, points=200)
        for run in ("a", "b"):
            assert main(["sweep-steps", "--config", config, "--steps", "1", "4", "--output-dir", str(tmp_path / run)]) == 0
        assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


class TestOutputDirectory:
    def test_environment_beats_config_and_flag_beats_environment(self, tmp_path, write_file, monkeypatch):
        cloud = write_file("cloud.csv", "0,0,0\n1,0,0\n3,0,0\n")
        config = write_file("run.json", {"output": {"dir": str(tmp_path / "from-config")}})
        assert main(["build-graph", "--config", config, "--input", cloud, "--k", "1"]) == 0
        assert (tmp_path / "from-config" / "graph.csv").exists()

        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "from-env"))
        assert main(["build-graph", "--config", config, "--input", cloud, "--k", "1"]) == 0
        assert (tmp_path / "from-env" / "graph.csv").exists()

        argv = ["build-graph", "--config", config, "--input", cloud, "--k", "1", "--output-dir", str(tmp_path / "flag")]
        assert main(argv) == 0
        assert (tmp_path / "flag" / "graph.csv").exists()

    def test_input_flag_replaces_synthetic_block(self, tmp_path, write_file):
        cloud = write_file("cloud.csv", "0,0,0\n1,0,0\n3,0,0\n")
        config = _synthetic(write_file)
        assert main(["build-graph", "--config", config, "--input", cloud, "--k", "1"]) == 0
        _, rows = _rows(tmp_path / "graph.csv")
        assert len(rows) == 3
