import json
import math

import pytest
from pydantic import ValidationError

from crfconv.constants.output_dir import OUTPUT_DIR_ENV, get_output_dir
from crfconv.models.enums.cloud import GraphKind
from crfconv.models.enums.crf import Activation, Schedule
from crfconv.models.enums.labels import CompatPreset
from crfconv.schemas.config import RunConfig, load_run_config


@pytest.fixture
def write_config(tmp_path):
    def write(document, name="config.json"):
        path = tmp_path / name
        path.write_text(document if isinstance(document, str) else json.dumps(document))
        return path

    return write


def test_defaults():
    cfg = load_run_config(None)
    assert cfg.graph.kind == GraphKind.KNN and cfg.graph.k == 16
    assert cfg.crf.steps == 10 and cfg.crf.schedule == Schedule.JACOBI
    assert cfg.crf.activation == Activation.LEAKY_RELU and cfg.crf.slope == 0.1
    assert cfg.crf.epsilon == 1e-4 and cfg.crf.tol == 0.0
    assert cfg.discrete.compat == CompatPreset.POTTS_COMPLEMENT
    assert cfg.diffusion.c == 0.5
    assert cfg.sweep.report_timing is False
    assert cfg.threads == 1


def test_camel_case_keys(write_config):
    path = write_config({"graph": {"kind": "dilated-knn", "sampleRatio": 0.5}, "crf": {"unaryFile": "u.json"}})
    cfg = load_run_config(path)
    assert cfg.graph.kind == GraphKind.DILATED_KNN
    assert cfg.graph.sample_ratio == 0.5
    assert cfg.crf.unary_file == "u.json"


def test_unknown_keys_are_rejected(write_config):
    with pytest.raises(ValidationError):
        load_run_config(write_config({"crf": {"stepz": 3}}))


def test_radius_graph_needs_radius():
    with pytest.raises(ValidationError, match="radius"):
        RunConfig.model_validate({"graph": {"kind": "radius"}})
    assert RunConfig.model_validate({"graph": {"kind": "radius", "radius": 0.04}}).graph.radius == 0.04


def test_infinite_tolerance_is_accepted(write_config):
    cfg = load_run_config(write_config('{"crf": {"tol": Infinity}}'))
    assert math.isinf(cfg.crf.tol)


def test_nan_tolerance_is_rejected(write_config):
    with pytest.raises(ValidationError):
        load_run_config(write_config('{"crf": {"tol": NaN}}'))


@pytest.mark.parametrize("epsilon", ["0", "-1e-4", "Infinity"])
def test_epsilon_must_be_positive_and_finite(write_config, epsilon):
    with pytest.raises(ValidationError):
        load_run_config(write_config(f'{{"crf": {{"epsilon": {epsilon}}}}}'))


def test_path_and_synthetic_are_exclusive():
    with pytest.raises(ValidationError, match="not both"):
        RunConfig.model_validate({"input": {"path": "cloud.csv", "synthetic": {}}})


def test_learned_preset_needs_file():
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"discrete": {"compat": "learned-from-file"}})


@pytest.mark.parametrize("section", [{"steps": []}, {"steps": [3, 0]}])
def test_sweep_steps_validated(section):
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"sweep": section})


def test_overrides_win_and_keep_siblings(write_config):
    path = write_config({"crf": {"steps": 4, "schedule": "gauss-seidel"}, "seed": 9})
    cfg = load_run_config(path, {"crf": {"steps": 12}, "output": {"dir": "out"}})
    assert cfg.crf.steps == 12
    assert cfg.crf.schedule == Schedule.GAUSS_SEIDEL
    assert cfg.seed == 9
    assert cfg.output.dir == "out"


def test_config_must_be_an_object(write_config):
    with pytest.raises(ValueError):
        load_run_config(write_config("[1, 2]"))


def test_output_dir_from_environment(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert get_output_dir() is None
    monkeypatch.setenv(OUTPUT_DIR_ENV, "/tmp/crf-out")
    assert get_output_dir() == "/tmp/crf-out"
