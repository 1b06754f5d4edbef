import json

import numpy as np
import pytest
from pydantic import ValidationError

from crfconv.core.cloud import read_cloud, write_cloud
from crfconv.core.errors import CloudParseError
from crfconv.models.cloud import PointCloud
from crfconv.models.crf import DenseLayer, PointwiseTransform
from crfconv.models.enums.cloud import CloudFormat
from crfconv.models.enums.crf import Activation
from crfconv.utils.storage import read_kernel_mixture, read_matrix, read_transform, write_table, write_transform

PLY_RGB = """ply
format ascii 1.0
comment two colored points
element vertex 2
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
element face 1
property list uchar int vertex_indices
end_header
0 0 0 255 0 0
1 2 3 0 128 255
3 0 1 1
"""


class TestReadCloud:
    def test_csv_positions_only(self, tmp_path):
        path = tmp_path / "cloud.csv"
        path.write_text("0,0,0\n1,0,0\n0,1,0\n")
        cloud = read_cloud(path, CloudFormat.CSV_XYZ)
        assert cloud.num_points == 3 and cloud.feature_dim == 0

    def test_ply_with_colors(self, tmp_path):
        path = tmp_path / "cloud.ply"
        path.write_text(PLY_RGB)
        cloud = read_cloud(path, "ply-ascii")
        assert cloud.num_points == 2 and cloud.feature_dim == 3
        np.testing.assert_array_equal(cloud.positions[1], [1, 2, 3])
        np.testing.assert_array_equal(cloud.features[1], [0, 128, 255])

    def test_csv_too_few_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n")
        with pytest.raises(CloudParseError) as err:
            read_cloud(path, CloudFormat.CSV_XYZ)
        assert err.value.line == 1

    def test_csv_inconsistent_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,0,0,1\n1,1,1\n")
        with pytest.raises(CloudParseError) as err:
            read_cloud(path, CloudFormat.CSV_XYZ)
        assert err.value.line == 2

    def test_csv_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,0,0\n0,x,0\n")
        with pytest.raises(CloudParseError, match="line 2"):
            read_cloud(path, CloudFormat.CSV_XYZ)

    def test_binary_ply_rejected(self, tmp_path):
        path = tmp_path / "bin.ply"
        path.write_text("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n")
        with pytest.raises(CloudParseError) as err:
            read_cloud(path, CloudFormat.PLY_ASCII)
        assert err.value.line == 2

    def test_ply_missing_vertices(self, tmp_path):
        path = tmp_path / "short.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n")
        with pytest.raises(CloudParseError, match="line 9"):
            read_cloud(path, CloudFormat.PLY_ASCII)

    def test_ply_non_numeric_value(self, tmp_path):
        path = tmp_path / "bad.ply"
        path.write_text(PLY_RGB.replace("1 2 3 0 128 255", "1 two 3 0 128 255"))
        with pytest.raises(CloudParseError) as err:
            read_cloud(path, CloudFormat.PLY_ASCII)
        assert err.value.line == 15

    def test_ply_without_magic(self, tmp_path):
        path = tmp_path / "bad.ply"
        path.write_text("format ascii 1.0\nend_header\n")
        with pytest.raises(CloudParseError) as err:
            read_cloud(path, CloudFormat.PLY_ASCII)
        assert err.value.line == 1

    def test_ply_vertex_needs_xyz(self, tmp_path):
        path = tmp_path / "flat.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n0 0\n")
        with pytest.raises(CloudParseError, match="'z'") as err:
            read_cloud(path, CloudFormat.PLY_ASCII)
        assert err.value.line == 3

    def test_ply_feature_columns_keep_file_order(self, tmp_path):
        path = tmp_path / "order.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float nx\nproperty float x\n"
            "property float y\nproperty float intensity\nproperty float z\nend_header\n7 1 2 9 3\n"
        )
        cloud = read_cloud(path, CloudFormat.PLY_ASCII)
        np.testing.assert_array_equal(cloud.positions, [[1, 2, 3]])
        np.testing.assert_array_equal(cloud.features, [[7, 9]])


class TestWriteCloud:
    @pytest.mark.parametrize("fmt", list(CloudFormat))
    def test_round_trip(self, tmp_path, rng, fmt):
        cloud = PointCloud(rng.standard_normal((7, 3)) * 1e3, rng.standard_normal((7, 6)))
        path = tmp_path / "out"
        write_cloud(cloud, path, fmt)
        back = read_cloud(path, fmt)
        np.testing.assert_allclose(back.positions, cloud.positions, rtol=1e-9)
        np.testing.assert_allclose(back.features, cloud.features, rtol=1e-9)

    @pytest.mark.parametrize("fmt", list(CloudFormat))
    def test_empty_cloud(self, tmp_path, fmt):
        path = tmp_path / "empty"
        write_cloud(PointCloud.from_positions(np.zeros((0, 3))), path, fmt)
        assert read_cloud(path, fmt).num_points == 0

    def test_csv_columns(self, tmp_path, rng):
        path = tmp_path / "wide.csv"
        write_cloud(PointCloud(rng.standard_normal((2, 3)), rng.standard_normal((2, 6))), path, CloudFormat.CSV_XYZ)
        assert all(len(line.split(",")) == 9 for line in path.read_text().splitlines())


class TestWeightFiles:
    def test_transform_round_trip(self, tmp_path):
        transform = PointwiseTransform(
            (
                DenseLayer(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]), np.array([0.1, 0.2, 0.3]), Activation.RELU),
                DenseLayer(np.array([[1.0, -1.0, 0.5]]), np.array([0.0])),
            )
        )
        path = tmp_path / "unary.json"
        write_transform(transform, path)
        doc = json.loads(path.read_text())
        assert doc["layers"][0]["shape"] == [3, 2]
        assert doc["layers"][0]["activation"] == "relu"
        back = read_transform(path)
        assert len(back.layers) == 2
        np.testing.assert_array_equal(back.layers[0].weight, transform.layers[0].weight)
        assert back.layers[0].activation == Activation.RELU

    def test_transform_weight_count_checked(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"layers": [{"shape": [2, 2], "weight": [1, 2, 3], "bias": [0, 0]}]}))
        with pytest.raises(ValidationError):
            read_transform(path)

    def test_kernel_mixture(self, tmp_path):
        path = tmp_path / "kernel.json"
        doc = {
            "layers": [
                {"shape": [1, 2], "weight": [1, 0], "bias": [0]},
                {"shape": [2, 2], "weight": [0.5, 0, 0, 0.5], "bias": [0, 0]},
            ],
            "mixtureWeights": [0.7, 0.3],
        }
        path.write_text(json.dumps(doc))
        mix = read_kernel_mixture(path)
        assert mix.in_dim == 2
        np.testing.assert_array_equal(mix.weights, [0.7, 0.3])

    def test_kernel_mixture_rejects_bias(self, tmp_path):
        path = tmp_path / "kernel.json"
        doc = {"layers": [{"shape": [1, 1], "weight": [1], "bias": [1]}], "mixtureWeights": [1]}
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError):
            read_kernel_mixture(path)


class TestTables:
    def test_matrix_round_trip(self, tmp_path):
        path = tmp_path / "m.csv"
        write_table(path, None, [[1.0, 0.1], [2.5, -3.0]])
        np.testing.assert_array_equal(read_matrix(path), [[1.0, 0.1], [2.5, -3.0]])

    def test_header_ints_and_strings(self, tmp_path):
        path = tmp_path / "t.csv"
        write_table(path, ["name", "step", "value"], [("a", 0, 0.5)])
        assert path.read_text() == "name,step,value\na,0,0.5\n"
