from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Protocol

import numpy as np
from plyfile import PlyData, PlyElement, PlyElementParseError, PlyHeaderParseError, PlyListProperty

from crfconv.core.errors import CloudParseError
from crfconv.models.cloud import FloatArray, PointCloud
from crfconv.models.crf import DenseLayer, PointwiseTransform
from crfconv.models.enums.cloud import CloudFormat
from crfconv.models.labels import KernelMixture
from crfconv.schemas.weights import KernelMixtureFile, LayerRecord, TransformFile

# repr-exact round trip and byte-stable output
FLOAT_FORMAT = "%.17g"


def _fmt(values) -> List[str]:
    return [FLOAT_FORMAT % v for v in values]


def _parse_floats(fields: List[str], line: int) -> List[float]:
    try:
        return [float(f) for f in fields]
    except ValueError:
        raise CloudParseError(line, f"non-numeric field in {fields!r}") from None


class CloudStorage(Protocol):
    def load(self, path: str | Path) -> PointCloud: ...
    def save(self, cloud: PointCloud, path: str | Path) -> None: ...


# ---------------- CSV ----------------
class CsvCloudStorage:
    """x,y,z[,f1..fd] per line, comma separated, no header."""

    def load(self, path: str | Path) -> PointCloud:
        rows: List[List[float]] = []
        width: int | None = None
        with open(path, "r", encoding="utf-8") as f:
            for line_no, raw in enumerate(f, start=1):
                text = raw.strip()
                if not text:
                    continue
                fields = [t.strip() for t in text.split(",")]
                if len(fields) < 3:
                    raise CloudParseError(line_no, f"expected at least 3 columns, got {len(fields)}")
                if width is not None and len(fields) != width:
                    raise CloudParseError(line_no, f"expected {width} columns, got {len(fields)}")
                width = len(fields)
                rows.append(_parse_floats(fields, line_no))
        data = np.asarray(rows, dtype=np.float64).reshape(len(rows), width or 3)
        return _cloud_from_columns(data[:, :3], data[:, 3:], line_hint=1)

    def save(self, cloud: PointCloud, path: str | Path) -> None:
        data = np.hstack([cloud.positions, cloud.features])
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for row in data:
                f.write(",".join(_fmt(row)) + "\n")


# ---------------- PLY ----------------
def _scan_header(path: str | Path) -> tuple[int, Dict[str, tuple[int, int]]]:
    """Header length in lines and, per element, (declaring line, first data line)."""
    declared: List[tuple[str, int, int]] = []
    with open(path, "rb") as f:
        for line_no, raw in enumerate(f, start=1):
            tokens = raw.split()
            if tokens[:1] == [b"element"] and len(tokens) == 3 and tokens[2].isdigit():
                declared.append((tokens[1].decode("ascii", "replace"), int(tokens[2]), line_no))
            elif tokens[:1] == [b"end_header"]:
                break
        else:
            return 0, {}
    first_data = line_no + 1
    elements: Dict[str, tuple[int, int]] = {}
    for name, count, declared_at in declared:
        elements[name] = (declared_at, first_data)
        first_data += count
    return line_no, elements


class PlyAsciiCloudStorage:
    """PLY ascii 1.0; the vertex element's scalar properties in file order, x, y, z as positions."""

    def load(self, path: str | Path) -> PointCloud:
        header_lines, elements = _scan_header(path)
        try:
            ply = PlyData.read(str(path), mmap=False)
        except PlyHeaderParseError as error:
            raise CloudParseError(error.line or 1, f"malformed header: {error.message}") from None
        except PlyElementParseError as error:
            name = error.element.name if error.element is not None else "vertex"
            _, first_data = elements.get(name, (0, header_lines + 1))
            raise CloudParseError(first_data + (error.row or 0), f"{name}: {error.message}") from None
        if not ply.text:
            raise CloudParseError(2, "binary PLY is not supported; only ascii 1.0")
        if "vertex" not in ply:
            raise CloudParseError(header_lines, "no vertex element declared")

        vertex = ply["vertex"]
        declared_at, first_data = elements.get("vertex", (header_lines, header_lines + 1))
        names = [prop.name for prop in vertex.properties]
        if any(isinstance(prop, PlyListProperty) for prop in vertex.properties):
            raise CloudParseError(declared_at, "list properties are not supported on vertices")
        for axis in ("x", "y", "z"):
            if axis not in names:
                raise CloudParseError(declared_at, f"vertex element lacks property {axis!r}")
        columns = np.column_stack([vertex.data[n].astype(np.float64) for n in names])
        xyz = [names.index(a) for a in ("x", "y", "z")]
        rest = [i for i in range(len(names)) if i not in xyz]
        return _cloud_from_columns(columns[:, xyz], columns[:, rest], line_hint=first_data)

    def save(self, cloud: PointCloud, path: str | Path) -> None:
        names = ["x", "y", "z"] + [f"f{i}" for i in range(cloud.feature_dim)]
        record = np.empty(cloud.num_points, dtype=[(n, "f8") for n in names])
        for i, name in enumerate(names):
            record[name] = cloud.positions[:, i] if i < 3 else cloud.features[:, i - 3]
        PlyData([PlyElement.describe(record, "vertex")], text=True).write(str(path))


def _cloud_from_columns(positions: FloatArray, features: FloatArray, line_hint: int) -> PointCloud:
    finite = np.all(np.isfinite(positions), axis=1) & np.all(np.isfinite(features), axis=1)
    if not np.all(finite):
        raise CloudParseError(line_hint + int(np.argmin(finite)), "NaN or Inf value")
    return PointCloud(positions, features)


# --------------- Factory ----------------
def build_storage(fmt: CloudFormat | str) -> CloudStorage:
    fmt = CloudFormat(fmt)
    if fmt == CloudFormat.PLY_ASCII:
        return PlyAsciiCloudStorage()
    return CsvCloudStorage()


# ---------------- matrices / tables ----------------
def read_matrix(path: str | Path) -> FloatArray:
    rows: List[List[float]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            text = raw.strip()
            if not text:
                continue
            fields = [t.strip() for t in text.split(",")]
            if rows and len(fields) != len(rows[0]):
                raise CloudParseError(line_no, f"expected {len(rows[0])} columns, got {len(fields)}")
            rows.append(_parse_floats(fields, line_no))
    if not rows:
        return np.zeros((0, 0))
    return np.asarray(rows, dtype=np.float64)


def write_table(path: str | Path, header: List[str] | None, rows) -> None:
    """Write rows as CSV; floats use the exact repr format, ints and strings are written as is."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if header:
            f.write(",".join(header) + "\n")
        for row in rows:
            cells = [str(v) if isinstance(v, (str, int, np.integer)) else FLOAT_FORMAT % v for v in row]
            f.write(",".join(cells) + "\n")


# ---------------- weight files ----------------
def _layer_from_record(record: LayerRecord) -> DenseLayer:
    weight = np.asarray(record.weight, dtype=np.float64).reshape(record.shape)
    return DenseLayer(weight, np.asarray(record.bias), record.activation, record.slope)


def _record_from_layer(layer: DenseLayer) -> LayerRecord:
    return LayerRecord(
        shape=(layer.out_dim, layer.in_dim),
        weight=layer.weight.ravel().tolist(),
        bias=layer.bias.tolist(),
        activation=layer.activation,
        slope=layer.slope,
    )


def read_transform(path: str | Path) -> PointwiseTransform:
    with open(path, "r", encoding="utf-8") as f:
        doc = TransformFile.model_validate(json.load(f))
    return PointwiseTransform(tuple(_layer_from_record(r) for r in doc.layers))


def write_transform(transform: PointwiseTransform, path: str | Path) -> None:
    doc = TransformFile(layers=[_record_from_layer(layer) for layer in transform.layers])
    with open(path, "w", encoding="utf-8") as f:
        f.write(doc.model_dump_json(by_alias=True, indent=2) + "\n")


def read_kernel_mixture(path: str | Path) -> KernelMixture:
    with open(path, "r", encoding="utf-8") as f:
        doc = KernelMixtureFile.model_validate(json.load(f))
    projections = tuple(np.asarray(r.weight, dtype=np.float64).reshape(r.shape) for r in doc.layers)
    return KernelMixture(projections, np.asarray(doc.mixture_weights))
