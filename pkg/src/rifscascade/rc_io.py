#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
File formats: realization CSV with its JSON sidecar, run manifests,
spectrum / tangent JSON, heatmap and benchmark CSV, and SVG plots
rendered from the Jinja2 templates in web/
"""

# Built-in modules
from csv import reader, writer
from dataclasses import dataclass
from datetime import datetime, timezone
from io import StringIO
from os.path import abspath, basename, dirname, exists, join
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

# pip modules
import numpy as np
from jinja2 import Environment, FileSystemLoader, select_autoescape

# local modules
from rifscascade.rc_core import Realization, WeightingMode
from rifscascade.rc_errors import InputFormatError
from rifscascade.rc_measure import ScaleMatrix, Source, scale_matrix
from rifscascade.rc_utils import VERSION, dump_json, file_digest, read_json, write_text

WEB_DIR = join(dirname(abspath(__file__)), "web")
REALIZATION_HEADER = ("depth", "leaf_index", "left", "right", "diameter", "mass")
HEATMAP_HEADER = ("depth", "bin", "mass")
BENCHMARK_HEADER = (
    "q",
    "kappa_closed",
    "kappa_exact",
    "kappa_mc",
    "kappa_mc_se",
    "kappa_hat_mean",
    "kappa_hat_se",
    "abs_error",
)

templates = Environment(
    loader=FileSystemLoader(WEB_DIR),
    autoescape=select_autoescape(["svg", "svg.j2"]),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)


class LeafRow(NamedTuple):
    depth: int
    leaf_index: int
    left: float
    right: float
    diameter: float
    mass: Optional[float]


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = StringIO()
    csv_writer = writer(buffer, lineterminator="\n")
    csv_writer.writerow(header)
    csv_writer.writerows(rows)
    return buffer.getvalue()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


# Realization CSV


def realization_rows(
    realization: Realization, mode: Optional[WeightingMode] = None, with_masses: bool = True
) -> List[LeafRow]:
    """One row per leaf per depth, in leaf order"""
    matrix = scale_matrix(realization, mode) if with_masses else None
    rows = []
    for depth in range(realization.depth + 1):
        for index, node in enumerate(realization.leaves(depth)):
            mass = None if matrix is None else float(matrix.row(depth, Source.MASS)[index])
            rows.append(LeafRow(depth, index, node.left, node.right, node.diameter, mass))
    return rows


def format_realization_csv(rows: Iterable[LeafRow]) -> str:
    return _csv_text(REALIZATION_HEADER, ([_cell(value) for value in row] for row in rows))


def parse_realization_csv(text: str) -> List[LeafRow]:
    """Inverse of format_realization_csv"""
    lines = reader(StringIO(text))
    header = next(lines, None)
    if header is None or tuple(header) != REALIZATION_HEADER:
        raise InputFormatError(f"expected header {','.join(REALIZATION_HEADER)}")
    rows = []
    for number, cells in enumerate(lines, start=2):
        if len(cells) != len(REALIZATION_HEADER):
            raise InputFormatError(f"line {number}: expected {len(REALIZATION_HEADER)} fields")
        try:
            rows.append(
                LeafRow(
                    depth=int(cells[0]),
                    leaf_index=int(cells[1]),
                    left=float(cells[2]),
                    right=float(cells[3]),
                    diameter=float(cells[4]),
                    mass=float(cells[5]) if cells[5] else None,
                )
            )
        except ValueError as exc:
            raise InputFormatError(f"line {number}: {exc}") from exc
    if not rows:
        raise InputFormatError("no leaf rows")
    return rows


def rows_to_scale_matrix(rows: Iterable[LeafRow]) -> ScaleMatrix:
    return ScaleMatrix.from_leaf_rows((row.depth, row.left, row.diameter, row.mass) for row in rows)


def sidecar_path(csv_path: str) -> str:
    return f"{csv_path}.meta.json"


def write_realization(
    path: str,
    realization: Realization,
    mode: Optional[WeightingMode] = None,
    with_masses: bool = True,
) -> List[str]:
    """Writes the CSV and its sidecar; returns both paths"""
    write_text(path, format_realization_csv(realization_rows(realization, mode, with_masses)))
    meta = {
        "config": realization.config.to_flat(),
        "master_seed": realization.config.master_seed,
        "extinct": realization.extinct,
        "depth": realization.depth,
        "version": VERSION,
    }
    write_text(sidecar_path(path), dump_json(meta))
    return [path, sidecar_path(path)]


def read_realization(path: str) -> Tuple[List[LeafRow], Optional[Dict[str, Any]]]:
    """Leaf rows plus the sidecar metadata when present"""
    try:
        with open(path, "r", encoding="utf-8", newline="") as file:
            text = file.read()
    except OSError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc
    rows = parse_realization_csv(text)
    meta = read_json(sidecar_path(path)) if exists(sidecar_path(path)) else None
    return rows, meta


# Tables


def format_heatmap_csv(heatmap: np.ndarray) -> str:
    return _csv_text(
        HEATMAP_HEADER,
        (
            (depth, index, _cell(float(value)))
            for depth, row in enumerate(heatmap)
            for index, value in enumerate(row)
        ),
    )


def format_benchmark_csv(rows: Iterable[Dict[str, float]]) -> str:
    return _csv_text(BENCHMARK_HEADER, ([_cell(row[key]) for key in BENCHMARK_HEADER] for row in rows))


def write_json(path: str, data: Any) -> str:
    write_text(path, dump_json(data))
    return path


# Manifests


@dataclass
class RunManifest:
    """What produced a set of outputs, enough to reproduce them byte for byte"""

    command: str
    config: Optional[Dict[str, Any]]
    master_seed: Optional[int]
    parameters: Dict[str, Any]
    started: str
    finished: str = ""
    outputs: Optional[Dict[str, str]] = None

    @classmethod
    def start(
        cls,
        command: str,
        config: Optional[Dict[str, Any]] = None,
        master_seed: Optional[int] = None,
        **parameters: Any,
    ) -> "RunManifest":
        return cls(
            command=command,
            config=config,
            master_seed=master_seed,
            parameters=parameters,
            started=datetime.now(timezone.utc).isoformat(),
        )

    def finish(self, paths: Iterable[str]) -> "RunManifest":
        self.finished = datetime.now(timezone.utc).isoformat()
        self.outputs = {basename(path): file_digest(path) for path in paths}
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config,
            "master_seed": self.master_seed,
            "parameters": self.parameters,
            "version": VERSION,
            "started": self.started,
            "finished": self.finished,
            "outputs": self.outputs or {},
        }

    def write(self, output_path: str) -> str:
        return write_json(f"{output_path}.manifest.json", self.to_dict())


# SVG


def _scale(values: np.ndarray, low: float, high: float, size: float, flip: bool = False) -> np.ndarray:
    span = high - low if high > low else 1.0
    scaled = (values - low) / span * size
    return size - scaled if flip else scaled


def render_spectrum_svg(alpha: Sequence[float], f: Sequence[float], title: str = "f(alpha)") -> str:
    """Polyline of the (alpha, f) curve"""
    alpha_values = np.asarray(alpha, dtype=np.float64)
    f_values = np.asarray(f, dtype=np.float64)
    finite = np.isfinite(alpha_values) & np.isfinite(f_values)
    alpha_values, f_values = alpha_values[finite], f_values[finite]
    width, height, margin = 480.0, 320.0, 40.0
    if alpha_values.size:
        a_low, a_high = float(alpha_values.min()), float(alpha_values.max())
        f_low, f_high = min(float(f_values.min()), 0.0), float(f_values.max())
        xs = margin + _scale(alpha_values, a_low, a_high, width - 2 * margin)
        ys = margin + _scale(f_values, f_low, f_high, height - 2 * margin, flip=True)
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    else:
        a_low = a_high = f_low = f_high = 0.0
        points = ""
    return templates.get_template("spectrum.svg.j2").render(
        width=width,
        height=height,
        margin=margin,
        points=points,
        title=title,
        alpha_range=(a_low, a_high),
        f_range=(f_low, f_high),
    )


def render_heatmap_svg(heatmap: np.ndarray, title: str = "mass by position and depth") -> str:
    """One rect per (depth, bin), darker for more mass, each row scaled to its own maximum"""
    depths, bins = heatmap.shape
    cell_width = max(480.0 / max(bins, 1), 1.0)
    cell_height = 12.0
    cells = []
    for depth in range(depths):
        peak = float(heatmap[depth].max()) or 1.0
        for index in range(bins):
            shade = int(round(255 * (1.0 - heatmap[depth, index] / peak)))
            cells.append(
                {
                    "x": index * cell_width,
                    "y": depth * cell_height,
                    "fill": f"rgb({shade},{shade},{shade})",
                    "mass": float(heatmap[depth, index]),
                }
            )
    return templates.get_template("heatmap.svg.j2").render(
        width=bins * cell_width,
        height=depths * cell_height,
        cell_width=cell_width,
        cell_height=cell_height,
        cells=cells,
        title=title,
    )
