"""Synthetic labeled datasets of dual-arm configurations.

Generation draws joint angles and a relative base position uniformly at
random, labels each configuration with the minimum inter-arm distance, and
persists everything as CSV. Preprocessing and splitting prepare the raw
records for training.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .kinematics import NUM_JOINTS, HomTransform, control_points
from .proximity import arm_min_distance, vertex_box_oracle

TWO_PI = 2.0 * math.pi

RAW_FEATURE_DIM = 17  # 3 relative-position coords + 7 + 7 joint angles

#: Dropped raw-feature indices (1-based): the three wrist joints of each arm.
DEFAULT_MASK = frozenset({8, 9, 10, 15, 16, 17})

CSV_HEADER = (
    "px,py,pz,"
    + ",".join(f"q{j}_1" for j in range(1, 8))
    + ","
    + ",".join(f"q{j}_2" for j in range(1, 8))
    + ",dmin"
)

LABELERS = ("analytical", "box_vertex")


class DatasetFormatError(ValueError):
    """Raised when a dataset file does not match the expected CSV schema."""


@dataclass(frozen=True)
class SampleRecord:
    """One labeled configuration: relative base position, both joint vectors, distance."""

    rel_pos: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    d_min: float


@dataclass(frozen=True)
class GenSpec:
    """Dataset generation parameters.

    ``joint_range`` holds per-joint [lo, hi] bounds (radians) applied to both
    arms; ``pos_range`` per-axis [lo, hi] bounds (meters) for the relative
    base position, rejection-sampled to keep at least ``min_base_separation``
    between the bases. ``box_half_extent`` is only used by the box_vertex
    labeler.
    """

    n: int
    seed: int
    joint_range: np.ndarray = field(default_factory=lambda: np.tile([0.0, TWO_PI], (NUM_JOINTS, 1)))
    pos_range: np.ndarray = field(default_factory=lambda: np.tile([-1.5, 1.5], (3, 1)))
    min_base_separation: float = 0.3
    labeler: str = "analytical"
    box_half_extent: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "joint_range", np.asarray(self.joint_range, dtype=float).reshape(NUM_JOINTS, 2))
        object.__setattr__(self, "pos_range", np.asarray(self.pos_range, dtype=float).reshape(3, 2))

    def validate(self) -> "GenSpec":
        if self.n < 1:
            raise ValueError(f"record count must be at least 1, got {self.n}")
        if not np.isfinite(self.joint_range).all() or not np.isfinite(self.pos_range).all():
            raise ValueError("sampling ranges must be finite")
        if (self.joint_range[:, 0] > self.joint_range[:, 1]).any():
            raise ValueError("joint ranges must satisfy lo <= hi")
        if (self.pos_range[:, 0] > self.pos_range[:, 1]).any():
            raise ValueError("position ranges must satisfy lo <= hi")
        if self.min_base_separation < 0.0:
            raise ValueError("min_base_separation must be non-negative")
        farthest = float(np.linalg.norm(np.abs(self.pos_range).max(axis=1)))
        if self.min_base_separation > farthest:
            raise ValueError(
                f"min_base_separation {self.min_base_separation} exceeds the farthest "
                f"reachable corner of pos_range ({farthest:.6g}); no sample can satisfy it"
            )
        if self.labeler not in LABELERS:
            raise ValueError(f"labeler must be one of {LABELERS}, got {self.labeler!r}")
        if self.box_half_extent <= 0.0:
            raise ValueError("box_half_extent must be positive")
        return self


@dataclass(frozen=True)
class FeatureSpec:
    """Feature selection and scaling applied to the raw 17-entry vector.

    ``mask`` lists dropped raw indices (1-based: 1-3 relative position,
    4-10 arm-1 joints, 11-17 arm-2 joints). Kept entries are divided by
    ``scale``; when ``pos_scale`` is set, the position entries use it
    instead.
    """

    mask: frozenset[int] = DEFAULT_MASK
    scale: float = TWO_PI
    pos_scale: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mask", frozenset(int(i) for i in self.mask))

    def validate(self) -> "FeatureSpec":
        if not self.mask <= set(range(1, RAW_FEATURE_DIM + 1)):
            raise ValueError(f"mask indices must lie in 1..{RAW_FEATURE_DIM}")
        if len(self.mask) >= RAW_FEATURE_DIM:
            raise ValueError("mask drops every feature; at least one must be kept")
        if self.scale <= 0.0 or (self.pos_scale is not None and self.pos_scale <= 0.0):
            raise ValueError("feature scales must be positive")
        return self

    @property
    def kept_indices(self) -> np.ndarray:
        """Zero-based raw indices that survive the mask, ascending."""
        return np.array([i for i in range(RAW_FEATURE_DIM) if (i + 1) not in self.mask])

    @property
    def input_dim(self) -> int:
        return RAW_FEATURE_DIM - len(self.mask)


@dataclass(frozen=True)
class Dataset:
    """Column-oriented record storage; raw (unnormalized) values."""

    rel_pos: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    d_min: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.d_min)
        if self.rel_pos.shape != (n, 3) or self.q1.shape != (n, NUM_JOINTS) or self.q2.shape != (n, NUM_JOINTS):
            raise ValueError("dataset column shapes are inconsistent")

    def __len__(self) -> int:
        return len(self.d_min)

    def record(self, i: int) -> SampleRecord:
        return SampleRecord(self.rel_pos[i], self.q1[i], self.q2[i], float(self.d_min[i]))

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.rel_pos[idx], self.q1[idx], self.q2[idx], self.d_min[idx])

    def raw_features(self) -> np.ndarray:
        """The (n, 17) matrix of raw inputs in canonical column order."""
        return np.hstack([self.rel_pos, self.q1, self.q2])


def sample_configuration(rng: np.random.Generator, spec: GenSpec):
    """Draw (rel_pos, q1, q2) uniformly per spec; resamples rel_pos under the separation floor."""
    while True:
        rel_pos = rng.uniform(spec.pos_range[:, 0], spec.pos_range[:, 1])
        if np.linalg.norm(rel_pos) >= spec.min_base_separation:
            break
    q1 = rng.uniform(spec.joint_range[:, 0], spec.joint_range[:, 1])
    q2 = rng.uniform(spec.joint_range[:, 0], spec.joint_range[:, 1])
    return rel_pos, q1, q2


def label_configuration(rel_pos, q1, q2, labeler: str = "analytical", box_half_extent: float = 0.05) -> float:
    poly1 = control_points(q1, HomTransform.identity())
    poly2 = control_points(q2, HomTransform.translation(rel_pos))
    if labeler == "analytical":
        return arm_min_distance(poly1, poly2).d_min
    if labeler == "box_vertex":
        return vertex_box_oracle(poly1, poly2, box_half_extent)
    raise ValueError(f"unknown labeler {labeler!r}")


def generate_dataset(spec: GenSpec) -> Dataset:
    """Generate ``spec.n`` labeled records in draw order.

    Record k is drawn from the k-th child stream of the seed, so the output
    is identical whether records are produced sequentially or in parallel.
    """
    spec.validate()
    children = np.random.SeedSequence(spec.seed).spawn(spec.n)
    rel_pos = np.empty((spec.n, 3))
    q1 = np.empty((spec.n, NUM_JOINTS))
    q2 = np.empty((spec.n, NUM_JOINTS))
    d_min = np.empty(spec.n)
    for k in range(spec.n):
        rng = np.random.default_rng(children[k])
        rel_pos[k], q1[k], q2[k] = sample_configuration(rng, spec)
        d_min[k] = label_configuration(
            rel_pos[k], q1[k], q2[k], spec.labeler, spec.box_half_extent
        )
    return Dataset(rel_pos, q1, q2, d_min)


def apply_feature_spec(raw: np.ndarray, fspec: FeatureSpec) -> np.ndarray:
    """Mask and scale a (n, 17) raw matrix into the model input matrix."""
    fspec.validate()
    kept = fspec.kept_indices
    x = raw[:, kept] / fspec.scale
    if fspec.pos_scale is not None:
        pos_cols = np.flatnonzero(kept < 3)
        x[:, pos_cols] = raw[:, kept[pos_cols]] / fspec.pos_scale
    return x


def preprocess(dataset: Dataset, fspec: FeatureSpec) -> tuple[np.ndarray, np.ndarray]:
    """(feature matrix, target vector): kept raw entries scaled, targets in meters."""
    return apply_feature_spec(dataset.raw_features(), fspec), dataset.d_min.copy()


def split(dataset: Dataset, fractions, seed: int) -> list[Dataset]:
    """Deterministic shuffled partition; floor-allocated sizes, remainder to the first part."""
    fractions = [float(f) for f in fractions]
    if any(f <= 0.0 for f in fractions):
        raise ValueError("split fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {sum(fractions)}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    sizes = [int(f * n) for f in fractions]
    sizes[0] += n - sum(sizes)
    parts = []
    at = 0
    for size in sizes:
        parts.append(dataset.take(order[at:at + size]))
        at += size
    return parts


def _format_value(x: float) -> str:
    return np.format_float_positional(x, unique=True, min_digits=9, trim="k")


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write CSV with full round-trip precision in plain decimal notation."""
    raw = dataset.raw_features()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for k in range(len(dataset)):
            cells = [_format_value(v) for v in raw[k]]
            cells.append(_format_value(dataset.d_min[k]))
            fh.write(",".join(cells) + "\n")


def read_dataset(path: str | Path) -> Dataset:
    """Read a dataset CSV; malformed content raises DatasetFormatError naming the row."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file, expected a header row")
    header = lines[0].strip()
    if header != CSV_HEADER:
        if header == CSV_HEADER[: CSV_HEADER.rfind(",dmin")]:
            raise DatasetFormatError(f"{path}: missing label column 'dmin'")
        raise DatasetFormatError(f"{path}: unexpected header {header!r}")
    rows = np.empty((len(lines) - 1, RAW_FEATURE_DIM + 1))
    for k, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        if len(cells) == RAW_FEATURE_DIM:
            raise DatasetFormatError(f"{path}: row {k}: missing label column")
        if len(cells) != RAW_FEATURE_DIM + 1:
            raise DatasetFormatError(
                f"{path}: row {k}: expected {RAW_FEATURE_DIM + 1} columns, got {len(cells)}"
            )
        try:
            rows[k - 1] = [float(c) for c in cells]
        except ValueError:
            raise DatasetFormatError(f"{path}: row {k}: non-numeric value") from None
        if not np.isfinite(rows[k - 1]).all():
            raise DatasetFormatError(f"{path}: row {k}: non-finite value")
    return Dataset(
        rel_pos=rows[:, 0:3].copy(),
        q1=rows[:, 3:10].copy(),
        q2=rows[:, 10:17].copy(),
        d_min=rows[:, 17].copy(),
    )


def _parse_scalar(value: str):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def read_config(path: str | Path) -> dict[str, object]:
    """Parse a plain-text ``key = value`` config file (# comments allowed)."""
    out: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def gen_spec_from_config(options: dict[str, object], **overrides) -> GenSpec:
    """Build a GenSpec from config-file options plus keyword overrides.

    Recognized keys: n, seed, joint_range (``lo,hi`` for all joints),
    joint_range_<k> (per joint, 1-based), pos_range, pos_range_<x|y|z>,
    min_base_separation, labeler, box_half_extent.
    """
    def as_pair(text) -> tuple[float, float]:
        parts = str(text).replace(":", ",").split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 'lo,hi', got {text!r}")
        return float(parts[0]), float(parts[1])

    joint_range = np.tile([0.0, TWO_PI], (NUM_JOINTS, 1))
    pos_range = np.tile([-1.5, 1.5], (3, 1))
    kwargs: dict[str, object] = {}
    for key, value in options.items():
        if key == "joint_range":
            joint_range[:] = as_pair(value)
        elif key.startswith("joint_range_"):
            j = int(key.rsplit("_", 1)[1])
            if not 1 <= j <= NUM_JOINTS:
                raise ValueError(f"joint index out of range in {key!r}")
            joint_range[j - 1] = as_pair(value)
        elif key == "pos_range":
            pos_range[:] = as_pair(value)
        elif key.startswith("pos_range_"):
            axis = "xyz".find(key.rsplit("_", 1)[1])
            if axis < 0:
                raise ValueError(f"unknown axis in {key!r}")
            pos_range[axis] = as_pair(value)
        elif key in ("n", "seed"):
            kwargs[key] = int(str(value))
        elif key in ("min_base_separation", "box_half_extent"):
            kwargs[key] = float(str(value))
        elif key == "labeler":
            kwargs[key] = str(value)
        else:
            raise ValueError(f"unknown generation option {key!r}")
    kwargs.setdefault("n", 1)
    kwargs.setdefault("seed", 0)
    spec = GenSpec(joint_range=joint_range, pos_range=pos_range, **kwargs)  # type: ignore[arg-type]
    if overrides:
        spec = replace(spec, **overrides)
    return spec.validate()


def feature_spec_from_config(options: dict[str, object], **overrides) -> FeatureSpec:
    """Build a FeatureSpec from config-file options (keys: mask, scale, pos_scale)."""
    kwargs: dict[str, object] = {}
    for key, value in options.items():
        if key == "mask":
            text = str(value).strip()
            kwargs["mask"] = frozenset(int(v) for v in text.split(",") if v.strip()) if text else frozenset()
        elif key in ("scale", "pos_scale"):
            kwargs[key] = float(str(value))
        else:
            raise ValueError(f"unknown feature option {key!r}")
    kwargs.update(overrides)
    return FeatureSpec(**kwargs).validate()  # type: ignore[arg-type]
