"""Forward kinematics of a 7-DOF Kinova Gen3 arm built from DH parameters.

Produces world-frame control points (9 per arm: base origin, seven joint
frame origins, tool tip) that the proximity module consumes as a polyline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NUM_JOINTS = 7
NUM_FRAMES = 9  # base + 7 joints + tool tip

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DhRow:
    """One row of the DH table: twist (rad), link length (m), offset (m), constant joint offset (rad)."""

    alpha: float
    a: float
    d: float
    theta_offset: float

    def __post_init__(self) -> None:
        for name in ("alpha", "a", "d", "theta_offset"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"DhRow.{name} must be finite")
        if not (-_TWO_PI < self.alpha <= _TWO_PI):
            raise ValueError("DhRow.alpha out of (-2*pi, 2*pi]")
        if not (-_TWO_PI < self.theta_offset <= _TWO_PI):
            raise ValueError("DhRow.theta_offset out of (-2*pi, 2*pi]")


# Kinova Gen3 7-DOF chain. Row 0 is the fixed base pre-transform (a flip
# about x so the negative d offsets build the arm upward); rows 1-7 carry
# the joint variables, rows 2-7 with a constant +pi offset.
DH_TABLE: tuple[DhRow, ...] = (
    DhRow(alpha=math.pi, a=0.0, d=0.0, theta_offset=0.0),
    DhRow(alpha=math.pi / 2, a=0.0, d=-0.2848, theta_offset=0.0),
    DhRow(alpha=math.pi / 2, a=0.0, d=-0.0118, theta_offset=math.pi),
    DhRow(alpha=math.pi / 2, a=0.0, d=-0.4208, theta_offset=math.pi),
    DhRow(alpha=math.pi / 2, a=0.0, d=-0.0128, theta_offset=math.pi),
    DhRow(alpha=math.pi / 2, a=0.0, d=-0.3143, theta_offset=math.pi),
    DhRow(alpha=math.pi / 2, a=0.0, d=0.0, theta_offset=math.pi),
    DhRow(alpha=math.pi, a=0.0, d=-0.1674, theta_offset=math.pi),
)

# Constant tool transform appended after joint 7.
_EE_ROTATION = np.diag([1.0, -1.0, -1.0])
_EE_TRANSLATION = np.array([0.0, 0.0, -0.0615])

#: Upper bound on the tool-tip radius at any configuration: sum of |d|
#: offsets plus the tool offset.
REACH_BOUND = sum(abs(row.d) for row in DH_TABLE) + abs(_EE_TRANSLATION[2])


def dh_table() -> tuple[DhRow, ...]:
    """The canonical 8-row DH table (base pre-transform through end-effector row)."""
    return DH_TABLE


def load_dh_table(path: str | Path) -> tuple[DhRow, ...]:
    """Load a DH table from a plain-text file.

    One row per line: ``alpha a d theta_offset`` (radians/meters), separated
    by commas or whitespace. Blank lines and ``#`` comments are ignored.
    Exactly 8 rows are required.
    """
    rows: list[DhRow] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 4:
            raise ValueError(f"{path}: line {lineno}: expected 4 values, got {len(parts)}")
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from None
        rows.append(DhRow(*values))
    if len(rows) != len(DH_TABLE):
        raise ValueError(f"{path}: expected {len(DH_TABLE)} DH rows, got {len(rows)}")
    return tuple(rows)


@dataclass(frozen=True)
class HomTransform:
    """Rigid transform: 3x3 rotation ``r`` and translation ``p`` (bottom row implicit)."""

    r: np.ndarray
    p: np.ndarray

    @staticmethod
    def identity() -> "HomTransform":
        return HomTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def translation(p) -> "HomTransform":
        return HomTransform(np.eye(3), np.asarray(p, dtype=float).reshape(3).copy())

    @staticmethod
    def from_matrix(m) -> "HomTransform":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        return HomTransform(m[:3, :3].copy(), m[:3, 3].copy())

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.r
        m[:3, 3] = self.p
        return m

    def __matmul__(self, other: "HomTransform") -> "HomTransform":
        return HomTransform(self.r @ other.r, self.r @ other.p + self.p)

    def inverse(self) -> "HomTransform":
        rt = self.r.T
        return HomTransform(rt.copy(), -(rt @ self.p))

    def rotation_defect(self) -> float:
        """Max of |r^T r - I| entries and |det(r) - 1|; zero for an exact rotation."""
        ortho = np.abs(self.r.T @ self.r - np.eye(3)).max()
        return max(float(ortho), abs(float(np.linalg.det(self.r)) - 1.0))

    def require_rigid(self, tol: float = 1e-9) -> "HomTransform":
        if self.rotation_defect() > tol:
            raise ValueError("rotation part is not orthonormal with det +1")
        return self


@dataclass(frozen=True)
class ArmPolyline:
    """Ordered world-frame control points of one arm: base, joints 1-7, tool tip.

    Consecutive points may coincide (the chain has a zero-length link), so
    zero-length segments are legal.
    """

    points: np.ndarray = field()

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.shape != (NUM_FRAMES, 3):
            raise ValueError(f"expected {NUM_FRAMES} points of 3 coords, got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("polyline points must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def num_segments(self) -> int:
        return NUM_FRAMES - 1

    def segment(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.points[i], self.points[i + 1]


def as_joint_vector(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape != (NUM_JOINTS,):
        raise ValueError(f"expected {NUM_JOINTS} joint angles, got {q.shape[0]}")
    if not np.isfinite(q).all():
        raise ValueError("joint angles must be finite")
    return q


def _dh_matrix(row: DhRow, theta: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    return np.array([
        [ct, -ca * st, sa * st, row.a * ct],
        [st, ca * ct, -sa * ct, row.a * st],
        [0.0, sa, ca, row.d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def link_transform(row: DhRow, q: float) -> HomTransform:
    """Transform between adjacent link frames, evaluated at theta = q + theta_offset."""
    if not math.isfinite(q):
        raise ValueError("joint angle must be finite")
    return HomTransform.from_matrix(_dh_matrix(row, q + row.theta_offset))


def ee_transform() -> HomTransform:
    """Constant transform from the joint-7 frame to the tool tip."""
    return HomTransform(_EE_ROTATION.copy(), _EE_TRANSLATION.copy())


def _frame_matrices(q: np.ndarray, table: tuple[DhRow, ...]) -> list[np.ndarray]:
    frames = [_dh_matrix(table[0], table[0].theta_offset)]
    cur = frames[0]
    for j in range(1, 8):
        row = table[j]
        cur = cur @ _dh_matrix(row, q[j - 1] + row.theta_offset)
        frames.append(cur)
    ee = np.eye(4)
    ee[:3, :3] = _EE_ROTATION
    ee[:3, 3] = _EE_TRANSLATION
    frames.append(cur @ ee)
    return frames


def forward_frames(q, table: tuple[DhRow, ...] = DH_TABLE) -> list[HomTransform]:
    """All 9 base-frame transforms: base row, cumulative joint frames 1-7, tool tip.

    Frame k is the product of the base pre-transform and the first k joint
    transforms; the last frame additionally applies ``ee_transform``.
    """
    q = as_joint_vector(q)
    return [HomTransform.from_matrix(m) for m in _frame_matrices(q, table)]


def control_points(q, base_pose: HomTransform, table: tuple[DhRow, ...] = DH_TABLE) -> ArmPolyline:
    """World-frame polyline of one arm: frame origins mapped through ``base_pose``."""
    q = as_joint_vector(q)
    frames = _frame_matrices(q, table)
    local = np.stack([m[:3, 3] for m in frames])
    return ArmPolyline(local @ base_pose.r.T + base_pose.p)


def relative_base_transform(
    h_m1_ndi: HomTransform,
    h_m2_ndi: HomTransform,
    h_m1_b1: HomTransform,
    h_m2_b2: HomTransform,
) -> HomTransform:
    """Pose of base 2 in the frame of base 1, from tracker-frame marker poses.

    Each base pose in the tracker frame is the marker pose composed with the
    inverse of the marker's mounting transform on that base; the result is
    the first base pose inverted against the second. The translation column
    is the relative base position used as a dataset feature.
    """
    h_b1_ndi = h_m1_ndi @ h_m1_b1.inverse()
    h_b2_ndi = h_m2_ndi @ h_m2_b2.inverse()
    return h_b1_ndi.inverse() @ h_b2_ndi
