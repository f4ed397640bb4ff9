"""8-DoF planar homographies: construction, projective action, inversion.

A homography is stored as the eight free entries of a 3x3 matrix whose
bottom-right entry is pinned to exactly 1::

    [[h11, h12, h13],
     [h21, h22, h23],
     [h31, h32, 1.0]]

The DoF vector is row-major: ``(h11, h12, h13, h21, h22, h23, h31, h32)``.
h13/h23 are the translation entries and h31/h32 the projective (skew) ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProjection, DimensionMismatch, SingularMatrix

DOF_COUNT = 8

# |w'| at or below this is treated as a projection onto the line at infinity.
PROJECTION_EPS = 1e-12

# |det| (or |inv[2,2]|) at or below this makes inversion/renormalization unsafe.
SINGULARITY_EPS = 1e-12


@dataclass(frozen=True)
class Point2:
    """A 2-D point in pixel coordinates."""

    x: float
    y: float


@dataclass(frozen=True)
class Homography:
    """Planar projective transform with the (3,3) entry fixed to 1.

    Parameters
    ----------
    dof : tuple of 8 floats
        Row-major free entries ``(h11, h12, h13, h21, h22, h23, h31, h32)``.
    """

    dof: tuple[float, ...]

    def __post_init__(self):
        if len(self.dof) != DOF_COUNT:
            raise DimensionMismatch(
                f"homography needs {DOF_COUNT} parameters, got {len(self.dof)}"
            )
        if not all(math.isfinite(v) for v in self.dof):
            raise ValueError("homography parameters must be finite")

    def matrix(self) -> np.ndarray:
        """Return the full 3x3 matrix with the (3,3) entry exactly 1."""
        d = self.dof
        return np.array(
            [[d[0], d[1], d[2]], [d[3], d[4], d[5]], [d[6], d[7], 1.0]],
            dtype=float,
        )


def identity() -> Homography:
    """The identity transform."""
    return Homography((1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0))


def translation(tx: float, ty: float) -> Homography:
    """A pure pixel translation by ``(tx, ty)``."""
    return Homography((1.0, 0.0, float(tx), 0.0, 1.0, float(ty), 0.0, 0.0))


def from_vector(v) -> Homography:
    """Build a :class:`Homography` from any length-8 sequence of finite reals."""
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape[0] != DOF_COUNT:
        raise DimensionMismatch(
            f"homography needs {DOF_COUNT} parameters, got {arr.shape[0]}"
        )
    return Homography(tuple(float(x) for x in arr))


def to_vector(h: Homography) -> np.ndarray:
    """Return the DoF vector as a fresh float64 array of shape (8,)."""
    return np.array(h.dof, dtype=float)


def from_matrix(m) -> Homography:
    """Build a :class:`Homography` from a 3x3 matrix, renormalizing by m[2,2].

    Raises
    ------
    DimensionMismatch
        If ``m`` is not 3x3.
    SingularMatrix
        If ``|m[2,2]|`` is too small to renormalize against.
    """
    arr = np.asarray(m, dtype=float)
    if arr.shape != (3, 3):
        raise DimensionMismatch(f"expected a 3x3 matrix, got shape {arr.shape}")
    scale = arr[2, 2]
    if abs(scale) <= SINGULARITY_EPS:
        raise SingularMatrix("matrix cannot be scaled to have (3,3) entry 1")
    scaled = arr / scale
    return Homography(tuple(float(x) for x in scaled.reshape(-1)[:DOF_COUNT]))


def apply(h: Homography, p: Point2) -> Point2:
    """Apply ``h`` to a point via the projective divide.

    Computes ``w' = h31*x + h32*y + 1`` and divides the transformed
    coordinates by it.

    Raises
    ------
    DegenerateProjection
        If ``|w'| <= PROJECTION_EPS``.
    """
    d = h.dof
    w = d[6] * p.x + d[7] * p.y + 1.0
    if abs(w) <= PROJECTION_EPS:
        raise DegenerateProjection(
            f"point ({p.x}, {p.y}) maps to infinity (w'={w})"
        )
    return Point2(
        (d[0] * p.x + d[1] * p.y + d[2]) / w,
        (d[3] * p.x + d[4] * p.y + d[5]) / w,
    )


def transform_points(h: Homography, points: np.ndarray) -> np.ndarray:
    """Apply ``h`` to an (n, 2) array of points.

    Uses exactly the same elementwise arithmetic as :func:`apply`, so scalar
    and vectorized paths agree bitwise.

    Raises
    ------
    DegenerateProjection
        If any point projects onto the line at infinity.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DimensionMismatch(f"expected an (n, 2) array, got shape {pts.shape}")
    d = h.dof
    x, y = pts[:, 0], pts[:, 1]
    w = d[6] * x + d[7] * y + 1.0
    if np.any(np.abs(w) <= PROJECTION_EPS):
        bad = int(np.argmax(np.abs(w) <= PROJECTION_EPS))
        raise DegenerateProjection(f"point index {bad} maps to infinity")
    out = np.empty_like(pts)
    out[:, 0] = (d[0] * x + d[1] * y + d[2]) / w
    out[:, 1] = (d[3] * x + d[4] * y + d[5]) / w
    return out


def compose(first: Homography, then: Homography) -> Homography:
    """The transform equivalent to applying ``first``, then ``then``.

    The matrix product is renormalized so the (3,3) entry stays exactly 1.

    Raises
    ------
    SingularMatrix
        If the product's (3,3) entry is too close to zero to renormalize.
    """
    return from_matrix(then.matrix() @ first.matrix())


def invert(h: Homography) -> Homography:
    """The inverse transform, renormalized to keep the (3,3) entry at 1.

    Raises
    ------
    SingularMatrix
        If the matrix determinant (or the renormalization pivot of the
        inverse) is within ``SINGULARITY_EPS`` of zero.
    """
    m = h.matrix()
    det = float(np.linalg.det(m))
    if abs(det) <= SINGULARITY_EPS:
        raise SingularMatrix(f"homography is singular (det={det})")
    inv = np.linalg.inv(m)
    if abs(inv[2, 2]) <= SINGULARITY_EPS:
        raise SingularMatrix("inverse cannot be renormalized")
    return from_matrix(inv)
