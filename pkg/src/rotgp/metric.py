"""SPD covariance metrics and coordinate-free anisotropy summaries.

Three parameterisations build the same object, a symmetric positive definite
3x3 metric ``M`` that defines the squared distance ``(x - x')^T M (x - x')``
inside a stationary kernel:

* :class:`Ard` -- diagonal metric, one length-scale per coordinate axis.
* :class:`Rotational` -- principal length-scales plus an axis-angle
  orientation; ``M = R^T diag(l^-2) R``.
* :class:`CholeskySpd` -- generic lower-triangular factor, ``M = L L^T``.

:func:`eigen_summary` reduces any such metric back to invariant quantities
(sorted principal ranges, sign-fixed directions, rotation angle from axis
alignment), which is how fits from the different parameterisations are
compared.
"""

from dataclasses import dataclass

import numpy as np

from .so3 import exp_so3, geodesic_angle


class InvalidParamsError(ValueError):
    """Parameter state cannot produce a valid SPD metric."""


class NotSpdError(ValueError):
    """Matrix handed to a summary is not symmetric positive definite."""


@dataclass
class Ard:
    """Axis-aligned metric: ``diag(lengthscales ** -2)``."""

    lengthscales: np.ndarray

    def __post_init__(self):
        self.lengthscales = np.asarray(self.lengthscales, dtype=float)

    kind = "ard"


@dataclass
class Rotational:
    """Principal length-scales plus an axis-angle orientation."""

    lengthscales: np.ndarray
    axis_angle: np.ndarray

    def __post_init__(self):
        self.lengthscales = np.asarray(self.lengthscales, dtype=float)
        self.axis_angle = np.asarray(self.axis_angle, dtype=float)

    kind = "rotational"


@dataclass
class CholeskySpd:
    """Generic SPD metric via its lower-triangular Cholesky factor.

    ``diag`` holds the three positive diagonal entries of L; ``offdiag``
    holds the sub-diagonal entries in the order (L[1,0], L[2,0], L[2,1]).
    """

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        self.diag = np.asarray(self.diag, dtype=float)
        self.offdiag = np.asarray(self.offdiag, dtype=float)

    kind = "spd"


MetricParams = Ard | Rotational | CholeskySpd


@dataclass
class AnisotropySummary:
    """Invariant description of an SPD metric.

    ``ranges`` are sorted ascending (shortest correlation range first) and
    pair with the columns of ``directions``; ``eigenvalues`` are the matching
    metric eigenvalues, sorted descending (ranges[i] == eigenvalues[i]**-0.5).
    ``geodesic_deg`` is the rotation angle, in degrees, between the principal
    axes and the coordinate axes.
    """

    ranges: np.ndarray
    directions: np.ndarray
    eigenvalues: np.ndarray
    geodesic_deg: float

    def to_dict(self) -> dict:
        return {
            "ranges": [float(v) for v in self.ranges],
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "directions": [[float(v) for v in col] for col in self.directions.T],
            "geodesic_deg": float(self.geodesic_deg),
        }


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidParamsError(message)


def _positive_finite(v: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(v)) and np.all(v > 0.0))


def build_metric(params: MetricParams) -> np.ndarray:
    """Assemble the SPD metric for a parameter state.

    Raises :class:`InvalidParamsError` on non-finite or non-positive required
    fields; samplers treat that as an automatic proposal rejection.
    """
    if isinstance(params, Ard):
        _require(_positive_finite(params.lengthscales),
                 "ARD length-scales must be finite and positive")
        return np.diag(params.lengthscales ** -2.0)
    if isinstance(params, Rotational):
        _require(_positive_finite(params.lengthscales),
                 "length-scales must be finite and positive")
        _require(bool(np.all(np.isfinite(params.axis_angle))),
                 "axis-angle vector must be finite")
        R = exp_so3(params.axis_angle)
        M = R.T @ np.diag(params.lengthscales ** -2.0) @ R
        return 0.5 * (M + M.T)
    if isinstance(params, CholeskySpd):
        _require(_positive_finite(params.diag),
                 "Cholesky diagonal must be finite and positive")
        _require(bool(np.all(np.isfinite(params.offdiag))),
                 "Cholesky off-diagonal entries must be finite")
        d, o = params.diag, params.offdiag
        L = np.array([[d[0], 0.0, 0.0],
                      [o[0], d[1], 0.0],
                      [o[1], o[2], d[2]]])
        M = L @ L.T
        return 0.5 * (M + M.T)
    raise TypeError(f"unknown metric parameterisation: {type(params).__name__}")


def eigen_summary(M) -> AnisotropySummary:
    """Eigendecomposition summary of an SPD metric.

    Eigenvalues are sorted descending, so ranges (their inverse square roots)
    come out shortest first. Each eigenvector is sign-fixed so its
    largest-magnitude component is non-negative (ties broken by lowest
    index); the rotation angle is taken from the eigenvector matrix after
    forcing det = +1.
    """
    M = np.asarray(M, dtype=float)
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if not np.all(np.isfinite(w)) or w.min() <= 0.0:
        raise NotSpdError(f"metric is not positive definite (eigenvalues {w})")
    order = np.argsort(w)[::-1]
    w = w[order]
    V = V[:, order].copy()
    for i in range(3):
        j = int(np.argmax(np.abs(V[:, i])))
        if V[j, i] < 0.0:
            V[:, i] = -V[:, i]
    Q = V.copy()
    if np.linalg.det(Q) < 0.0:
        Q[:, 2] = -Q[:, 2]
    return AnisotropySummary(
        ranges=w ** -0.5,
        directions=V,
        eigenvalues=w,
        geodesic_deg=float(np.degrees(geodesic_angle(Q))),
    )


def misalignment_angles(est: AnisotropySummary, truth: AnisotropySummary) -> np.ndarray:
    """Per-axis angles, in degrees, between same-rank principal directions.

    The absolute inner product removes eigenvector sign ambiguity, so each
    angle lies in [0, 90].
    """
    cosines = np.abs(np.sum(est.directions * truth.directions, axis=0))
    return np.degrees(np.arccos(np.clip(cosines, 0.0, 1.0)))
