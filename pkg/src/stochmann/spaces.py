"""Finite-dimensional normed spaces and the catalog of contraction maps.

Points are numpy float64 arrays of shape (d,); map evaluation accepts any
leading batch shape (..., d) and is elementwise-consistent with the single
point case, so batched replica runs reproduce serial arithmetic bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonContractiveError, ValidationError
from .streams import substream_uniforms

NORM_KINDS = ("euclidean", "max", "one")
MAP_FAMILIES = ("inverse_quadratic", "affine", "scaled_cosine")

# Global Lipschitz constant of x -> 1/(1+x^2): sup|F'| attained at 1/sqrt(3).
INVERSE_QUADRATIC_C = 9.0 / (8.0 * np.sqrt(3.0))

__all__ = [
    "NORM_KINDS",
    "MAP_FAMILIES",
    "INVERSE_QUADRATIC_C",
    "MapSpec",
    "inverse_quadratic",
    "affine",
    "scaled_cosine",
    "as_point",
    "norm",
    "dimension",
    "eval_map",
    "contraction_constant",
    "estimate_contraction",
    "reference_fixed_point",
]


def as_point(x, dim=None, name="x"):
    """Validate and coerce to a finite float64 vector of shape (d,)."""
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.ndim != 1:
        raise ValidationError(f"{name}: expected a 1-d point, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name}: coordinates must be finite")
    if dim is not None and v.shape[0] != dim:
        raise ValidationError(f"{name}: dimension mismatch, expected {dim}, got {v.shape[0]}")
    return v


def norm(v, kind="euclidean"):
    """Norm of v along its last axis. kind in {euclidean, max, one}."""
    v = np.asarray(v, dtype=np.float64)
    if kind == "euclidean":
        return np.sqrt(np.sum(v * v, axis=-1))
    if kind == "max":
        return np.max(np.abs(v), axis=-1)
    if kind == "one":
        return np.sum(np.abs(v), axis=-1)
    raise ValidationError(f"unknown norm kind {kind!r}")


@dataclass(frozen=True, eq=False)
class MapSpec:
    """A member of the self-map catalog.

    family        one of MAP_FAMILIES
    matrix, offset  parameters of the affine family F(x) = A x + b
    lam           gain of the scaled cosine family F(x) = lam*cos(x)
    declared_c    optional user-asserted contraction constant; when absent
                  the analytic family constant is used downstream
    """

    family: str
    matrix: np.ndarray | None = None
    offset: np.ndarray | None = None
    lam: float | None = None
    declared_c: float | None = None
    domain_box: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in MAP_FAMILIES:
            raise ValidationError(f"map.family: unknown family {self.family!r}")
        if self.declared_c is not None and not (0.0 <= self.declared_c < 1.0):
            raise ValidationError("map.declared_c: must lie in [0, 1)")
        if self.family == "affine":
            if self.matrix is None or self.offset is None:
                raise ValidationError("map: affine family requires matrix and offset")
            A = np.asarray(self.matrix, dtype=np.float64)
            b = as_point(self.offset, name="map.offset")
            if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
                raise ValidationError("map: affine matrix must be square and match offset")
            if not np.all(np.isfinite(A)):
                raise ValidationError("map.matrix: entries must be finite")
            if np.linalg.norm(A, 2) >= 1.0:
                raise ValidationError("map.matrix: operator norm must be < 1 for a contraction")
            object.__setattr__(self, "matrix", A)
            object.__setattr__(self, "offset", b)
        elif self.family == "scaled_cosine":
            if self.lam is None:
                raise ValidationError("map: scaled_cosine family requires lam")
            if not (np.isfinite(self.lam) and abs(self.lam) < 1.0):
                raise ValidationError("map.lam: |lam| must be < 1")
        if self.domain_box is None:
            object.__setattr__(self, "domain_box", _default_box(self))
        else:
            object.__setattr__(self, "domain_box",
                               _validate_box(self.domain_box, dimension(self)))


def _default_box(m):
    d = dimension(m)
    return np.tile(np.array([-10.0, 10.0]), (d, 1))


def _validate_box(box, d):
    box = np.asarray(box, dtype=np.float64)
    if box.shape != (d, 2):
        raise ValidationError(f"domain_box: expected shape ({d}, 2)")
    if not np.all(np.isfinite(box)):
        raise ValidationError("domain_box: bounds must be finite")
    if np.any(box[:, 0] >= box[:, 1]):
        raise ValidationError("domain_box: degenerate (zero or negative volume)")
    return box


def inverse_quadratic(declared_c=None, domain_box=None):
    """F(x) = 1/(1+x^2) on the line; contraction with c = 9/(8*sqrt(3))."""
    return MapSpec(family="inverse_quadratic", declared_c=declared_c,
                   domain_box=domain_box)


def affine(matrix, offset, declared_c=None, domain_box=None):
    """F(x) = A x + b with operator-norm(A) < 1."""
    return MapSpec(family="affine", matrix=np.asarray(matrix, dtype=np.float64),
                   offset=np.asarray(offset, dtype=np.float64),
                   declared_c=declared_c, domain_box=domain_box)


def scaled_cosine(lam, declared_c=None, domain_box=None):
    """F(x) = lam*cos(x) on the line, |lam| < 1."""
    return MapSpec(family="scaled_cosine", lam=float(lam), declared_c=declared_c,
                   domain_box=domain_box)


def dimension(m):
    if m.family == "affine":
        return int(np.asarray(m.offset).shape[0])
    return 1


def eval_map(m, x):
    """Evaluate F at x; x has shape (..., d) and the result matches it.

    The affine branch accumulates A[:, j] * x[..., j] in fixed column order,
    which keeps batched evaluation bitwise equal to the point-by-point one.
    """
    x = np.asarray(x, dtype=np.float64)
    d = dimension(m)
    if x.shape[-1:] != (d,):
        raise ValidationError(f"eval_map: expected trailing dimension {d}, got shape {x.shape}")
    if m.family == "inverse_quadratic":
        return 1.0 / (1.0 + x * x)
    if m.family == "scaled_cosine":
        return m.lam * np.cos(x)
    out = np.broadcast_to(m.offset, x.shape).copy()
    for j in range(d):
        out += m.matrix[:, j] * x[..., j, None]
    return out


def contraction_constant(m, norm_kind="euclidean"):
    """Analytic contraction constant of the family in the given norm.

    The contraction constant used by the bound machinery is declared_c when
    the user supplied one, else this analytic value.
    """
    if m.declared_c is not None:
        return float(m.declared_c)
    if m.family == "inverse_quadratic":
        return INVERSE_QUADRATIC_C
    if m.family == "scaled_cosine":
        return abs(m.lam)
    A = m.matrix
    if norm_kind == "euclidean":
        c = float(np.linalg.norm(A, 2))
    elif norm_kind == "max":
        c = float(np.max(np.sum(np.abs(A), axis=1)))
    elif norm_kind == "one":
        c = float(np.max(np.sum(np.abs(A), axis=0)))
    else:
        raise ValidationError(f"unknown norm kind {norm_kind!r}")
    if c >= 1.0:
        raise NonContractiveError(
            f"affine map has induced {norm_kind}-norm {c:.6g} >= 1; "
            "declare a constant or change the norm")
    return c


def estimate_contraction(m, domain_box=None, samples=10**4, seed=0, norm_kind="euclidean"):
    """Empirical contraction constant: max of ||F(x)-F(y)|| / ||x-y|| over
    sampled pairs in the box.

    Pair i is a pure function of (seed, i), so enlarging `samples` extends
    the sample rather than reshuffling it; the estimate is therefore
    monotone nondecreasing in `samples` for a fixed seed.
    """
    if samples < 1:
        raise ValidationError("samples: must be >= 1")
    d = dimension(m)
    box = _validate_box(domain_box, d) if domain_box is not None else m.domain_box
    lo, span = box[:, 0], box[:, 1] - box[:, 0]
    u = substream_uniforms(seed, np.arange(samples, dtype=np.uint64), 2 * d)
    x = lo + span * u[:, :d]
    y = lo + span * u[:, d:]
    dist = norm(x - y, norm_kind)
    keep = dist > 0.0
    if not np.any(keep):
        raise ValidationError("estimate_contraction: no distinct pairs sampled")
    ratios = norm(eval_map(m, x[keep]) - eval_map(m, y[keep]), norm_kind) / dist[keep]
    return float(np.max(ratios))


def reference_fixed_point(m, tol=1e-13, max_iter=100000, x0=None):
    """High-accuracy fixed point via Picard iteration.

    Terminates when the residual ||F(x)-x|| is <= tol; the Banach estimate
    ||x - x*|| <= residual/(1-c) then bounds the true error.
    """
    if tol <= 0:
        raise ValidationError("tol: must be positive")
    c = contraction_constant(m)
    if c >= 1.0:
        raise NonContractiveError("reference_fixed_point requires a contraction")
    x = np.zeros(dimension(m)) if x0 is None else as_point(x0, dimension(m))
    for _ in range(max_iter):
        fx = eval_map(m, x)
        if norm(fx - x) <= tol:
            return fx
        x = fx
    raise NonContractiveError(
        f"Picard iteration did not reach residual {tol:g} in {max_iter} steps")
