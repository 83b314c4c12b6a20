"""Convex sets with closed-form projections, and operators on their intersections.

Every projector accepts a single point of shape ``(n,)`` or a batch of shape
``(..., n)``; the last axis is always the coordinate axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

import numpy as np
import numpy.typing as npt

from .errors import DimensionMismatch, InstanceFormatError, NonConvergence

Array = npt.NDArray[np.float64]

MEMBERSHIP_TOL = 1e-9


def _vector(values: Any, name: str) -> Array:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be a 1-D vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_dim(x: Array, dim: int) -> Array:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != dim:
        raise DimensionMismatch(f"point has shape {x.shape}, set lives in R^{dim}")
    return x


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``{x : lower <= x <= upper}``."""

    lower: Array
    upper: Array

    def __post_init__(self) -> None:
        lower = _vector(self.lower, "lower")
        upper = _vector(self.upper, "upper")
        if lower.shape != upper.shape:
            raise DimensionMismatch(f"lower has {lower.size} entries, upper has {upper.size}")
        if np.any(lower > upper):
            raise ValueError("box needs lower <= upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> Box:
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self) -> int:
        return self.lower.size

    def project(self, x: Array) -> Array:
        return project_box(x, self)


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed Euclidean ball ``{x : ||x - center|| <= radius}``."""

    center: Array
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _vector(self.center, "center"))
        radius = float(self.radius)
        if not radius >= 0.0:
            raise ValueError(f"ball radius must be nonnegative, got {radius}")
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, x: Array) -> Array:
        return project_ball(x, self)


@dataclass(frozen=True, eq=False)
class Halfspace:
    """Closed halfspace ``{x : normal . x >= offset}``."""

    normal: Array
    offset: float

    def __post_init__(self) -> None:
        normal = _vector(self.normal, "normal")
        if not np.linalg.norm(normal) > 0.0:
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size

    def project(self, x: Array) -> Array:
        return project_halfspace(x, self)


ConvexSet = Union[Box, Ball, Halfspace]


@dataclass(frozen=True, eq=False)
class Intersection:
    """Ordered intersection ``C_1 ∩ ... ∩ C_m`` with averaging weights.

    Weights default to ``1/m``. For ``m > 1`` each weight must lie strictly
    inside ``(0, 1)``; they must sum to one within ``1e-12``.
    """

    components: tuple[ConvexSet, ...]
    weights: Array | None = None

    def __post_init__(self) -> None:
        components = tuple(self.components)
        if not components:
            raise ValueError("an intersection needs at least one component set")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise DimensionMismatch(f"component sets disagree on dimension: {sorted(dims)}")
        m = len(components)
        if self.weights is None:
            weights = np.full(m, 1.0 / m)
            weights.setflags(write=False)
        else:
            weights = _vector(self.weights, "weights")
        if weights.size != m:
            raise DimensionMismatch(f"{m} components but {weights.size} weights")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
        if m > 1 and np.any((weights <= 0.0) | (weights >= 1.0)):
            raise ValueError("weights must lie strictly inside (0, 1)")
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def __len__(self) -> int:
        return len(self.components)


def project_box(x: Array, s: Box) -> Array:
    x = _check_dim(x, s.dim)
    return np.minimum(np.maximum(x, s.lower), s.upper)


def project_ball(x: Array, s: Ball) -> Array:
    x = _check_dim(x, s.dim)
    diff = x - s.center
    dist = np.linalg.norm(diff, axis=-1, keepdims=True)
    inside = dist <= s.radius
    scale = np.divide(s.radius, dist, out=np.ones_like(dist), where=~inside)
    return np.where(inside, x, s.center + scale * diff)


def project_halfspace(x: Array, s: Halfspace) -> Array:
    x = _check_dim(x, s.dim)
    shortfall = s.offset - x @ s.normal
    step = np.where(shortfall > 0.0, shortfall / (s.normal @ s.normal), 0.0)
    return np.where(shortfall[..., None] > 0.0, x + step[..., None] * s.normal, x)


def project(x: Array, s: ConvexSet) -> Array:
    """Euclidean projection onto a single component set."""
    if isinstance(s, Box):
        return project_box(x, s)
    if isinstance(s, Ball):
        return project_ball(x, s)
    if isinstance(s, Halfspace):
        return project_halfspace(x, s)
    raise TypeError(f"unsupported set type {type(s).__name__}")


def averaged_projection(x: Array, s: Intersection) -> Array:
    """Weighted average ``sum_i w_i P_{C_i}(x)`` of the component projections.

    The sum is accumulated in component order, so the result does not depend
    on how the component projections were scheduled. A point that every
    component leaves untouched is returned unchanged.
    """
    x = _check_dim(x, s.dim)
    acc = np.zeros_like(x)
    fixed = np.ones(x.shape[:-1], dtype=bool)
    for w, c in zip(s.weights, s.components):
        p = project(x, c)
        fixed &= np.all(p == x, axis=-1)
        acc += w * p
    return np.where(fixed[..., None], x, acc)


def feasibility_residual(x: Array, s: Intersection) -> Array | float:
    """Sum of distances ``sum_i ||x - P_{C_i}(x)||``; zero exactly on the intersection."""
    x = _check_dim(x, s.dim)
    total = np.zeros(x.shape[:-1])
    for c in s.components:
        total += np.linalg.norm(x - project(x, c), axis=-1)
    return float(total) if total.ndim == 0 else total


def is_member(x: Array, s: Intersection, tol: float = MEMBERSHIP_TOL) -> bool:
    return bool(feasibility_residual(x, s) <= tol)


def project_intersection_dykstra(
    x: Array,
    s: Intersection,
    tol: float = 1e-10,
    max_sweeps: int = 10_000,
) -> Array:
    """Exact projection onto the intersection by Dykstra's cyclic method.

    Each sweep projects ``y + p_i`` onto ``C_i`` in turn and updates the
    correction ``p_i``. Iteration stops once no sub-step of a sweep moves the
    iterate by ``tol`` or more.

    Raises
    ------
    NonConvergence
        If the criterion is not met within ``max_sweeps`` sweeps. An empty
        intersection typically shows up this way.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.array(_check_dim(x, s.dim), dtype=np.float64)
    if y.ndim != 1:
        raise DimensionMismatch("Dykstra projection takes a single point")
    corrections = [np.zeros_like(y) for _ in s.components]
    for _ in range(max_sweeps):
        largest = 0.0
        for i, c in enumerate(s.components):
            shifted = y + corrections[i]
            z = project(shifted, c)
            corrections[i] = shifted - z
            largest = max(largest, float(np.linalg.norm(z - y)))
            y = z
        if largest < tol:
            return y
    raise NonConvergence(f"Dykstra did not settle below {tol:g} in {max_sweeps} sweeps")


def bounding_box(s: Intersection) -> tuple[Array, Array]:
    """Tightest axis-aligned box containing every bounded component.

    Raises ``ValueError`` if no component bounds some coordinate.
    """
    lo = np.full(s.dim, -np.inf)
    hi = np.full(s.dim, np.inf)
    for c in s.components:
        if isinstance(c, Box):
            lo = np.maximum(lo, c.lower)
            hi = np.minimum(hi, c.upper)
        elif isinstance(c, Ball):
            lo = np.maximum(lo, c.center - c.radius)
            hi = np.minimum(hi, c.center + c.radius)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("intersection is not bounded by its box/ball components")
    return lo, hi


# -- serialization -----------------------------------------------------------


def _field(record: dict, key: str, where: str) -> Any:
    if not isinstance(record, dict):
        raise InstanceFormatError(f"{where}: expected an object, got {type(record).__name__}")
    if key not in record:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    return record[key]


def _floats(values: Any, key: str, where: str) -> list[float]:
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{where}: field {key!r} must be a list of numbers") from exc
    return out


def set_to_dict(s: ConvexSet) -> dict:
    if isinstance(s, Box):
        return {"type": "box", "lower": s.lower.tolist(), "upper": s.upper.tolist()}
    if isinstance(s, Ball):
        return {"type": "ball", "center": s.center.tolist(), "radius": s.radius}
    if isinstance(s, Halfspace):
        return {"type": "halfspace", "normal": s.normal.tolist(), "offset": s.offset}
    raise TypeError(f"unsupported set type {type(s).__name__}")


def set_from_dict(record: dict, where: str = "set") -> ConvexSet:
    kind = _field(record, "type", where)
    try:
        if kind == "box":
            return Box(
                _floats(_field(record, "lower", where), "lower", where),
                _floats(_field(record, "upper", where), "upper", where),
            )
        if kind == "ball":
            return Ball(
                _floats(_field(record, "center", where), "center", where),
                float(_field(record, "radius", where)),
            )
        if kind == "halfspace":
            return Halfspace(
                _floats(_field(record, "normal", where), "normal", where),
                float(_field(record, "offset", where)),
            )
    except InstanceFormatError:
        raise
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{where}: {exc}") from exc
    raise InstanceFormatError(f"{where}: unknown set type {kind!r}")


def intersection_to_dict(s: Intersection) -> dict:
    return {
        "components": [set_to_dict(c) for c in s.components],
        "weights": s.weights.tolist(),
    }


def intersection_from_dict(record: dict, where: str = "sets") -> Intersection:
    raw = _field(record, "components", where)
    if not isinstance(raw, list):
        raise InstanceFormatError(f"{where}: field 'components' must be a list")
    components = tuple(
        set_from_dict(c, f"{where}.components[{i}]") for i, c in enumerate(raw)
    )
    weights = record.get("weights")
    try:
        return Intersection(
            components,
            None if weights is None else _floats(weights, "weights", where),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"{where}: {exc}") from exc
