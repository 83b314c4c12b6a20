"""Bifunctions for equilibrium problems.

An equilibrium problem asks for ``x* in C`` with ``f(x*, y) >= 0`` for every
``y in C``. The solver only needs two things from ``f``: its value, and one
star-subgradient of ``f(x, .)`` at ``x`` itself.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
import numpy.typing as npt

from .errors import DenominatorNonPositive, DimensionMismatch, InstanceFormatError

Array = npt.NDArray[np.float64]

DENOMINATOR_TOL = 1e-12


class EquilibriumBifunction(ABC):
    """Capability interface used by the solver and the audits.

    Implementations must satisfy ``evaluate(x, x) == 0``, and the vector from
    ``star_subgradient(x)`` must have a negative inner product with ``y - x``
    for every ``y`` where ``evaluate(x, y) < 0``. Any element of the
    star-subdifferential is acceptable when it is not a singleton.
    """

    dim: int

    @abstractmethod
    def evaluate(self, x: Array, y: Array) -> Array | float:
        """``f(x, y)``; ``y`` may carry leading batch axes."""

    @abstractmethod
    def star_subgradient(self, x: Array) -> Array:
        """An unnormalized element of the star-subdifferential of ``f(x, .)`` at ``x``."""


def _matrix(values: Any, name: str) -> Array:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _vector(values: Any, name: str, n: int) -> Array:
    arr = np.array(values, dtype=np.float64)
    if arr.shape != (n,):
        raise DimensionMismatch(f"{name} must have shape ({n},), got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FractionalBifunction(EquilibriumBifunction):
    r"""Affine-fractional bifunction

    .. math::

        f(x, y) = \langle Ax + b,\ \frac{A_1 y + b_1}{c^T y + d}
                  - \frac{A_1 x + b_1}{c^T x + d} \rangle

    For fixed ``x`` the map ``y -> f(x, y)`` is a ratio of an affine function
    and a positive affine function, hence quasiconvex wherever the
    denominator is positive. Probe points ``y`` must satisfy
    ``c.y + d > denominator_tol``; the anchor ``x`` only needs a denominator
    bounded away from zero.
    """

    A: Array
    A1: Array
    b: Array
    b1: Array
    c: Array
    d: float
    denominator_tol: float = DENOMINATOR_TOL

    def __post_init__(self) -> None:
        A = _matrix(self.A, "A")
        n = A.shape[0]
        A1 = _matrix(self.A1, "A1")
        if A1.shape != A.shape:
            raise DimensionMismatch(f"A1 has shape {A1.shape}, A has {A.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "A1", A1)
        for name in ("b", "b1", "c"):
            object.__setattr__(self, name, _vector(getattr(self, name), name, n))
        object.__setattr__(self, "d", float(self.d))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def _check(self, x: Array) -> Array:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise DimensionMismatch(f"point has shape {x.shape}, problem lives in R^{self.dim}")
        return x

    def denominator(self, y: Array) -> Array | float:
        """``c.y + d`` for a probe point; must exceed ``denominator_tol``."""
        den = self._check(y) @ self.c + self.d
        if np.any(den <= self.denominator_tol):
            raise DenominatorNonPositive(
                f"c.y + d = {np.min(den):.3e} is not above {self.denominator_tol:g}"
            )
        return den

    def anchor_denominator(self, x: Array) -> float:
        """``c.x + d`` for the anchor point of ``f(x, .)``; only needs to be nonzero.

        The identity ``f(x, y) = a(y) / (c.y + d)`` with an affine ``a``
        vanishing at ``x`` holds whatever the sign of ``c.x + d``, so the
        star-subgradient stays valid on ``{y : c.y + d > 0}`` for iterates
        that have drifted outside that region.
        """
        den = float(self._check(x) @ self.c + self.d)
        if abs(den) <= self.denominator_tol:
            raise DenominatorNonPositive(
                f"c.x + d = {den:.3e} is within {self.denominator_tol:g} of zero"
            )
        return den

    def ratio(self, y: Array) -> Array:
        """``(A1 y + b1) / (c.y + d)``, batched over the leading axes of ``y``."""
        y = self._check(y)
        den = self.denominator(y)
        return (y @ self.A1.T + self.b1) / np.asarray(den)[..., None]

    def evaluate(self, x: Array, y: Array) -> Array | float:
        x = self._check(x)
        if x.ndim != 1:
            raise DimensionMismatch("the first argument must be a single point")
        q = self.A @ x + self.b
        own = (self.A1 @ x + self.b1) / self.anchor_denominator(x)
        out = (self.ratio(y) - own) @ q
        return float(out) if np.ndim(out) == 0 else out

    def frozen_value(self, x: Array, y: Array) -> Array | float:
        """``<Ax + b, (A1 y + b1)/(c.y + d)>``: the ``y``-dependent part of ``f(x, y)``."""
        x = self._check(x)
        out = self.ratio(y) @ (self.A @ x + self.b)
        return float(out) if np.ndim(out) == 0 else out

    def star_subgradient(self, x: Array) -> Array:
        """Gradient of the numerator after clearing the denominator.

        With ``q = Ax + b`` and ``kappa = <q, A1 x + b1> / (c.x + d)``,
        ``f(x, y) = (q.(A1 y + b1) - kappa (c.y + d)) / (c.y + d)``. The
        numerator is affine in ``y`` and vanishes at ``y = x``, so its gradient
        ``A1^T q - kappa c`` is a star-subgradient at ``x``.
        """
        x = self._check(x)
        den = self.anchor_denominator(x)
        q = self.A @ x + self.b
        kappa = q @ (self.A1 @ x + self.b1) / den
        return self.A1.T @ q - kappa * self.c

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "A1": self.A1.tolist(),
            "b": self.b.tolist(),
            "b1": self.b1.tolist(),
            "c": self.c.tolist(),
            "d": self.d,
        }

    @classmethod
    def from_dict(cls, record: dict, where: str = "instance") -> FractionalBifunction:
        if not isinstance(record, dict):
            raise InstanceFormatError(f"{where}: expected an object")
        fields = {}
        for key in ("A", "A1", "b", "b1", "c", "d"):
            if key not in record:
                raise InstanceFormatError(f"{where}: missing field {key!r}")
            fields[key] = record[key]
        try:
            return cls(**fields)
        except (TypeError, ValueError) as exc:
            raise InstanceFormatError(f"{where}: {exc}") from exc


def evaluate_fractional(p: FractionalBifunction, x: Array, y: Array) -> Array | float:
    return p.evaluate(x, y)


def star_subgradient_fractional(p: FractionalBifunction, x: Array) -> Array:
    return p.star_subgradient(x)


def monotonicity_matrix(p: FractionalBifunction, x: Array) -> Array:
    """``A^T [ (c.x) A1 - (A1 x) c^T ] + A^T [ d A1 - b1 c^T ]``.

    The fractional bifunction is monotone on ``C`` exactly when this matrix is
    positive semidefinite for every ``x in C``.
    """
    x = p._check(x)
    if x.ndim != 1:
        raise DimensionMismatch("monotonicity_matrix takes a single point")
    inner = (p.c @ x) * p.A1 - np.outer(p.A1 @ x, p.c)
    return p.A.T @ inner + p.A.T @ (p.d * p.A1 - np.outer(p.b1, p.c))


class MonotonicityDiagnostic(NamedTuple):
    min_sym_eigenvalue: float
    asymmetry: float

    @property
    def psd(self) -> bool:
        return self.min_sym_eigenvalue >= -1e-12

    @property
    def symmetric(self) -> bool:
        return self.asymmetry <= 1e-12


def monotonicity_diagnostic(p: FractionalBifunction, x: Array) -> MonotonicityDiagnostic:
    """Smallest eigenvalue of the symmetric part, and ``||M - M^T||_F``.

    Advisory only: random benchmark instances are not filtered on it.
    """
    m = monotonicity_matrix(p, x)
    sym = 0.5 * (m + m.T)
    return MonotonicityDiagnostic(
        float(np.linalg.eigvalsh(sym)[0]), float(np.linalg.norm(m - m.T))
    )
