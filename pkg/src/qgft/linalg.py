"""Dense matrix helpers: Schatten norms, weighted Lp norms and block-diagonal containers."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterator, Sequence

import numpy as np

__all__ = [
    "InvalidExponentError",
    "PositiveDiagonal",
    "BlockDiagonal",
    "InterpolationParams",
    "schatten_norm",
    "weighted_lp_norm",
    "diag_power",
    "adjoint",
]

RANK_RTOL = 1e-12
STATE_TOL = 1e-12


class InvalidExponentError(ValueError):
    """Raised for a norm exponent outside [1, inf]."""


def _check_exponent(p: float) -> float:
    p = float(p)
    if np.isnan(p) or p < 1:
        raise InvalidExponentError(f"exponent must lie in [1, inf], got {p}")
    return p


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values with those below ``RANK_RTOL * max`` set to zero."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    s = np.linalg.svd(a, compute_uv=False)
    if s.size and s[0] > 0:
        s = np.where(s < RANK_RTOL * s[0], 0.0, s)
    return s


def schatten_norm(a: np.ndarray, p: float) -> float:
    """Schatten p-norm of a matrix.

    Parameters
    ----------
    a : array_like, shape (m, n)
    p : float
        Exponent in [1, inf]. ``np.inf`` gives the operator norm.

    Returns
    -------
    float
        ``(sum_i s_i**p)**(1/p)`` over the singular values ``s_i``.
    """
    p = _check_exponent(p)
    s = singular_values(a)
    if s.size == 0:
        return 0.0
    if np.isinf(p):
        return float(s[0])
    if p == 1:
        return float(s.sum())
    if p == 2:
        return float(np.sqrt(np.sum(s * s)))
    top = s[0]
    if top == 0:
        return 0.0
    # scale by the largest value to stay clear of overflow for large p
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class PositiveDiagonal:
    """Strictly positive diagonal operator, stored by its weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise ValueError("PositiveDiagonal needs at least one weight")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.size

    @property
    def trace(self) -> float:
        return float(self.weights.sum())

    def power(self, s: complex) -> np.ndarray:
        """Entrywise principal power ``w**s`` as a 1-d array."""
        if s == 0:
            return np.ones(self.dim, dtype=complex)
        return np.exp(complex(s) * np.log(self.weights))

    def matrix(self) -> np.ndarray:
        return np.diag(self.weights.astype(complex))


def diag_power(rho: PositiveDiagonal, s: complex) -> np.ndarray:
    """Matrix ``rho**s`` using the principal branch of the logarithm."""
    return np.diag(rho.power(s))


@dataclass(frozen=True)
class InterpolationParams:
    """Complex interpolation parameter ``z`` together with a norm exponent ``p``."""

    z: complex = -0.5
    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "p", _check_exponent(self.p))

    @property
    def q(self) -> float:
        """Conjugate exponent, ``1/p + 1/q = 1``."""
        if self.p == 1:
            return np.inf
        if np.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    def side_exponents(self) -> tuple[float, float]:
        """Exponents ``((1/2 + Re z)/p, (1/2 - Re z)/p)`` applied to the density."""
        if np.isinf(self.p):
            return 0.0, 0.0
        r = self.z.real
        return (0.5 + r) / self.p, (0.5 - r) / self.p


def weighted_lp_norm(
    x: np.ndarray,
    rho: PositiveDiagonal,
    params: InterpolationParams,
    *,
    check_state: bool = True,
) -> float:
    """Izumi L^p norm of ``x`` for the weight ``tr(rho .)``.

    Evaluates ``|| rho^a x rho^b ||_p`` with ``a = (1/2 + Re z)/p`` and
    ``b = (1/2 - Re z)/p``. ``z = -1/2`` is the left embedding ``x -> x rho``,
    ``z = +1/2`` the right one. The imaginary part of ``z`` drops out.

    Set ``check_state=False`` for weights that are not states (counting
    measures, dual Plancherel weights).
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape != (rho.dim, rho.dim):
        raise ValueError(f"dimension mismatch: x {x.shape} vs density dim {rho.dim}")
    if check_state and abs(rho.trace - 1.0) > STATE_TOL:
        raise ValueError(f"density is not a state: trace {rho.trace!r}")
    a, b = params.side_exponents()
    if a == 0 and b == 0:
        return schatten_norm(x, params.p)
    weighted = rho.power(a)[:, None] * x * rho.power(b)[None, :]
    return schatten_norm(weighted, params.p)


class BlockDiagonal:
    """Element of a finite direct sum of full matrix algebras.

    Blocks are keyed by label (half-integers for SU_q(2), irrep numbers for
    finite groups) and kept in the order given at construction.
    """

    def __init__(self, blocks: Sequence[tuple[Hashable, np.ndarray]]):
        labels = []
        mats = []
        for label, m in blocks:
            m = np.array(m, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"block {label!r} is not square: {m.shape}")
            if labels and not _label_key(labels[-1]) < _label_key(label):
                raise ValueError("block labels must be strictly increasing")
            if isinstance(label, Fraction) and m.shape[0] != 2 * label + 1:
                raise ValueError(f"block {label} must have size {2 * label + 1}")
            labels.append(label)
            mats.append(m)
        self._labels = tuple(labels)
        self._blocks = dict(zip(labels, mats))

    @property
    def labels(self) -> tuple:
        return self._labels

    def __getitem__(self, label) -> np.ndarray:
        return self._blocks[label]

    def __iter__(self) -> Iterator[tuple[Hashable, np.ndarray]]:
        for label in self._labels:
            yield label, self._blocks[label]

    def __len__(self) -> int:
        return len(self._labels)

    def _same_shape(self, other: "BlockDiagonal"):
        if self._labels != other._labels:
            raise ValueError("block labels differ")

    def __matmul__(self, other: "BlockDiagonal") -> "BlockDiagonal":
        self._same_shape(other)
        return BlockDiagonal([(l, self[l] @ other[l]) for l in self._labels])

    def __add__(self, other: "BlockDiagonal") -> "BlockDiagonal":
        self._same_shape(other)
        return BlockDiagonal([(l, self[l] + other[l]) for l in self._labels])

    def __sub__(self, other: "BlockDiagonal") -> "BlockDiagonal":
        self._same_shape(other)
        return BlockDiagonal([(l, self[l] - other[l]) for l in self._labels])

    def __mul__(self, c: complex) -> "BlockDiagonal":
        return BlockDiagonal([(l, c * m) for l, m in self])

    __rmul__ = __mul__

    def adjoint(self) -> "BlockDiagonal":
        return BlockDiagonal([(l, adjoint(m)) for l, m in self])

    def operator_norm(self) -> float:
        return max((schatten_norm(m, np.inf) for _, m in self), default=0.0)

    def max_abs(self) -> float:
        return max((float(np.abs(m).max()) for _, m in self if m.size), default=0.0)

    def __repr__(self):
        inner = ", ".join(f"{l}: {m.shape[0]}x{m.shape[0]}" for l, m in self)
        return f"BlockDiagonal({inner})"


def _label_key(label):
    return (0, label) if isinstance(label, (int, Fraction)) else (1, str(label))
