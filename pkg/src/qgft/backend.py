"""Common contract for compact quantum group models.

A backend exposes the Peter-Weyl coefficient basis ``t^{(l)}_{ij}``, the Haar
state, the modular group on coefficients and an L^p norm on its elements.
Everything else (Gram matrix, expansion in the basis, the coefficient
involution table, coproduct on the basis) is derived here once and cached.
"""

from __future__ import annotations

import abc
from functools import cached_property
from typing import Any, Hashable, NamedTuple, Sequence

import numpy as np

from .linalg import BlockDiagonal, InterpolationParams

__all__ = [
    "CoeffIndex",
    "TruncationError",
    "BackendMismatchError",
    "ConsistencyError",
    "QuantumGroupBackend",
    "Functional",
    "GnsVector",
]


class TruncationError(ValueError):
    """Raised when an index or element lies beyond the truncated model."""


class BackendMismatchError(ValueError):
    """Raised when objects from two different backends are combined."""


class ConsistencyError(RuntimeError):
    """Raised when an internal identity (orthogonality, calibration) breaks."""


class CoeffIndex(NamedTuple):
    """Matrix coefficient ``t^{(level)}_{i,j}``."""

    level: Hashable
    i: Hashable
    j: Hashable


class QuantumGroupBackend(abc.ABC):
    """Compact quantum group with a finite Peter-Weyl basis.

    Subclasses implement the element algebra (``mul``, ``adjoint``, ``add``,
    ``scale``, ``zero``), the Haar state, a GNS embedding ``gns_matrix`` with
    ``gns_matrix([x, y]) -> E`` such that ``E[:, 1].conj() @ E[:, 0] ==
    haar(y* x)``, the basis elements, ``modular_scale`` and ``lp_norm``.
    """

    name: str = "backend"
    tracial: bool = False
    gram_tol: float = 1e-10

    # -- to implement -------------------------------------------------------
    @property
    @abc.abstractmethod
    def blocks(self) -> Sequence[tuple[Hashable, tuple]]:
        """Block labels with their ordered row/column labels."""

    @abc.abstractmethod
    def basis_element(self, idx: CoeffIndex) -> Any: ...

    @abc.abstractmethod
    def haar(self, x) -> complex: ...

    @abc.abstractmethod
    def mul(self, x, y): ...

    @abc.abstractmethod
    def adjoint(self, x): ...

    @abc.abstractmethod
    def add(self, x, y): ...

    @abc.abstractmethod
    def scale(self, c: complex, x): ...

    @abc.abstractmethod
    def zero(self): ...

    @abc.abstractmethod
    def gns_matrix(self, elements: Sequence) -> np.ndarray: ...

    @abc.abstractmethod
    def modular_scale(self, idx: CoeffIndex, w: complex) -> complex: ...

    @abc.abstractmethod
    def lp_norm(self, x, params: InterpolationParams) -> float: ...

    def unit(self):
        return self.basis_element(self.basis[0])

    # -- derived structure --------------------------------------------------
    @cached_property
    def basis(self) -> tuple[CoeffIndex, ...]:
        return tuple(
            CoeffIndex(label, i, j) for label, rows in self.blocks for i in rows for j in rows
        )

    @cached_property
    def position(self) -> dict[CoeffIndex, int]:
        return {idx: n for n, idx in enumerate(self.basis)}

    @cached_property
    def block_slices(self) -> dict[Hashable, slice]:
        out, start = {}, 0
        for label, rows in self.blocks:
            size = len(rows) ** 2
            out[label] = slice(start, start + size)
            start += size
        return out

    @cached_property
    def block_rows(self) -> dict[Hashable, tuple]:
        return {label: tuple(rows) for label, rows in self.blocks}

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def basis_elements(self) -> tuple:
        return tuple(self.basis_element(idx) for idx in self.basis)

    @cached_property
    def _embedding(self) -> np.ndarray:
        return self.gns_matrix(self.basis_elements)

    @cached_property
    def _adjoint_embedding(self) -> np.ndarray:
        return self.gns_matrix([self.adjoint(t) for t in self.basis_elements])

    @cached_property
    def _embedding_h(self) -> np.ndarray:
        return np.ascontiguousarray(self._embedding.conj().T)

    @cached_property
    def _adjoint_embedding_h(self) -> np.ndarray:
        return np.ascontiguousarray(self._adjoint_embedding.conj().T)

    @cached_property
    def gram(self) -> np.ndarray:
        """``gram[m, n] = haar(t_m^* t_n)``."""
        return self._embedding_h @ self._embedding

    @cached_property
    def _gram_inverse(self) -> np.ndarray:
        g = self.gram
        w = np.linalg.eigvalsh(g)
        if w[0] <= self.gram_tol * w[-1]:
            raise ConsistencyError(f"singular Gram matrix (min eigenvalue {w[0]:.3e})")
        return np.linalg.inv(g)

    def index(self, idx) -> int:
        idx = CoeffIndex(*idx)
        try:
            return self.position[idx]
        except KeyError:
            raise TruncationError(f"{idx} is outside the truncated basis") from None

    def check_level(self, level) -> None:
        if level not in self.block_rows:
            raise TruncationError(f"level {level} exceeds the truncation")

    def element(self, coeffs: np.ndarray):
        """``sum_m coeffs[m] t_m``."""
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coefficients, got {coeffs.shape}")
        out = self.zero()
        for c, t in zip(coeffs, self.basis_elements):
            if c != 0:
                out = self.add(out, self.scale(c, t))
        return out

    def expand(self, x, *, rtol: float = 1e-8) -> np.ndarray:
        """Coefficients ``c`` with ``Lambda(x) = sum_m c_m Lambda(t_m)``.

        Raises ``TruncationError`` when ``x`` has a GNS component outside the
        coefficient span.
        """
        ex = self.gns_matrix([x])[:, 0]
        c = self._gram_inverse @ (self._embedding_h @ ex)
        residual = np.linalg.norm(ex - self._embedding @ c)
        if residual > rtol * max(1.0, np.linalg.norm(ex)):
            raise TruncationError(f"element is not in the coefficient span (residual {residual:.3e})")
        return c

    @cached_property
    def involution(self) -> np.ndarray:
        """Table ``K`` with ``(t_m)^* = sum_n K[m, n] t_n``."""
        gi = self._gram_inverse
        return (gi @ (self._embedding_h @ self._adjoint_embedding)).T

    def left_values(self, x) -> np.ndarray:
        """``[haar(t_m x)]_m``: the left functional of ``x`` on the basis."""
        ex = self.gns_matrix([x])[:, 0]
        return self._adjoint_embedding_h @ ex

    def right_values(self, x) -> np.ndarray:
        """``[haar(x t_m)]_m``."""
        ex = self.gns_matrix([self.adjoint(x)])[:, 0]
        return ex.conj() @ self._embedding

    def coproduct_on_basis(self, idx) -> list[tuple[CoeffIndex, CoeffIndex]]:
        """Pairs in ``Delta(t_ij) = sum_k t_ik (x) t_kj``, each with coefficient 1."""
        idx = CoeffIndex(*idx)
        self.check_level(idx.level)
        rows = self.block_rows[idx.level]
        if idx.i not in rows or idx.j not in rows:
            raise TruncationError(f"{idx} has row/column outside its block")
        return [
            (CoeffIndex(idx.level, idx.i, k), CoeffIndex(idx.level, k, idx.j)) for k in rows
        ]

    def modular_scales(self, w: complex) -> np.ndarray:
        return np.array([self.modular_scale(idx, w) for idx in self.basis], dtype=complex)

    def modular_coeffs(self, coeffs: np.ndarray, w: complex) -> np.ndarray:
        """Coefficients of ``sigma_w`` applied to ``sum c_m t_m``."""
        return self.modular_scales(w) * np.asarray(coeffs, dtype=complex)

    def random_coeffs(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)

    def blocks_from_values(self, values: np.ndarray) -> BlockDiagonal:
        out = []
        for label, rows in self.blocks:
            d = len(rows)
            out.append((label, np.asarray(values[self.block_slices[label]]).reshape(d, d)))
        return BlockDiagonal(out)

    def values_from_blocks(self, blocks: BlockDiagonal) -> np.ndarray:
        if tuple(blocks.labels) != tuple(label for label, _ in self.blocks):
            raise TruncationError("block labels do not match the backend tower")
        return np.concatenate([np.asarray(m, dtype=complex).ravel() for _, m in blocks])

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def _check_same(a, b):
    if a is not b:
        raise BackendMismatchError(f"{a!r} vs {b!r}")


class Functional:
    """Normal functional given by its values on the coefficient basis."""

    __slots__ = ("backend", "values")

    def __init__(self, backend: QuantumGroupBackend, values):
        values = np.array(values, dtype=complex)
        if values.shape != (backend.dim,):
            raise ValueError(f"expected {backend.dim} values, got {values.shape}")
        values.setflags(write=False)
        self.backend = backend
        self.values = values

    @classmethod
    def zero(cls, backend):
        return cls(backend, np.zeros(backend.dim))

    @classmethod
    def from_blocks(cls, backend, blocks: BlockDiagonal):
        return cls(backend, backend.values_from_blocks(blocks))

    def __getitem__(self, idx) -> complex:
        return complex(self.values[self.backend.index(idx)])

    def block(self, label) -> np.ndarray:
        rows = self.backend.block_rows[label]
        return self.values[self.backend.block_slices[label]].reshape(len(rows), len(rows))

    def conj(self) -> "Functional":
        """``omega-bar(y) = conj(omega(y*))``."""
        return Functional(self.backend, np.conj(self.backend.involution @ self.values))

    def __add__(self, other):
        _check_same(self.backend, other.backend)
        return Functional(self.backend, self.values + other.values)

    def __sub__(self, other):
        _check_same(self.backend, other.backend)
        return Functional(self.backend, self.values - other.values)

    def __mul__(self, c):
        return Functional(self.backend, c * self.values)

    __rmul__ = __mul__

    def __repr__(self):
        support = sorted({idx.level for idx, v in zip(self.backend.basis, self.values) if v != 0}, key=str)
        return f"Functional({self.backend.name}, levels={support})"


class GnsVector:
    """Vector ``sum_m c_m Lambda(t_m)`` in the GNS space of the Haar state."""

    __slots__ = ("backend", "coeffs")

    def __init__(self, backend: QuantumGroupBackend, coeffs):
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.shape != (backend.dim,):
            raise ValueError(f"expected {backend.dim} coefficients, got {coeffs.shape}")
        coeffs.setflags(write=False)
        self.backend = backend
        self.coeffs = coeffs

    @classmethod
    def of(cls, backend, x) -> "GnsVector":
        """``Lambda(x)`` for an element in the coefficient span."""
        return cls(backend, backend.expand(x))

    def inner(self, other: "GnsVector") -> complex:
        """``<self, other>``, linear in the first slot."""
        _check_same(self.backend, other.backend)
        return complex(other.coeffs.conj() @ self.backend.gram @ self.coeffs)

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def element(self):
        return self.backend.element(self.coeffs)

    def __add__(self, other):
        _check_same(self.backend, other.backend)
        return GnsVector(self.backend, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self.backend, other.backend)
        return GnsVector(self.backend, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return GnsVector(self.backend, c * self.coeffs)

    __rmul__ = __mul__

    def __repr__(self):
        return f"GnsVector({self.backend.name}, norm={self.norm():.6g})"
