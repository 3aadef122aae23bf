"""Function algebras C(G) of small finite groups.

These are the exact oracles: the Haar weight is counting measure, the dual is
the group algebra with Plancherel weight, and every identity can be checked by
enumerating the multiplication table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Hashable, Sequence

import numpy as np

from .backend import CoeffIndex, QuantumGroupBackend
from .linalg import BlockDiagonal, InterpolationParams, PositiveDiagonal, weighted_lp_norm

__all__ = [
    "GroupTable",
    "IrrepSet",
    "FiniteGroupBackend",
    "cyclic",
    "symmetric3",
    "group_fourier",
    "group_convolve",
]


@dataclass(frozen=True)
class GroupTable:
    """Multiplication table of a finite group on elements ``0 .. n-1``."""

    table: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        t = np.asarray(self.table, dtype=int)
        n = t.shape[0]
        if t.shape != (n, n) or t.min() < 0 or t.max() >= n:
            raise ValueError("table must be n x n with entries in range(n)")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        # exhaustive associativity: (ab)c == a(bc)
        left = t[t[:, :, None], np.arange(n)[None, None, :]]
        right = t[np.arange(n)[:, None, None], t[None, :, :]]
        if not np.array_equal(left, right):
            raise ValueError("multiplication table is not associative")
        ident = [e for e in range(n) if np.array_equal(t[e], np.arange(n)) and np.array_equal(t[:, e], np.arange(n))]
        if len(ident) != 1:
            raise ValueError("no unique identity element")
        e = ident[0]
        inv = np.full(n, -1)
        for a in range(n):
            hits = np.flatnonzero(t[a] == e)
            if hits.size != 1 or t[hits[0], a] != e:
                raise ValueError(f"element {a} has no two-sided inverse")
            inv[a] = hits[0]
        inv.setflags(write=False)
        object.__setattr__(self, "_identity", e)
        object.__setattr__(self, "_inverse", inv)

    @classmethod
    def from_elements(cls, elements: Sequence, op: Callable) -> "GroupTable":
        lookup = {g: k for k, g in enumerate(elements)}
        table = [[lookup[op(a, b)] for b in elements] for a in elements]
        return cls(np.array(table), tuple(elements))

    @property
    def order(self) -> int:
        return self.table.shape[0]

    @property
    def identity(self) -> int:
        return self._identity

    @property
    def inverse(self) -> np.ndarray:
        return self._inverse

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])


@dataclass(frozen=True)
class IrrepSet:
    """Unitary irreducible representations, ``mats[r][x]`` is ``pi_r(x)``."""

    group: GroupTable
    mats: tuple
    tol: float = 1e-12

    def __post_init__(self):
        g = self.group
        mats = tuple(np.asarray(m, dtype=complex) for m in self.mats)
        object.__setattr__(self, "mats", mats)
        if sum(m.shape[1] ** 2 for m in mats) != g.order:
            raise ValueError("sum of squared dimensions must equal the group order")
        for r, m in enumerate(mats):
            d = m.shape[1]
            if m.shape != (g.order, d, d):
                raise ValueError(f"irrep {r} has shape {m.shape}")
            eye = np.eye(d)
            for a in range(g.order):
                if np.abs(m[a].conj().T @ m[a] - eye).max() > self.tol:
                    raise ValueError(f"irrep {r} is not unitary at element {a}")
                for b in range(g.order):
                    if np.abs(m[a] @ m[b] - m[g.table[a, b]]).max() > self.tol:
                        raise ValueError(f"irrep {r} is not multiplicative at ({a}, {b})")
        chars = np.array([np.trace(m, axis1=1, axis2=2) for m in mats])
        overlap = chars.conj() @ chars.T / g.order
        if np.abs(overlap - np.eye(len(mats))).max() > 1e-10:
            raise ValueError("characters are not orthonormal")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.shape[1] for m in self.mats)


def group_fourier(irreps: IrrepSet, f) -> BlockDiagonal:
    """Blocks ``sum_x f(x) pi(x)`` for each irrep ``pi``."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (irreps.group.order,):
        raise ValueError("f must be defined on every group element")
    return BlockDiagonal([(r, np.einsum("x,xij->ij", f, m)) for r, m in enumerate(irreps.mats)])


def group_convolve(group: GroupTable, f, g) -> np.ndarray:
    """``(f * g)(x) = sum_{st = x} f(s) g(t)`` by enumeration."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    out = np.zeros(group.order, dtype=complex)
    for s in range(group.order):
        for t in range(group.order):
            out[group.table[s, t]] += f[s] * g[t]
    return out


class FiniteGroupBackend(QuantumGroupBackend):
    """``(C(G), Delta)`` with counting-measure Haar weight.

    Elements are complex arrays indexed by group element. Block labels are
    irrep numbers; rows and columns are ``0 .. d-1``.
    """

    tracial = True

    def __init__(self, name: str, irreps: IrrepSet):
        self.name = name
        self.irreps = irreps
        self.group = irreps.group

    @cached_property
    def blocks(self):
        return tuple((r, tuple(range(d))) for r, d in enumerate(self.irreps.dims))

    def basis_element(self, idx: CoeffIndex) -> np.ndarray:
        idx = CoeffIndex(*idx)
        self.check_level(idx.level)
        return self.irreps.mats[idx.level][:, idx.i, idx.j].copy()

    def unit(self):
        return np.ones(self.group.order, dtype=complex)

    def delta(self, a: int) -> np.ndarray:
        out = np.zeros(self.group.order, dtype=complex)
        out[a] = 1.0
        return out

    def haar(self, x) -> complex:
        return complex(np.sum(self._check(x)))

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.group.order,):
            raise ValueError(f"expected a function on {self.group.order} elements")
        return x

    def mul(self, x, y):
        return self._check(x) * self._check(y)

    def adjoint(self, x):
        return np.conj(self._check(x))

    def add(self, x, y):
        return self._check(x) + self._check(y)

    def scale(self, c, x):
        return c * self._check(x)

    def zero(self):
        return np.zeros(self.group.order, dtype=complex)

    def gns_matrix(self, elements):
        return np.stack([self._check(x) for x in elements], axis=1)

    def modular_scale(self, idx, w) -> complex:
        return 1.0

    @cached_property
    def density(self) -> PositiveDiagonal:
        return PositiveDiagonal(np.ones(self.group.order))

    def lp_norm(self, x, params: InterpolationParams) -> float:
        return weighted_lp_norm(np.diag(self._check(x)), self.density, params, check_state=False)


def cyclic(n: int) -> FiniteGroupBackend:
    """``Z/n`` with characters ``chi_k(x) = exp(2 pi i k x / n)``."""
    if n < 1:
        raise ValueError("cyclic group order must be positive")
    elements = tuple(range(n))
    group = GroupTable.from_elements(elements, lambda a, b: (a + b) % n)
    x = np.arange(n)
    mats = tuple(np.exp(2j * np.pi * k * x / n).reshape(n, 1, 1) for k in range(n))
    return FiniteGroupBackend(f"cyclic({n})", IrrepSet(group, mats))


def _compose(s, t):
    return tuple(s[t[k]] for k in range(len(t)))


def symmetric3() -> FiniteGroupBackend:
    """``S_3`` with the trivial, sign and two-dimensional standard irreps."""
    elements = tuple(itertools.permutations(range(3)))
    group = GroupTable.from_elements(elements, _compose)
    # orthonormal basis of the plane orthogonal to (1, 1, 1)
    plane = np.array([[1, -1, 0], [1, 1, -2]], dtype=float).T
    plane /= np.linalg.norm(plane, axis=0)
    trivial, sign, standard = [], [], []
    for s in elements:
        perm = np.zeros((3, 3))
        perm[list(s), range(3)] = 1.0
        trivial.append([[1.0]])
        sign.append([[np.linalg.det(perm)]])
        standard.append(plane.T @ perm @ plane)
    mats = (np.array(trivial), np.array(sign), np.array(standard))
    return FiniteGroupBackend("s3", IrrepSet(group, mats))
