"""Truncated model of SU_q(2) on l^2(N) (x) L^2(T).

Operators are Laurent polynomials in the rotation ``zeta`` of the circle with
``N x N`` matrix coefficients. The circle direction is exact; only the
``l^2(N)`` direction is cut off at ``N`` basis vectors, so Haar identities
carry an error of order ``q**(2 (N - 2l))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping

import numpy as np

from .backend import CoeffIndex, ConsistencyError, QuantumGroupBackend, TruncationError
from .linalg import InterpolationParams, PositiveDiagonal, schatten_norm, weighted_lp_norm

__all__ = [
    "LaurentOperator",
    "Corepresentation",
    "SUq2Backend",
    "build_generators",
    "haar_state",
    "half",
]

SAFETY_MARGIN = 4
NULL_TOL = 1e-9


def half(x) -> Fraction:
    """Coerce ``x`` to a half-integer ``Fraction``."""
    f = Fraction(x).limit_denominator(2)
    if f != Fraction(x) or (2 * f).denominator != 1:
        raise ValueError(f"{x!r} is not a half-integer")
    return f


class LaurentOperator:
    """``sum_k X_k zeta^k`` with ``N x N`` matrices ``X_k``.

    ``zeta`` is multiplication by ``e^{i theta}`` on ``L^2(T)`` and commutes
    with the matrices, so products convolve degrees and multiply slices.
    """

    __slots__ = ("n", "slices")

    def __init__(self, n: int, slices: Mapping[int, np.ndarray] = ()):
        self.n = int(n)
        clean = {}
        for k, m in dict(slices).items():
            m = np.array(m, dtype=complex)
            if m.shape != (self.n, self.n):
                raise ValueError(f"slice {k} has shape {m.shape}, expected {(self.n, self.n)}")
            if not np.all(np.isfinite(m)):
                raise ValueError("non-finite entries")
            if np.any(m != 0):
                m.setflags(write=False)
                clean[int(k)] = m
        self.slices = clean

    @classmethod
    def identity(cls, n: int) -> "LaurentOperator":
        return cls(n, {0: np.eye(n)})

    @classmethod
    def zero(cls, n: int) -> "LaurentOperator":
        return cls(n)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(sorted(self.slices))

    @property
    def window(self) -> tuple[int, int]:
        d = self.degrees
        return (d[0], d[-1]) if d else (0, 0)

    def slice(self, k: int) -> np.ndarray:
        m = self.slices.get(k)
        return np.zeros((self.n, self.n), dtype=complex) if m is None else m

    def _check(self, other):
        if not isinstance(other, LaurentOperator) or other.n != self.n:
            raise ValueError("operands must be LaurentOperators of the same truncation")

    def __add__(self, other):
        self._check(other)
        out = dict(self.slices)
        for k, m in other.slices.items():
            out[k] = out[k] + m if k in out else m
        return LaurentOperator(self.n, out)

    def __sub__(self, other):
        return self + other * -1

    def __neg__(self):
        return self * -1

    def __mul__(self, c):
        if isinstance(c, LaurentOperator):
            return self @ c
        return LaurentOperator(self.n, {k: c * m for k, m in self.slices.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        out: dict[int, np.ndarray] = {}
        for k1, a in self.slices.items():
            for k2, b in other.slices.items():
                ab = a @ b
                k = k1 + k2
                out[k] = out[k] + ab if k in out else ab
        return LaurentOperator(self.n, out)

    def __pow__(self, n: int):
        out = LaurentOperator.identity(self.n)
        for _ in range(int(n)):
            out = out @ self
        return out

    def adjoint(self) -> "LaurentOperator":
        return LaurentOperator(self.n, {-k: m.conj().T for k, m in self.slices.items()})

    @property
    def H(self) -> "LaurentOperator":
        return self.adjoint()

    def conjugate_by(self, d: np.ndarray) -> "LaurentOperator":
        """``diag(d) x diag(d)^{-1}`` for a nonvanishing vector ``d``."""
        return LaurentOperator(self.n, {k: d[:, None] * m / d[None, :] for k, m in self.slices.items()})

    def at(self, theta: float) -> np.ndarray:
        """The matrix ``x(theta) = sum_k X_k e^{ik theta}``."""
        out = np.zeros((self.n, self.n), dtype=complex)
        for k, m in self.slices.items():
            out += np.exp(1j * k * theta) * m
        return out

    def max_abs(self) -> float:
        return max((float(np.abs(m).max()) for m in self.slices.values()), default=0.0)

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= atol

    def __repr__(self):
        return f"LaurentOperator(N={self.n}, degrees={list(self.degrees)})"


def _check_q(q: float) -> float:
    q = float(q)
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    return q


def build_generators(q: float, n: int) -> tuple[LaurentOperator, LaurentOperator]:
    """``alpha e_i = sqrt(1 - q^{2i}) e_{i-1}`` and ``gamma e_i = q^i e_i (x) zeta``."""
    q = _check_q(q)
    if n < 2:
        raise ValueError("truncation N must be at least 2")
    i = np.arange(1, n)
    a = np.zeros((n, n))
    a[i - 1, i] = np.sqrt(1.0 - q ** (2 * i))
    g = np.diag(q ** np.arange(n, dtype=float))
    return LaurentOperator(n, {0: a}), LaurentOperator(n, {1: g})


def haar_weights(q: float, n: int) -> np.ndarray:
    """``(1 - q^2) q^{2r}`` for ``r < N``."""
    return (1.0 - q * q) * q ** (2.0 * np.arange(n))


def haar_state(x: LaurentOperator, q: float) -> complex:
    """``phi(x) = (1 - q^2) sum_r q^{2r} <x_0 e_r, e_r>``; the circle average keeps the zero mode."""
    rho = haar_weights(_check_q(q), x.n)
    return complex(np.dot(rho, np.diag(x.slice(0))))


@dataclass(frozen=True)
class Corepresentation:
    """Matrix ``t^{(l)}`` of Laurent operators, rows and columns ordered ``l, l-1, .., -l``."""

    level: Fraction
    entries: tuple

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> tuple[Fraction, ...]:
        return tuple(self.level - k for k in range(self.size))

    def position(self, i) -> int:
        k = self.level - half(i)
        if k.denominator != 1 or not 0 <= k < self.size:
            raise TruncationError(f"row {i} is outside level {self.level}")
        return int(k)

    def __getitem__(self, ij) -> LaurentOperator:
        i, j = ij
        return self.entries[self.position(i)][self.position(j)]

    def unitarity_error(self, rows: int) -> float:
        """Largest entry of ``t* t - 1`` and ``t t* - 1`` on the first ``rows`` basis vectors."""
        d = self.size
        n = self.entries[0][0].n
        one = LaurentOperator.identity(n)
        err = 0.0
        for a in range(d):
            for b in range(d):
                left = LaurentOperator.zero(n)
                right = LaurentOperator.zero(n)
                for k in range(d):
                    left = left + self.entries[k][a].H @ self.entries[k][b]
                    right = right + self.entries[a][k] @ self.entries[b][k].H
                for m in (left, right):
                    if a == b:
                        m = m - one
                    for s in m.slices.values():
                        err = max(err, float(np.abs(s[:rows, :rows]).max()))
        return err


class SUq2Backend(QuantumGroupBackend):
    """SU_q(2) with its Peter-Weyl tower up to level ``L``.

    Parameters
    ----------
    q : float
        Deformation parameter in (0, 1).
    N : int
        Number of retained basis vectors of ``l^2(N)``.
    L : half-integer
        Highest corepresentation level.
    torus_points : int, optional
        Minimum number of circle nodes for L^p norms with ``p != 2``.
    """

    tracial = False
    #: constant in the truncation bound ``C q^{2(N - 2l)}``
    truncation_constant = 4.0

    def __init__(self, q: float = 0.5, N: int = 64, L=3, *, torus_points: int = 64):
        self.q = _check_q(q)
        self.N = int(N)
        self.L = half(L)
        if self.L < 0:
            raise ValueError("tower level must be non-negative")
        if 2 * self.L + SAFETY_MARGIN > self.N:
            raise TruncationError(f"N={self.N} is too small for level {self.L}")
        self.torus_points = int(torus_points)
        self.name = f"suq2(q={self.q:g},N={self.N},L={self.L})"
        self.alpha, self.gamma = build_generators(self.q, self.N)
        self.density = PositiveDiagonal(haar_weights(self.q, self.N))

    # -- tower --------------------------------------------------------------
    @cached_property
    def levels(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(k, 2) for k in range(int(2 * self.L) + 1))

    @cached_property
    def _tower(self) -> dict[Fraction, Corepresentation]:
        n = self.N
        a, g = self.alpha, self.gamma
        tower = {Fraction(0): Corepresentation(Fraction(0), ((LaurentOperator.identity(n),),))}
        if self.L >= Fraction(1, 2):
            fund = ((a, g.H * (-self.q)), (g, a.H))
            tower[Fraction(1, 2)] = Corepresentation(Fraction(1, 2), fund)
        for level in self.levels[2:]:
            tower[level] = self._next_level(tower[level - Fraction(1, 2)], tower[Fraction(1, 2)], tower[level - 1])
        return tower

    def _embed(self, x: LaurentOperator, lo: int, hi: int) -> np.ndarray:
        root = np.sqrt(self.density.weights)
        return np.concatenate([(x.slice(k) * root[None, :]).ravel() for k in range(lo, hi + 1)])

    def _next_level(self, prev: Corepresentation, fund: Corepresentation, below: Corepresentation):
        """Split ``t^{(1/2)} (x) t^{(l)}`` and keep the ``l + 1/2`` summand.

        For each weight the top summand is the unique combination of the
        tensor columns whose entries are Haar-orthogonal to every coefficient
        of the ``l - 1/2`` summand.
        """
        l, new = prev.level, prev.level + Fraction(1, 2)
        d_new = int(2 * new) + 1
        span = int(2 * new)
        # pairs (a, c) of positions in fund and prev, grouped by total weight
        by_weight: dict[Fraction, list[tuple[int, int]]] = {}
        for pa in range(2):
            for pc in range(prev.size):
                w = fund.labels[pa] + prev.labels[pc]
                by_weight.setdefault(w, []).append((pa, pc))
        below_emb = np.stack(
            [self._embed(t, -span, span) for row in below.entries for t in row], axis=1
        )
        q_below = np.array([np.vdot(c, c).real for c in below_emb.T])
        vectors: dict[Fraction, list[tuple[tuple[int, int], complex]]] = {}
        for w in (new - k for k in range(d_new)):
            pairs = by_weight[w]
            if len(pairs) == 1:
                vectors[w] = [(pairs[0], 1.0)]
                continue
            form = np.zeros((len(pairs), len(pairs)), dtype=complex)
            for rows in by_weight.values():
                for pa, pc in rows:
                    cols = [fund.entries[pa][pb] @ prev.entries[pc][pd] for pb, pd in pairs]
                    overlaps = below_emb.conj().T @ np.stack([self._embed(y, -span, span) for y in cols], axis=1)
                    form += overlaps.conj().T @ (overlaps / q_below[:, None])
            evals, evecs = np.linalg.eigh(form)
            # truncation leaves a residue of order q^{2(N - 2l)} in the null direction
            null_tol = max(NULL_TOL, self.truncation_bound(new)) * max(1.0, evals[-1])
            if evals[0] > null_tol or evals[1] <= null_tol:
                raise ConsistencyError(f"no unique top-weight vector at level {new}, weight {w}: {evals}")
            v = evecs[:, 0]
            lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
            v = v * (abs(lead) / lead)
            vectors[w] = list(zip(pairs, v))
        entries = []
        for wm in (new - k for k in range(d_new)):
            row = []
            for wn in (new - k for k in range(d_new)):
                acc = LaurentOperator.zero(self.N)
                for (pa, pc), cm in vectors[wm]:
                    for (pb, pd), cn in vectors[wn]:
                        acc = acc + (fund.entries[pa][pb] @ prev.entries[pc][pd]) * (np.conj(cm) * cn)
                row.append(acc)
            entries.append(tuple(row))
        return Corepresentation(new, tuple(entries))

    def build_corepresentation(self, level) -> Corepresentation:
        level = half(level)
        if level < 0 or level > self.L:
            raise TruncationError(f"level {level} exceeds the tower L={self.L}")
        return self._tower[level]

    def q_matrix(self, level, j=None) -> PositiveDiagonal:
        """``Q_ii = phi(t_ij^* t_ij)`` read off the Gram matrix at column ``j`` (default ``l``)."""
        level = half(level)
        self.check_level(level)
        j = level if j is None else half(j)
        pos = [self.index((level, i, j)) for i in self.block_rows[level]]
        return PositiveDiagonal(self.gram[pos, pos].real)

    def q_matrix_direct(self, level, j=None) -> np.ndarray:
        """Same diagonal from raw operator products and the Haar sum."""
        t = self.build_corepresentation(level)
        j = t.level if j is None else half(j)
        return np.array([haar_state(t[i, j].H @ t[i, j], self.q).real for i in t.labels])

    def truncation_bound(self, level) -> float:
        return self.truncation_constant * self.q ** (2 * (self.N - 2 * float(level)))

    # -- backend contract ---------------------------------------------------
    @cached_property
    def blocks(self):
        return tuple((l, tuple(l - k for k in range(int(2 * l) + 1))) for l in self.levels)

    def basis_element(self, idx) -> LaurentOperator:
        level, i, j = idx
        self.check_level(half(level))
        return self.build_corepresentation(level)[i, j]

    def index(self, idx) -> int:
        level, i, j = idx
        try:
            key = CoeffIndex(half(level), half(i), half(j))
        except (ValueError, TypeError):
            raise TruncationError(f"{idx} is not a half-integer index") from None
        return super().index(key)

    def check_level(self, level) -> None:
        super().check_level(half(level))

    def unit(self):
        return LaurentOperator.identity(self.N)

    def element(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coefficients, got {coeffs.shape}")
        acc: dict[int, np.ndarray] = {}
        for c, t in zip(coeffs, self.basis_elements):
            if c == 0:
                continue
            for k, m in t.slices.items():
                if k in acc:
                    acc[k] += c * m
                else:
                    acc[k] = c * m
        return LaurentOperator(self.N, acc)

    def haar(self, x: LaurentOperator) -> complex:
        return haar_state(x, self.q)

    def mul(self, x, y):
        return x @ y

    def adjoint(self, x):
        return x.adjoint()

    def add(self, x, y):
        return x + y

    def scale(self, c, x):
        return x * c

    def zero(self):
        return LaurentOperator.zero(self.N)

    @property
    def max_degree(self) -> int:
        return int(2 * self.L)

    def gns_matrix(self, elements):
        k = self.max_degree
        cols = []
        for x in elements:
            lo, hi = x.window
            if x.slices and (lo < -k or hi > k):
                raise TruncationError(f"element has circle degree outside [-{k}, {k}]")
            cols.append(self._embed(x, -k, k))
        return np.stack(cols, axis=1)

    def modular_scale(self, idx, w) -> complex:
        _, i, j = idx
        return complex(np.exp(-2j * complex(w) * float(i + j) * np.log(self.q)))

    def sigma(self, x: LaurentOperator, w: complex) -> LaurentOperator:
        """Operator-side modular group ``(gamma gamma^*)^{iw} x (gamma gamma^*)^{-iw}``."""
        gg = np.diag((self.gamma @ self.gamma.H).slice(0)).real
        return x.conjugate_by(PositiveDiagonal(gg).power(1j * complex(w)))

    def lp_norm(self, x: LaurentOperator, params: InterpolationParams) -> float:
        """Izumi norm on ``B(l^2) (x) L^infty(T)``.

        ``p = 2`` is evaluated exactly by Parseval over the circle degrees;
        other exponents average ``||rho^a x(theta) rho^b||_p^p`` over an
        equispaced circle grid.
        """
        if not x.slices:
            return 0.0
        p = params.p
        if p == 2:
            a, b = params.side_exponents()
            left, right = self.density.power(a).real, self.density.power(b).real
            total = sum(np.sum(np.abs(left[:, None] * m * right[None, :]) ** 2) for m in x.slices.values())
            return float(np.sqrt(total))
        span = max(abs(k) for k in x.degrees)
        points = max(self.torus_points, 4 * (span + 1))
        thetas = 2 * np.pi * np.arange(points) / points
        vals = np.array(
            [weighted_lp_norm(x.at(t), self.density, params, check_state=False) for t in thetas]
        )
        if np.isinf(p):
            return float(vals.max())
        top = vals.max()
        if top == 0:
            return 0.0
        return float(top * np.mean((vals / top) ** p) ** (1.0 / p))

    def operator_norm(self, x: LaurentOperator, points: int = 256) -> float:
        """Sup over a circle grid of ``||x(theta)||``."""
        thetas = 2 * np.pi * np.arange(points) / points
        return max(schatten_norm(x.at(t), np.inf) for t in thetas)
