"""Fourier transforms, convolution and L^p estimates over any backend.

Everything is expressed in Peter-Weyl coordinates: a normal functional is
the vector of its values on the coefficients ``t^{(l)}_{ij}``, its Fourier
transform is the block matrix of those values, and GNS vectors are
coefficient vectors measured with the Haar Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .backend import (
    BackendMismatchError,
    ConsistencyError,
    Functional,
    GnsVector,
    QuantumGroupBackend,
    TruncationError,
)
from .linalg import (
    BlockDiagonal,
    InterpolationParams,
    InvalidExponentError,
    PositiveDiagonal,
    schatten_norm,
    weighted_lp_norm,
)

__all__ = [
    "DualWeight",
    "DualElement",
    "FpResult",
    "ModuleAction",
    "ZSweepResult",
    "left_functional",
    "right_functional",
    "xi",
    "fourier_f1",
    "calibrate_dual_weight",
    "dual_weight",
    "fourier_fp",
    "f2",
    "f2_inverse",
    "fourier_f2_inverse_check",
    "counit",
    "convolve",
    "conv_module_action",
    "dual_action",
    "dual_action_matrix",
    "gns_operator_norm",
    "modular_conjugation",
    "zsweep",
    "izumi_transport",
]

CALIBRATION_TOL = 1e-8


# -- functionals and GNS vectors ------------------------------------------------
def left_functional(backend: QuantumGroupBackend, x) -> Functional:
    """``_x phi = phi( . x)`` on the coefficient basis."""
    return Functional(backend, backend.left_values(x))


def right_functional(backend: QuantumGroupBackend, x) -> Functional:
    """``phi_x = phi(x . )`` on the coefficient basis."""
    return Functional(backend, backend.right_values(x))


def xi(omega: Functional) -> GnsVector:
    """The vector ``xi(omega)`` with ``<xi(omega), Lambda(y)> = omega(y*)``.

    Solves ``G c = K omega`` where ``G`` is the Haar Gram matrix and ``K`` the
    coefficient involution table, so that ``omega(t_m^*) = (K omega)_m``.
    """
    b = omega.backend
    return GnsVector(b, b._gram_inverse @ (b.involution @ omega.values))


def modular_conjugation(vec: GnsVector) -> GnsVector:
    """``J Lambda(x) = Lambda(sigma_{i/2}(x)^*)``."""
    b = vec.backend
    shifted = b.modular_coeffs(vec.coeffs, 0.5j)
    return GnsVector(b, b.involution.T @ np.conj(shifted))


# -- dual side -----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class DualWeight:
    """Diagonal densities ``D^{(l)}`` of the dual Haar weight ``tr(D y)``.

    The diagonal is indexed by the column label ``j`` of each block.
    """

    backend: QuantumGroupBackend
    diagonals: tuple  # ((label, PositiveDiagonal), ...)

    def __getitem__(self, label) -> PositiveDiagonal:
        for l, d in self.diagonals:
            if l == label:
                return d
        raise TruncationError(f"no dual weight at level {label}")

    def column_weights(self) -> np.ndarray:
        """``D_j`` repeated over each basis position ``(l, i, j)``."""
        return np.concatenate([np.tile(d.weights, d.dim) for _, d in self.diagonals])

    def power(self, s: complex) -> BlockDiagonal:
        return BlockDiagonal([(l, np.diag(d.power(s))) for l, d in self.diagonals])


class DualElement:
    """Element of the truncated dual algebra, tied to a dual weight."""

    __slots__ = ("blocks", "weight")

    def __init__(self, blocks: BlockDiagonal, weight: DualWeight | None = None):
        self.blocks = blocks
        self.weight = weight

    @property
    def backend(self):
        return None if self.weight is None else self.weight.backend

    def _need_weight(self) -> DualWeight:
        if self.weight is None:
            raise ValueError("a dual weight is required for norms")
        return self.weight

    def values(self) -> np.ndarray:
        return np.concatenate([m.ravel() for _, m in self.blocks])

    def __matmul__(self, other: "DualElement") -> "DualElement":
        return DualElement(self.blocks @ other.blocks, self.weight or other.weight)

    def __sub__(self, other: "DualElement") -> "DualElement":
        return DualElement(self.blocks - other.blocks, self.weight or other.weight)

    def gns_norm(self) -> float:
        """``phi-hat(y* y) ** 1/2``."""
        d = self._need_weight().column_weights()
        return float(np.sqrt(np.sum(d * np.abs(self.values()) ** 2)))

    def lp_norm(self, p: float) -> float:
        """Izumi norm at ``z = -1/2`` blockwise, then l^p over the blocks."""
        w = self._need_weight()
        params = InterpolationParams(-0.5, p)
        norms = np.array(
            [weighted_lp_norm(m, w[l], params, check_state=False) for l, m in self.blocks]
        )
        if np.isinf(params.p):
            return float(norms.max(initial=0.0))
        return float(np.sum(norms**params.p) ** (1.0 / params.p))

    def operator_norm(self) -> float:
        return self.blocks.operator_norm()

    def modular(self, w: complex) -> "DualElement":
        """``sigma-hat_w(y) = D^{iw} y D^{-iw}``."""
        wt = self._need_weight()
        left, right = wt.power(1j * w), wt.power(-1j * w)
        return DualElement(left @ self.blocks @ right, wt)

    def __repr__(self):
        return f"DualElement({self.blocks!r})"


def fourier_f1(omega: Functional, weight: DualWeight | None = None) -> DualElement:
    """``lambda(omega)``: block ``l`` holds ``omega(t^{(l)}_{ij})``."""
    if weight is not None and weight.backend is not omega.backend:
        raise BackendMismatchError("dual weight belongs to a different backend")
    return DualElement(omega.backend.blocks_from_values(omega.values), weight)


def calibrate_dual_weight(
    backend: QuantumGroupBackend,
    *,
    samples: int = 200,
    seed: int = 0,
    tol: float = CALIBRATION_TOL,
) -> DualWeight:
    """Fix ``D`` so that ``x -> F1(_x phi)`` is isometric.

    One equation per basis element ``t_m``:
    ``sum_{l,i,j} D_j |F1(_{t_m} phi)_{ij}|^2 = ||Lambda(t_m)||^2``.
    The least-squares solution must be exact, positive, and isometric on
    ``samples`` random combinations; otherwise ``ConsistencyError``.
    """
    # column m holds the values of _{t_m} phi
    vals = backend._adjoint_embedding_h @ backend._embedding
    target = np.real(np.diag(backend.gram))
    unknowns = [(l, j) for l, rows in backend.blocks for j in rows]
    col = {key: k for k, key in enumerate(unknowns)}
    design = np.zeros((backend.dim, len(unknowns)))
    for n, idx in enumerate(backend.basis):
        design[:, col[(idx.level, idx.j)]] += np.abs(vals[n]) ** 2
    sol, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = np.abs(design @ sol - target).max()
    if resid > tol * max(1.0, np.abs(target).max()):
        raise ConsistencyError(f"dual weight system is inconsistent (residual {resid:.3e})")
    if np.any(sol <= 0):
        raise ConsistencyError("calibrated dual weight is not positive")
    diagonals = []
    for l, rows in backend.blocks:
        diagonals.append((l, PositiveDiagonal(np.array([sol[col[(l, j)]] for j in rows]))))
    weight = DualWeight(backend, tuple(diagonals))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        c = backend.random_coeffs(rng)
        primal = GnsVector(backend, c).norm()
        dual = DualElement(backend.blocks_from_values(vals @ c), weight).gns_norm()
        if abs(primal - dual) > tol * max(1.0, primal):
            raise ConsistencyError(f"Plancherel fails after calibration ({primal} vs {dual})")
    return weight


@lru_cache(maxsize=None)
def dual_weight(backend: QuantumGroupBackend) -> DualWeight:
    """Calibrated dual weight, computed once per backend instance."""
    return calibrate_dual_weight(backend)


# -- F2, Fp --------------------------------------------------------------------
def f2(backend: QuantumGroupBackend, x, weight: DualWeight | None = None) -> DualElement:
    """``Lambda(x) -> Lambda-hat(F1(_x phi))``."""
    return fourier_f1(left_functional(backend, x), weight or dual_weight(backend))


def f2_inverse(y: DualElement) -> GnsVector:
    """Inverse Plancherel map ``Lambda(sum_{l,i,j} D_j y_ij (t_ij)^*)``."""
    w = y._need_weight()
    b = w.backend
    scaled = w.column_weights() * y.values()
    return GnsVector(b, b.involution.T @ scaled)


def fourier_f2_inverse_check(backend: QuantumGroupBackend, x, weight: DualWeight | None = None) -> float:
    """Norm of ``F2^-1 F2 Lambda(x) - Lambda(x)``, measured by direct GNS embedding."""
    back = f2_inverse(f2(backend, x, weight)).element()
    diff = backend.add(back, backend.scale(-1.0, x))
    return float(np.linalg.norm(backend.gns_matrix([diff])[:, 0]))


class FpResult(NamedTuple):
    transform: DualElement
    primal_norm: float
    dual_norm: float


def fourier_fp(
    backend: QuantumGroupBackend,
    x,
    params: InterpolationParams,
    weight: DualWeight | None = None,
) -> FpResult:
    """``F_p(x)`` with both sides of the Hausdorff-Young inequality.

    The primal norm is the Izumi ``L^p`` norm of ``x`` at ``z = -1/2``; the
    dual norm is the ``L^q`` norm of ``F1(_x phi)`` for the dual weight.
    Only ``p`` is read from ``params``.
    """
    p = params.p
    if p > 2:
        raise InvalidExponentError(f"F_p is defined for 1 <= p <= 2, got {p}")
    y = f2(backend, x, weight)
    primal = backend.lp_norm(x, InterpolationParams(-0.5, p))
    return FpResult(y, primal, y.lp_norm(params.q))


# -- convolution -----------------------------------------------------------------
def counit(backend: QuantumGroupBackend) -> Functional:
    """``epsilon(t_ij) = delta_ij``."""
    return Functional(backend, [1.0 if idx.i == idx.j else 0.0 for idx in backend.basis])


def convolve(omega: Functional, theta: Functional) -> Functional:
    """``(omega (x) theta) o Delta`` evaluated through the coproduct on the basis."""
    b = omega.backend
    if theta.backend is not b:
        raise BackendMismatchError("functionals live on different backends")
    out = np.zeros(b.dim, dtype=complex)
    for n, idx in enumerate(b.basis):
        out[n] = sum(
            omega.values[b.position[left]] * theta.values[b.position[right]]
            for left, right in b.coproduct_on_basis(idx)
        )
    return Functional(b, out)


def dual_action(omega: Functional, vec: GnsVector, weight: DualWeight | None = None) -> GnsVector:
    """``lambda(omega) Lambda(x)``: left multiply by ``F1(omega)`` in Plancherel coordinates."""
    b = omega.backend
    if vec.backend is not b:
        raise BackendMismatchError("vector and functional live on different backends")
    weight = weight or dual_weight(b)
    y = DualElement(b.blocks_from_values(b._adjoint_embedding_h @ (b._embedding @ vec.coeffs)), weight)
    return f2_inverse(fourier_f1(omega, weight) @ y)


def dual_action_matrix(omega: Functional, weight: DualWeight | None = None) -> np.ndarray:
    """Matrix of ``lambda(omega)`` on coefficient vectors."""
    b = omega.backend
    eye = np.eye(b.dim)
    return np.stack([dual_action(omega, GnsVector(b, e), weight).coeffs for e in eye], axis=1)


def gns_operator_norm(backend: QuantumGroupBackend, matrix: np.ndarray) -> float:
    """Operator norm of a coefficient-space matrix for the Gram inner product."""
    w, v = np.linalg.eigh(backend.gram)
    root = (v * np.sqrt(w)) @ v.conj().T
    inv_root = (v / np.sqrt(w)) @ v.conj().T
    return schatten_norm(root @ matrix @ inv_root, np.inf)


class ModuleAction(NamedTuple):
    functional: Functional
    residual_xi: float
    residual_fourier: float


def conv_module_action(
    omega: Functional,
    x,
    params: InterpolationParams | None = None,
    weight: DualWeight | None = None,
) -> ModuleAction:
    """``omega * (_x phi)`` together with its two compatibility residuals.

    ``residual_xi`` compares ``xi(omega * _x phi)`` with ``lambda(omega) Lambda(x)``;
    ``residual_fourier`` compares ``F1(omega * _x phi)`` with ``F1(omega) F1(_x phi)``.
    ``params`` is accepted for symmetry with the L^p module action; at finite
    truncation every element lies in the common dense subspace so it does not
    change the result.
    """
    b = omega.backend
    weight = weight or dual_weight(b)
    xphi = left_functional(b, x)
    result = convolve(omega, xphi)
    lam = dual_action(omega, GnsVector.of(b, x), weight)
    res_xi = (xi(result) - lam).norm()
    res_f = (fourier_f1(result) - fourier_f1(omega) @ fourier_f1(xphi)).blocks.max_abs()
    return ModuleAction(result, res_xi, res_f)


# -- boundedness sweep -------------------------------------------------------------
class ZSweepResult(NamedTuple):
    n: tuple
    ratios: np.ndarray
    slope: float
    predicted_slope: float


def _sweep_index(backend, n: int, kind: str):
    from fractions import Fraction

    level = Fraction(n, 2)
    if kind == "lowering":
        return (level, level, level)
    if kind == "raising":
        return (level, -level, -level)
    raise ValueError(f"element kind must be 'lowering' or 'raising', got {kind!r}")


def zsweep(
    backend: QuantumGroupBackend,
    z: complex,
    n_range: Sequence[int],
    element_kind: str = "lowering",
    *,
    z_prime: complex = -0.5,
    weight: DualWeight | None = None,
) -> ZSweepResult:
    """Growth of ``U_(z') F2 U_(z)^*`` on the vectors ``alpha^n`` or ``(alpha^*)^n``.

    For each ``n`` the input is the unit vector along
    ``Lambda(sigma_{-i(z+1/2)/2}(x_n))``; ``U_(z)^*`` undoes that twist,
    ``F2`` is taken for the ``z``-twisted functional
    ``_{sigma_{-i(z+1/2)}(a)} phi`` and ``U_(z')`` applies
    ``sigma-hat_{-i(z'+1/2)/2}`` on the dual side. ``r_n`` is the norm of the
    output, and ``slope`` the least-squares slope of ``log r_n`` against
    ``n``. The exact rate is ``r_n = q^{-n (Re z + 1/2)}`` for lowering and
    the reciprocal for raising, reported as ``predicted_slope``.
    """
    weight = weight or dual_weight(backend)
    z = complex(z)
    ns = tuple(int(n) for n in n_range)
    if not ns:
        raise ValueError("n_range is empty")
    ratios = []
    for n in ns:
        if n < 1 or n > 2 * backend.blocks[-1][0]:
            raise TruncationError(f"n={n} exceeds the corepresentation tower")
        m = backend.index(_sweep_index(backend, n, element_kind))
        e = np.zeros(backend.dim, dtype=complex)
        e[m] = 1.0
        vin = GnsVector(backend, backend.modular_coeffs(e, -0.5j * (z + 0.5)))
        vin = vin * (1.0 / vin.norm())
        a = backend.modular_coeffs(vin.coeffs, 0.5j * (z + 0.5))
        twisted = backend.element(backend.modular_coeffs(a, -1j * (z + 0.5)))
        y = fourier_f1(left_functional(backend, twisted), weight)
        y = y.modular(-0.5j * (complex(z_prime) + 0.5))
        out = xi(Functional(backend, y.values()))
        ratios.append(out.norm() / vin.norm())
    ratios = np.array(ratios)
    slope = float(np.polyfit(ns, np.log(ratios), 1)[0]) if len(ns) > 1 else 0.0
    q = getattr(backend, "q", None)
    rate = -(z.real + 0.5) * np.log(q) if q is not None else 0.0
    predicted = rate if element_kind == "lowering" else -rate
    return ZSweepResult(ns, ratios, slope, float(predicted))


# -- transport -----------------------------------------------------------------------
def izumi_transport(backend: QuantumGroupBackend, x, from_z: complex, to_z: complex, p: float):
    """Isometry ``L^p_(from_z) -> L^p_(to_z)``, ``a -> sigma_{i(r'-r)/p - (s'-s)}(a)``.

    ``r, s`` are the real and imaginary parts of ``from_z`` and ``r', s'``
    those of ``to_z``.
    """
    params = InterpolationParams(to_z, p)
    a, b = complex(from_z), complex(to_z)
    shift = 0.0 if np.isinf(params.p) else (b.real - a.real) / params.p
    w = 1j * shift - (b.imag - a.imag)
    return backend.element(backend.modular_coeffs(backend.expand(x), w))
