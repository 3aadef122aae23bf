"""Named experiments run by the CLI; each returns a list of result rows."""

from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .backend import Functional, GnsVector, QuantumGroupBackend
from .config import ConfigError, ExperimentConfig
from .fourier import (
    calibrate_dual_weight,
    conv_module_action,
    convolve,
    counit,
    f2,
    fourier_f1,
    fourier_f2_inverse_check,
    fourier_fp,
    izumi_transport,
    left_functional,
    zsweep,
)
from .groups import FiniteGroupBackend, cyclic, group_convolve, group_fourier, symmetric3
from .linalg import InterpolationParams, weighted_lp_norm
from .suq2 import SUq2Backend, haar_state

__all__ = ["Row", "EXPERIMENTS", "make_backend", "thread_count"]


@dataclass(frozen=True)
class Row:
    label: str
    metric: str
    value: float
    tolerance: float | None = None
    z: complex | None = None
    p: float | None = None
    n: int | None = None

    @property
    def passed(self) -> bool | None:
        if self.tolerance is None:
            return None
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def thread_count() -> int:
    env = os.environ.get("QGFT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def _map(fn: Callable, items):
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _rngs(cfg: ExperimentConfig, count: int, stream: int = 0):
    seq = np.random.SeedSequence([cfg.seed, stream])
    return [np.random.default_rng(s) for s in seq.spawn(count)]


def make_backend(cfg: ExperimentConfig) -> QuantumGroupBackend:
    if cfg.backend == "suq2":
        return SUq2Backend(cfg.q, cfg.trunc_n, cfg.tower_l)
    if cfg.backend == "s3":
        return symmetric3()
    m = re.fullmatch(r"cyclic\((\d+)\)", cfg.backend)
    if m:
        return cyclic(int(m.group(1)))
    raise ConfigError(f"unknown backend {cfg.backend!r}")


def _random_element(backend, rng):
    return backend.element(backend.random_coeffs(rng))


def _random_functional(backend, rng):
    return Functional(backend, backend.random_coeffs(rng))


# -- orthogonality -------------------------------------------------------------
def run_orthogonality(cfg: ExperimentConfig, backend) -> list[Row]:
    tol = cfg.tol("orthogonality")
    g = backend.gram
    diag = np.real(np.diag(g))
    off = np.abs(g - np.diag(np.diag(g)))
    rows = []
    for label, labels in backend.blocks:
        sl = backend.block_slices[label]
        d = len(labels)
        q = diag[sl].reshape(d, d)
        name = f"l={label}"
        rows.append(Row(name, "offdiag_residual", float(off[sl].max()), tol))
        rows.append(Row(name, "q_column_spread", float(np.ptp(q, axis=1).max()), tol))
        for k, i in enumerate(labels):
            rows.append(Row(f"{name},i={i}", "q_ii", float(q[k, 0])))
        if isinstance(backend, SUq2Backend):
            rows.extend(_suq2_q_rows(backend, label, q[:, 0], tol))
        else:
            expected = backend.group.order / d
            rows.append(Row(name, "q_vs_order_over_dim", float(np.abs(q - expected).max()), tol))
    if isinstance(backend, SUq2Backend):
        rows.extend(_haar_closed_form_rows(backend, cfg.tol("haar_closed_form")))
    return rows


def _suq2_q_rows(backend: SUq2Backend, label, q, tol) -> list[Row]:
    qq = backend.q
    rows = []
    name = f"l={label}"
    direct = backend.q_matrix_direct(label)
    rows.append(Row(name, "q_direct_mismatch", float(np.abs(direct - q).max()), tol))
    if label > 0:
        n = int(2 * label)
        top = (1 - qq**2) * qq ** (2 * n) / (1 - qq ** (2 * n + 2))
        bottom = (1 - qq**2) / (1 - qq ** (2 * n + 2))
        rows.append(Row(name, "q_endpoint_error", float(max(abs(q[0] - top), abs(q[-1] - bottom))), tol))
    # interior pattern: reported, never assumed
    i = np.array([float(label - k) for k in range(len(q))])
    pattern = (1 - qq**2) * qq ** (2 * (float(label) + i)) / (1 - qq ** (4 * float(label) + 2))
    rows.append(Row(name, "q_pattern_deviation", float(np.abs(pattern - q).max())))
    t = backend.build_corepresentation(label)
    rows.append(Row(name, "unitarity_error", t.unitarity_error(backend.N - int(2 * label) - 2), tol))
    return rows


def _haar_closed_form_rows(backend: SUq2Backend, tol) -> list[Row]:
    q, a = backend.q, backend.alpha
    rows = []
    for n in range(1, 6):
        an = a**n
        low = haar_state(an.H @ an, q).real
        high = haar_state(an @ an.H, q).real
        rows.append(Row(f"n={n}", "haar_astar_a_error", abs(low - (1 - q**2) * q ** (2 * n) / (1 - q ** (2 * n + 2))), tol, n=n))
        rows.append(Row(f"n={n}", "haar_a_astar_error", abs(high - (1 - q**2) / (1 - q ** (2 * n + 2))), tol, n=n))
    return rows


# -- plancherel ----------------------------------------------------------------
def run_plancherel(cfg: ExperimentConfig, backend) -> list[Row]:
    tol = cfg.tol("plancherel")
    weight = calibrate_dual_weight(backend, samples=cfg.samples, seed=cfg.seed, tol=tol)

    def sample(rng):
        x = _random_element(backend, rng)
        primal = GnsVector.of(backend, x).norm()
        dual = f2(backend, x, weight).gns_norm()
        return abs(primal - dual) / max(1.0, primal), fourier_f2_inverse_check(backend, x, weight) / max(1.0, primal)

    out = np.array(_map(sample, _rngs(cfg, cfg.samples)))
    rows = [
        Row("random", "isometry_defect", float(out[:, 0].max()), tol),
        Row("random", "roundtrip_residual", float(out[:, 1].max()), tol),
    ]
    for label, diag in weight.diagonals:
        for j, w in zip(backend.block_rows[label], diag.weights):
            rows.append(Row(f"l={label},j={j}", "dual_weight", float(w)))
    dtol = cfg.tol("dual_weight")
    if isinstance(backend, SUq2Backend) and backend.L >= Fraction(1, 2):
        expected = (1 + backend.q**2) / backend.q**2
        got = weight[Fraction(1, 2)].weights[-1]
        rows.append(Row("l=1/2,j=-1/2", "dual_weight_error", abs(got - expected), dtol))
    elif isinstance(backend, FiniteGroupBackend):
        order = backend.group.order
        err = max(np.abs(d.weights - d.dim / order).max() for _, d in weight.diagonals)
        rows.append(Row("all", "dual_weight_vs_dim_over_order", float(err), dtol))
    return rows


# -- hausdorff-young -----------------------------------------------------------
def run_hausdorff_young(cfg: ExperimentConfig, backend) -> list[Row]:
    tol = cfg.tol("hausdorff_young")
    weight = calibrate_dual_weight(backend, seed=cfg.seed)
    rngs = _rngs(cfg, cfg.samples)
    elements = [_random_element(backend, rng) for rng in rngs]
    rows = []
    for p in cfg.p_grid:
        params = InterpolationParams(-0.5, p)

        def sample(x):
            r = fourier_fp(backend, x, params, weight)
            return r.dual_norm - r.primal_norm, r.dual_norm / r.primal_norm

        out = np.array(_map(sample, elements))
        label = f"p={p:g}"
        rows.append(Row(label, "violations", float(np.sum(out[:, 0] > tol)), 0.0, p=p))
        rows.append(Row(label, "max_excess", float(max(out[:, 0].max(), 0.0)), tol, p=p))
        rows.append(Row(label, "max_ratio", float(out[:, 1].max()), p=p))
    return rows


# -- convolution ---------------------------------------------------------------
def run_convolution_check(cfg: ExperimentConfig, backend) -> list[Row]:
    tol = cfg.tol("convolution")
    mtol = cfg.tol("module_action")
    eps = counit(backend)
    weight = calibrate_dual_weight(backend, seed=cfg.seed)

    def pair(rng):
        om, th = _random_functional(backend, rng), _random_functional(backend, rng)
        hom = (fourier_f1(convolve(om, th)) - fourier_f1(om) @ fourier_f1(th)).blocks.max_abs()
        unit = max(np.abs(convolve(om, eps).values - om.values).max(), np.abs(convolve(eps, om).values - om.values).max())
        return hom, unit

    out = np.array(_map(pair, _rngs(cfg, cfg.samples)))
    rows = [
        Row("random", "homomorphism_residual", float(out[:, 0].max()), tol),
        Row("random", "counit_residual", float(out[:, 1].max()), tol),
    ]

    def module(rng):
        r = conv_module_action(_random_functional(backend, rng), _random_element(backend, rng), weight=weight)
        return r.residual_xi, r.residual_fourier

    mod = np.array(_map(module, _rngs(cfg, min(cfg.samples, 20), stream=1)))
    rows.append(Row("random", "module_xi_residual", float(mod[:, 0].max()), mtol))
    rows.append(Row("random", "module_fourier_residual", float(mod[:, 1].max()), mtol))
    if isinstance(backend, FiniteGroupBackend):
        rows.append(Row("exhaustive", "delta_convolution_residual", _delta_convolution_residual(backend), tol))
    return rows


def _delta_convolution_residual(backend: FiniteGroupBackend) -> float:
    n = backend.group.order
    worst = 0.0
    for s in range(n):
        for t in range(n):
            ds, dt = backend.delta(s), backend.delta(t)
            got = convolve(left_functional(backend, ds), left_functional(backend, dt))
            want = left_functional(backend, group_convolve(backend.group, ds, dt))
            worst = max(worst, float(np.abs(got.values - want.values).max()))
    return worst


# -- zsweep --------------------------------------------------------------------
def run_zsweep(cfg: ExperimentConfig, backend) -> list[Row]:
    if not isinstance(backend, SUq2Backend):
        raise ConfigError("zsweep needs the suq2 backend")
    weight = calibrate_dual_weight(backend, seed=cfg.seed)
    ln_q = abs(np.log(backend.q))
    rows = []

    def one(task):
        z, kind = task
        return z, kind, zsweep(backend, z, cfg.n_range, kind, weight=weight), zsweep(
            backend, z + 0.7j, cfg.n_range, kind, weight=weight
        )

    tasks = [(z, kind) for z in cfg.z_grid for kind in ("lowering", "raising")]
    for z, kind, res, shifted in _map(one, tasks):
        for n, r in zip(res.n, res.ratios):
            rows.append(Row(kind, "ratio", float(r), z=z, n=n))
        rows.append(Row(kind, "slope", res.slope, z=z))
        rows.append(Row(kind, "predicted_slope", res.predicted_slope, z=z))
        rows.append(Row(kind, "slope_error", abs(res.slope - res.predicted_slope), cfg.tol("zsweep_slope") * ln_q, z=z))
        rows.append(Row(kind, "slope_minus_doubled_rate", abs(res.slope - 2 * res.predicted_slope), z=z))
        rows.append(Row(kind, "imag_shift_defect", float(np.abs(res.ratios - shifted.ratios).max()), cfg.tol("zsweep_imag"), z=z))
        if abs(z.real + 0.5) < 1e-15:
            rows.append(Row(kind, "ratio_spread", float(np.ptp(res.ratios)), cfg.tol("zsweep_constant"), z=z))
    return rows


# -- transport -----------------------------------------------------------------
def run_transport_check(cfg: ExperimentConfig, backend) -> list[Row]:
    tol = cfg.tol("transport")
    p_choices = np.array(cfg.p_grid)

    def sample(rng):
        x = _random_element(backend, rng)
        zf = complex(rng.uniform(-0.5, 0.5), rng.uniform(-1, 1))
        zt = complex(rng.uniform(-0.5, 0.5), rng.uniform(-1, 1))
        p = float(rng.choice(p_choices))
        y = izumi_transport(backend, x, zf, zt, p)
        before = backend.lp_norm(x, InterpolationParams(zf, p))
        after = backend.lp_norm(y, InterpolationParams(zt, p))
        ident = 0.0
        if backend.tracial:
            ident = float(np.abs(backend.gns_matrix([backend.add(y, backend.scale(-1, x))])).max())
        return abs(before - after) / max(1.0, before), ident

    out = np.array(_map(sample, _rngs(cfg, cfg.samples)))
    rows = [Row("random", "norm_defect", float(out[:, 0].max()), tol)]
    if backend.tracial:
        rows.append(Row("random", "tracial_identity_defect", float(out[:, 1].max()), tol))
    return rows


# -- oracle --------------------------------------------------------------------
def run_oracle(cfg: ExperimentConfig, backend) -> list[Row]:
    tol = cfg.tol("oracle")
    if isinstance(backend, SUq2Backend):
        return _suq2_oracle(cfg, backend, tol)
    n = backend.group.order
    rows = []
    dft = 0.0
    for a in range(n):
        f = backend.delta(a)
        got = fourier_f1(left_functional(backend, f)).blocks
        dft = max(dft, (got - group_fourier(backend.irreps, f)).max_abs())
    rows.append(Row("deltas", "fourier_vs_group_fourier", dft, tol))
    rows.append(Row("exhaustive", "delta_convolution_residual", _delta_convolution_residual(backend), tol))
    weight = calibrate_dual_weight(backend, seed=cfg.seed)
    err = max(np.abs(d.weights - d.dim / n).max() for _, d in weight.diagonals)
    rows.append(Row("all", "dual_weight_vs_dim_over_order", float(err), tol))
    dims = backend.irreps.dims
    cyclic_group = backend.name.startswith("cyclic")
    planch, hy, zdep, fft = 0.0, 0.0, 0.0, 0.0
    for rng in _rngs(cfg, cfg.samples):
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        fh = group_fourier(backend.irreps, f)
        if cyclic_group:
            # characters exp(+2 pi i k x / n): the transform is n * ifft
            fft = max(fft, np.abs(np.array([m[0, 0] for _, m in fh]) - n * np.fft.ifft(f)).max())
        lhs = np.sum(np.abs(f) ** 2)
        rhs = sum(d * np.sum(np.abs(m) ** 2) for d, (_, m) in zip(dims, fh)) / n
        planch = max(planch, abs(lhs - rhs) / lhs)
        for p in cfg.p_grid:
            r = fourier_fp(backend, f, InterpolationParams(-0.5, p), weight)
            hy = max(hy, r.dual_norm - r.primal_norm)
            base = backend.lp_norm(f, InterpolationParams(-0.5, p))
            for z in (0.0, 0.5):
                zdep = max(zdep, abs(backend.lp_norm(f, InterpolationParams(z, p)) - base))
    rows.append(Row("random", "plancherel_constant_defect", float(planch), tol))
    rows.append(Row("random", "hausdorff_young_excess", float(max(hy, 0.0)), cfg.tol("hausdorff_young")))
    rows.append(Row("random", "z_dependence", float(zdep), 0.0))
    if cyclic_group:
        rows.append(Row("random", "dft_mismatch", float(fft), tol))
    return rows


def _suq2_oracle(cfg, backend: SUq2Backend, tol) -> list[Row]:
    rows = _haar_closed_form_rows(backend, cfg.tol("haar_closed_form"))
    otol = cfg.tol("orthogonality")
    a, g = backend.alpha, backend.gamma
    keep = backend.N - 1
    rel = [
        a.H @ a + g.H @ g,
        a @ a.H + g @ g.H * backend.q**2,
    ]
    one = np.eye(backend.N)
    err = max(np.abs(r.slice(0)[:keep, :keep] - one[:keep, :keep]).max() for r in rel)
    err = max(err, (g @ a * backend.q - a @ g).max_abs())
    rows.append(Row("generators", "relation_error", float(err), tol))
    worst = 0.0
    for label in backend.levels[: min(len(backend.levels), 5)]:
        for idx in backend.basis:
            if idx.level != label:
                continue
            t = backend.basis_element(idx)
            for w in (0.3, 1.7):
                diff = backend.sigma(t, w) - t * backend.modular_scale(idx, w)
                worst = max(worst, diff.max_abs())
    rows.append(Row("l<=2", "modular_eigen_error", worst, otol))
    for label in backend.levels:
        d = backend.q_matrix(label).weights
        rows.append(Row(f"l={label}", "q_direct_mismatch", float(np.abs(backend.q_matrix_direct(label) - d).max()), otol))
    return rows


EXPERIMENTS = {
    "orthogonality": run_orthogonality,
    "plancherel": run_plancherel,
    "hausdorff-young": run_hausdorff_young,
    "convolution-check": run_convolution_check,
    "zsweep": run_zsweep,
    "transport-check": run_transport_check,
    "oracle": run_oracle,
}
