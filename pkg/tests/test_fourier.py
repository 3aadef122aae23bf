from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgft import (
    BackendMismatchError,
    Functional,
    GnsVector,
    InterpolationParams,
    InvalidExponentError,
    TruncationError,
    group_convolve,
    group_fourier,
)
from qgft.fourier import (
    calibrate_dual_weight,
    conv_module_action,
    convolve,
    counit,
    dual_action_matrix,
    dual_weight,
    f2,
    f2_inverse,
    fourier_f1,
    fourier_f2_inverse_check,
    fourier_fp,
    gns_operator_norm,
    izumi_transport,
    left_functional,
    right_functional,
    xi,
    zsweep,
)

H = Fraction(1, 2)
Q = 0.5
P_GRID = [1.0, 4 / 3, 1.5, 2.0]

# x = alpha + alpha^*, p = 4/3, q = 1/2, N = 64
GOLDEN_PRIMAL = 0.9692721064155339
GOLDEN_DUAL = 0.8491821094987803


def random_functional(backend, rng):
    return Functional(backend, backend.random_coeffs(rng))


def random_element(backend, rng):
    return backend.element(backend.random_coeffs(rng))


class TestFunctionals:
    def test_unit_gives_haar(self, suq2):
        w = left_functional(suq2, suq2.unit())
        assert w[(0, 0, 0)] == pytest.approx(1 - Q**128)
        assert np.abs(w.values[1:]).max() < 1e-13

    @pytest.mark.parametrize("n", range(1, 7))
    def test_alpha_power_single_level(self, suq2, n):
        w = left_functional(suq2, suq2.alpha**n)
        level = Fraction(n, 2)
        sl = suq2.block_slices[level]
        outside = np.delete(w.values, np.arange(sl.start, sl.stop))
        assert np.abs(outside).max() < 1e-13
        # only the (-l, -l) entry survives: haar((alpha^*)^n alpha^n)
        assert w[(level, -level, -level)] == pytest.approx((1 - Q**2) * Q ** (2 * n) / (1 - Q ** (2 * n + 2)), abs=1e-12)

    def test_group_density_is_pointwise(self, s3, rng):
        f = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        w = left_functional(s3, f)
        for idx in s3.basis:
            assert w[idx] == pytest.approx(np.sum(s3.basis_element(idx) * f))

    @pytest.mark.parametrize("name", ["suq2", "s3"])
    def test_conjugation_law(self, name, request, rng):
        b = request.getfixturevalue(name)
        x = random_element(b, rng)
        lhs = right_functional(b, b.adjoint(x)).values
        rhs = left_functional(b, x).conj().values
        assert np.allclose(lhs, rhs, atol=1e-12)


class TestXi:
    def test_alpha(self, suq2):
        v = xi(left_functional(suq2, suq2.alpha))
        assert (v - GnsVector.of(suq2, suq2.alpha)).norm() < 1e-12

    def test_zero(self, suq2):
        assert xi(Functional.zero(suq2)).norm() == 0

    def test_random_elements(self, suq2, rng):
        c = suq2.random_coeffs(rng)
        v = xi(left_functional(suq2, suq2.element(c)))
        assert np.allclose(v.coeffs, c, atol=1e-9)

    def test_s3_brute_force(self, s3, rng):
        # <xi, Lambda(delta_y)> = xi(y) must equal omega(delta_y^*) = omega(delta_y) for all y
        w = random_functional(s3, rng)
        basis = np.stack([s3.basis_element(idx) for idx in s3.basis])  # row m: t_m on G
        omega_on_delta = np.linalg.solve(basis, w.values)
        assert np.allclose(xi(w).element(), omega_on_delta, atol=1e-12)


class TestF1:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_alpha_power(self, suq2, n):
        y = fourier_f1(left_functional(suq2, suq2.alpha**n))
        level = Fraction(n, 2)
        block = y.blocks[level]
        expected = np.zeros_like(block)
        expected[-1, -1] = suq2.haar((suq2.alpha.H**n) @ suq2.alpha**n)
        assert np.abs(block - expected).max() < 1e-12
        assert all(np.abs(m).max() < 1e-12 for l, m in y.blocks if l != level)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_alpha_star_power(self, suq2, n):
        y = fourier_f1(left_functional(suq2, suq2.alpha.H**n))
        block = y.blocks[Fraction(n, 2)]
        expected = np.zeros_like(block)
        expected[0, 0] = (1 - Q**2) / (1 - Q ** (2 * n + 2))
        assert np.abs(block - expected).max() < 1e-12

    @pytest.mark.parametrize("name", ["s3", "c8"])
    def test_matches_group_fourier(self, name, request):
        b = request.getfixturevalue(name)
        for a in range(b.group.order):
            w = Functional(b, [b.basis_element(idx)[a] for idx in b.basis])
            got = fourier_f1(w).blocks
            assert (got - group_fourier(b.irreps, b.delta(a))).max_abs() < 1e-14

    def test_operator_norm_bounded_by_functional_norm(self, s3, rng):
        # ||F1(_f phi)|| <= ||_f phi|| = sum |f|
        for _ in range(20):
            f = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            assert fourier_f1(left_functional(s3, f)).operator_norm() <= np.abs(f).sum() + 1e-12

    def test_weight_from_other_backend(self, s3, c8):
        with pytest.raises(BackendMismatchError):
            fourier_f1(counit(s3), dual_weight(c8))


class TestCalibration:
    def test_fundamental_level(self, suq2):
        d = dual_weight(suq2)[H].weights
        assert d[1] == pytest.approx(5.0, abs=1e-8)
        assert d[0] == pytest.approx(1.25, abs=1e-8)

    def test_trivial_level(self, suq2):
        assert dual_weight(suq2)[0].weights == pytest.approx([1 / (1 - Q**128)], abs=1e-12)

    def test_reciprocal_q(self, suq2):
        w = dual_weight(suq2)
        for l in suq2.levels:
            assert np.allclose(w[l].weights, 1 / suq2.q_matrix(l).weights[::-1], rtol=1e-9)

    @pytest.mark.parametrize("name", ["s3", "c8"])
    def test_group_weights(self, name, request):
        b = request.getfixturevalue(name)
        w = dual_weight(b)
        for (label, d) in zip(range(len(b.irreps.dims)), b.irreps.dims):
            assert np.allclose(w[label].weights, d / b.group.order, atol=1e-14)

    def test_group_weight_recovers_value_at_identity(self, s3, rng):
        # phi-hat(lambda(f)) = f(e)
        w = dual_weight(s3)
        f = rng.standard_normal(6)
        fh = group_fourier(s3.irreps, f)
        total = sum(np.sum(w[l].weights * np.diag(m)) for l, m in fh)
        assert total == pytest.approx(f[s3.group.identity])

    def test_calibration_is_isometric(self, any_backend, rng):
        w = calibrate_dual_weight(any_backend, samples=50, seed=3)
        for _ in range(10):
            x = random_element(any_backend, rng)
            primal = np.linalg.norm(any_backend.gns_matrix([x]))
            assert f2(any_backend, x, w).gns_norm() == pytest.approx(primal, rel=1e-10)

    def test_missing_level(self, suq2):
        with pytest.raises(TruncationError):
            dual_weight(suq2)[Fraction(7, 2)]


class TestFp:
    @pytest.mark.parametrize("name", ["suq2", "s3", "c8"])
    def test_plancherel_equality(self, name, request, rng):
        b = request.getfixturevalue(name)
        for _ in range(5):
            r = fourier_fp(b, random_element(b, rng), InterpolationParams(-0.5, 2))
            assert r.dual_norm == pytest.approx(r.primal_norm, rel=1e-8)

    @pytest.mark.parametrize("name", ["suq2", "s3"])
    def test_p_one_is_operator_norm(self, name, request, rng):
        b = request.getfixturevalue(name)
        x = random_element(b, rng)
        r = fourier_fp(b, x, InterpolationParams(-0.5, 1))
        assert r.dual_norm == pytest.approx(r.transform.operator_norm(), rel=1e-12)
        assert r.dual_norm <= r.primal_norm + 1e-8

    def test_golden_four_thirds(self, suq2):
        x = suq2.alpha + suq2.alpha.H
        r = fourier_fp(suq2, x, InterpolationParams(-0.5, 4 / 3))
        assert r.primal_norm == pytest.approx(GOLDEN_PRIMAL, rel=1e-9)
        assert r.dual_norm == pytest.approx(GOLDEN_DUAL, rel=1e-12)
        assert r.dual_norm <= r.primal_norm

    def test_golden_by_independent_path(self):
        # dual: F1 = diag(0.8, 0.2) on level 1/2 with weights (1.25, 5), q = 4
        assert GOLDEN_DUAL == pytest.approx((1.25 * 0.8**4 + 5 * 0.2**4) ** 0.25, rel=1e-12)
        # primal: alpha + alpha^* is degree zero, so at z = -1/2 the norm is ||x rho^{1/p}||_p
        n = 64
        r = np.arange(n)
        x = np.zeros((n, n))
        x[r[:-1], r[1:]] = np.sqrt(1 - Q ** (2 * r[1:]))
        x = x + x.T
        rho = (1 - Q**2) * Q ** (2 * r)
        s = np.linalg.svd(x * rho[None, :] ** 0.75, compute_uv=False)
        assert GOLDEN_PRIMAL == pytest.approx(np.sum(s ** (4 / 3)) ** 0.75, rel=1e-12)

    def test_rejects_large_p(self, s3):
        with pytest.raises(InvalidExponentError):
            fourier_fp(s3, s3.unit(), InterpolationParams(-0.5, 3))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(P_GRID))
    def test_hausdorff_young_property(self, seed, p):
        from qgft import symmetric3

        b = symmetric3()
        x = random_element(b, np.random.default_rng(seed))
        r = fourier_fp(b, x, InterpolationParams(-0.5, p))
        assert r.dual_norm <= r.primal_norm + 1e-8


class TestF2Inverse:
    def test_unit(self, suq2):
        assert fourier_f2_inverse_check(suq2, suq2.unit()) < 1e-12

    def test_alpha_squared(self, suq2):
        assert fourier_f2_inverse_check(suq2, suq2.alpha @ suq2.alpha) <= 1e-8

    def test_random(self, any_backend, rng):
        for _ in range(5):
            assert fourier_f2_inverse_check(any_backend, random_element(any_backend, rng)) <= 1e-8

    def test_inverse_is_left_and_right(self, s3, rng):
        w = dual_weight(s3)
        y = f2(s3, random_element(s3, rng))
        back = f2(s3, f2_inverse(y).element(), w)
        assert (back - y).blocks.max_abs() < 1e-12


class TestConvolution:
    def test_counit_is_unit(self, any_backend, rng):
        w = random_functional(any_backend, rng)
        eps = counit(any_backend)
        assert np.allclose(convolve(w, eps).values, w.values, atol=1e-14)
        assert np.allclose(convolve(eps, w).values, w.values, atol=1e-14)

    def test_homomorphism(self, any_backend, rng):
        for _ in range(10):
            a, b = random_functional(any_backend, rng), random_functional(any_backend, rng)
            diff = fourier_f1(convolve(a, b)).blocks - fourier_f1(a).blocks @ fourier_f1(b).blocks
            assert diff.max_abs() <= 1e-12

    def test_associative(self, suq2, rng):
        a, b, c = (random_functional(suq2, rng) for _ in range(3))
        lhs = convolve(convolve(a, b), c).values
        rhs = convolve(a, convolve(b, c)).values
        assert np.allclose(lhs, rhs, atol=1e-10)

    def test_s3_brute_force(self, s3):
        # functional of a measure mu on S3: omega(f) = sum_x mu(x) f(x)
        def as_functional(mu):
            return Functional(s3, [np.sum(mu * s3.basis_element(idx)) for idx in s3.basis])

        for a in range(6):
            for c in range(6):
                got = convolve(as_functional(s3.delta(a)), as_functional(s3.delta(c)))
                want = as_functional(group_convolve(s3.group, s3.delta(a), s3.delta(c)))
                assert np.allclose(got.values, want.values, atol=1e-14)

    def test_mismatch(self, s3, c8):
        with pytest.raises(BackendMismatchError):
            convolve(counit(s3), counit(c8))


class TestModuleAction:
    def test_counit_returns_left_functional(self, suq2, rng):
        x = random_element(suq2, rng)
        m = conv_module_action(counit(suq2), x)
        assert np.allclose(m.functional.values, left_functional(suq2, x).values, atol=1e-12)

    def test_fundamental_level_on_alpha(self, suq2, rng):
        vals = np.zeros(suq2.dim, dtype=complex)
        sl = suq2.block_slices[H]
        vals[sl] = rng.standard_normal(4)
        m = conv_module_action(Functional(suq2, vals), suq2.alpha)
        assert m.residual_fourier <= 1e-12
        assert m.residual_xi <= 1e-8
        # result lives on level 1/2 only
        assert np.abs(np.delete(m.functional.values, np.arange(sl.start, sl.stop))).max() < 1e-12

    @pytest.mark.parametrize("name", ["suq2", "s3", "c8"])
    def test_random(self, name, request, rng):
        b = request.getfixturevalue(name)
        for _ in range(3):
            m = conv_module_action(random_functional(b, rng), random_element(b, rng))
            assert m.residual_xi <= 1e-8 * max(1.0, np.linalg.norm(m.functional.values))
            assert m.residual_fourier <= 1e-12 * max(1.0, np.linalg.norm(m.functional.values))

    def test_s3_three_ways(self, s3, rng):
        w = random_functional(s3, rng)
        f = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        m = conv_module_action(w, f)
        # brute force: omega is a measure mu, _f phi is the measure f; convolution of measures
        basis = np.stack([s3.basis_element(idx) for idx in s3.basis])
        mu = np.linalg.solve(basis, w.values)
        brute = group_convolve(s3.group, mu, f)
        assert np.allclose(basis @ brute, m.functional.values, atol=1e-12)


class TestDualAction:
    @pytest.mark.parametrize("name", ["small_suq2", "s3"])
    def test_multiplicative(self, name, request, rng):
        b = request.getfixturevalue(name)
        a, c = random_functional(b, rng), random_functional(b, rng)
        lhs = dual_action_matrix(convolve(a, c))
        rhs = dual_action_matrix(a) @ dual_action_matrix(c)
        assert np.abs(lhs - rhs).max() <= 1e-9 * np.abs(lhs).max()

    @pytest.mark.parametrize("name", ["small_suq2", "s3"])
    def test_norm_is_block_sup(self, name, request, rng):
        b = request.getfixturevalue(name)
        w = random_functional(b, rng)
        assert gns_operator_norm(b, dual_action_matrix(w)) == pytest.approx(fourier_f1(w).operator_norm(), rel=1e-9)


class TestZSweep:
    def test_bounded_at_critical_line(self, suq2):
        for kind in ("lowering", "raising"):
            r = zsweep(suq2, -0.5, range(1, 6), kind)
            assert np.ptp(r.ratios) <= 1e-8
            assert abs(r.slope) < 1e-8

    @pytest.mark.parametrize("z", [-1, -0.75, -0.25, 0, 0.5])
    def test_rate(self, suq2, z):
        # r_n = q^{-n (Re z + 1/2)} exactly, so the fit is exact
        r = zsweep(suq2, z, range(1, 6))
        expected = Q ** (-(z + 0.5) * np.arange(1, 6))
        assert np.allclose(r.ratios / r.ratios[0], expected / expected[0], rtol=1e-8)
        assert r.slope == pytest.approx(r.predicted_slope, abs=0.01 * np.log(2))

    def test_z_zero(self, suq2):
        r = zsweep(suq2, 0, range(1, 6))
        assert r.predicted_slope == pytest.approx(0.5 * np.log(2))

    def test_raising_mirrors(self, suq2):
        r = zsweep(suq2, -1, range(1, 6), "raising")
        assert r.slope == pytest.approx(0.5 * np.log(2), rel=1e-6)
        assert r.slope > 0

    def test_imaginary_part_irrelevant(self, suq2):
        for z in (-1, 0):
            a = zsweep(suq2, z, range(1, 6)).ratios
            b = zsweep(suq2, z + 0.7j, range(1, 6)).ratios
            assert np.abs(a - b).max() <= 1e-10

    def test_errors(self, suq2):
        with pytest.raises(TruncationError):
            zsweep(suq2, 0, [7])
        with pytest.raises(ValueError):
            zsweep(suq2, 0, [1, 2], "sideways")
        with pytest.raises(ValueError):
            zsweep(suq2, 0, [])


class TestTransport:
    def test_identity(self, suq2, rng):
        x = random_element(suq2, rng)
        y = izumi_transport(suq2, x, 0.2 + 0.1j, 0.2 + 0.1j, 1.5)
        assert (y - x).max_abs() < 1e-10

    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("p", [1.0, 4 / 3, 2.0])
    def test_alpha_power_scaling(self, suq2, n, p):
        x = suq2.alpha**n
        y = izumi_transport(suq2, x, -0.5, 0.5, p)
        # sigma_{i/p}(alpha^n) = q^{2n/p} alpha^n
        assert y.allclose(x * Q ** (2 * n / p), atol=1e-12)
        a = suq2.lp_norm(x, InterpolationParams(-0.5, p))
        b = suq2.lp_norm(y, InterpolationParams(0.5, p))
        assert b == pytest.approx(a, rel=1e-10)

    def test_random_isometry(self, suq2, rng):
        for _ in range(5):
            x = random_element(suq2, rng)
            zf = complex(rng.uniform(-0.5, 0.5), rng.uniform(-1, 1))
            zt = complex(rng.uniform(-0.5, 0.5), rng.uniform(-1, 1))
            p = float(rng.choice(P_GRID))
            a = suq2.lp_norm(x, InterpolationParams(zf, p))
            b = suq2.lp_norm(izumi_transport(suq2, x, zf, zt, p), InterpolationParams(zt, p))
            assert abs(a - b) <= 1e-10 * max(1.0, a)

    def test_tracial_identity(self, s3, rng):
        f = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        for zf, zt in [(-0.5, 0.5), (0.3j, -1 + 2j)]:
            assert np.allclose(izumi_transport(s3, f, zf, zt, 4 / 3), f, atol=1e-14)
