import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, linalg, special

from ginlab import pfaff_kernels as pk

SQ2PI = math.sqrt(2 * math.pi)


def random_skew(n, rng, complex_=False):
    a = rng.standard_normal((n, n))
    if complex_:
        a = a + 1j * rng.standard_normal((n, n))
    return a - a.T


class TestPfaffian:
    def test_two_by_two(self):
        assert pk.pfaffian(np.array([[0.0, 3.5], [-3.5, 0.0]])) == 3.5

    def test_four_by_four_expansion(self):
        rng = np.random.default_rng(0)
        a = random_skew(4, rng)
        ref = a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]
        assert pk.pfaffian(a) == pytest.approx(ref, rel=1e-13)

    def test_square_is_determinant(self):
        rng = np.random.default_rng(1)
        for i in range(200):
            n = 2 * (1 + i % 8)
            a = random_skew(n, rng, complex_=bool(i % 3 == 0))
            lu, piv = linalg.lu_factor(a)
            det = np.prod(np.diag(lu)) * (-1) ** np.sum(piv != np.arange(n))
            assert abs(pk.pfaffian(a) ** 2 - det) <= 1e-9 * abs(det)

    def test_log_form(self):
        rng = np.random.default_rng(2)
        a = random_skew(10, rng)
        phase, logabs = pk.log_pfaffian(a)
        assert phase * math.exp(logabs) == pytest.approx(pk.pfaffian(a), rel=1e-12)

    def test_singular(self):
        assert pk.pfaffian(np.zeros((4, 4))) == 0

    def test_errors(self):
        with pytest.raises(ValueError):
            pk.pfaffian(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            pk.pfaffian(np.ones((2, 2)))


class TestWeight:
    def test_real_axis(self):
        for x in (0.0, 0.7, -2.0):
            assert pk.f_weight("real", 0.0, x) == pytest.approx(math.exp(-x * x / 2), rel=1e-15)

    def test_quaternion_axis_zero(self):
        assert pk.f_weight("quaternion", 0.0, 1.3) == 0.0

    def test_real_elliptic_formula(self):
        mp.mp.dps = 30
        t = mp.mpf("0.5")
        z = mp.mpc(1, 1)
        zs = z / mp.sqrt(1 - t * t)
        f0sq = mp.erfc(mp.sqrt(2) * abs(zs.imag)) * mp.exp(-(zs.real**2 - zs.imag**2))
        ref = mp.sqrt(f0sq * mp.exp(t * (z**2 + mp.conj(z) ** 2) / (2 * (1 - t * t))).real)
        assert pk.f_weight("real", 0.5, 1 + 1j) == pytest.approx(float(ref), rel=1e-13)

    def test_conjugation_symmetry(self):
        for cls in ("real", "quaternion"):
            assert pk.f_weight(cls, 0.3, 0.4 + 0.9j) == pk.f_weight(cls, 0.3, 0.4 - 0.9j)

    def test_rejects_tau(self):
        with pytest.raises(ValueError):
            pk.f_weight("real", 1.0, 0.0)


class TestSkewBasis:
    def test_monic(self):
        for cls in ("real", "quaternion"):
            c = pk.skew_basis(cls, 0.4, 8).coeffs
            np.testing.assert_array_equal(np.diag(c), 1.0)
            assert np.all(np.triu(c, 1) == 0)

    def test_real_circular_low_degrees(self):
        c = pk.skew_basis("real", 0.0, 4).coeffs
        np.testing.assert_array_equal(c[:3], np.eye(4)[:3])
        # P_3 = p_3 - 2 p_1 keeps a linear term at tau = 0
        np.testing.assert_array_equal(c[3], [0, -2, 0, 1])

    def test_real_p2(self):
        c = pk.skew_basis("real", 0.5, 4).coeffs
        np.testing.assert_allclose(c[2], [-0.5, 0, 1, 0], atol=1e-15)

    def test_quaternion_p2(self):
        c = pk.skew_basis("quaternion", 0.5, 4).coeffs
        np.testing.assert_allclose(c[2], [-0.5 + 2, 0, 1, 0], atol=1e-15)

    def test_hermite_scaling(self):
        t = 0.3
        c = pk.skew_basis("real", t, 8).hermite_coeffs
        z = 0.7 + 0.4j
        for n in range(8):
            ref = complex(mp.mpf(t / 2) ** (mp.mpf(n) / 2) * mp.hermite(n, z / mp.sqrt(2 * t)))
            assert np.polynomial.polynomial.polyval(z, c[n]) == pytest.approx(ref, rel=1e-12, abs=1e-14)

    def test_rejects_odd(self):
        with pytest.raises(ValueError):
            pk.skew_basis("real", 0.5, 5)

    @pytest.mark.parametrize("cls", ["real", "quaternion"])
    @pytest.mark.parametrize("tau", [0.0, 0.5])
    def test_skew_orthogonality(self, cls, tau):
        b = pk.skew_basis(cls, tau, 6)
        g = np.array([[pk.skew_form(cls, tau, b.coeffs[k], b.coeffs[l]) for l in range(6)] for k in range(6)])
        z = np.kron(np.eye(3), np.array([[0.0, 1.0], [-1.0, 0.0]]))
        expected = z * b.norms[:, None]
        scale = np.sqrt(np.outer(b.norms, b.norms))
        assert np.max(np.abs(g - expected) / scale) < 1e-5


class TestKernel:
    def test_antisymmetry_diagonal(self):
        k = pk.PfaffKernel("real", 10)
        assert pk.kernel_KN(k, 1 + 1j, 1 + 1j) == 0

    def test_n2_single_term(self):
        z1, z2 = 0.4 + 1j, -1.2 + 0.3j
        ref = (z1 - z2) / (2 * SQ2PI)
        assert pk.kernel_KN(pk.PfaffKernel("real", 2), z1, z2) == pytest.approx(ref, rel=1e-14)
        assert pk.real_circular_kernel(2, z1, z2) == pytest.approx(ref, rel=1e-14)

    @pytest.mark.parametrize("N", [2, 6, 12])
    def test_closed_form_vs_skew_sum(self, N):
        z1, z2 = 1 + 1j, 2 - 1j
        a = pk.kernel_KN(pk.PfaffKernel("real", N), z1, z2)
        b = pk.real_circular_kernel(N, z1, z2)
        assert abs(a - b) <= 1e-10 * abs(b)

    def test_small_tau_matches_circular(self):
        z1, z2 = 1 + 1j, 2 - 1j
        a = pk.kernel_KN(pk.PfaffKernel("real", 12, 1e-9), z1, z2)
        assert a == pytest.approx(pk.real_circular_kernel(12, z1, z2), rel=1e-7)

    @pytest.mark.parametrize("N", [4, 6, 12])
    def test_moment_reconstruction(self, N):
        mom = pk.skew_moment_matrix("real", 0.0, N)
        z1, z2 = 0.3 + 0.8j, -1.1 + 0.2j
        ref = pk.real_circular_kernel(N, z1, z2)
        assert abs(pk.kernel_from_moments(mom, z1, z2) - ref) <= 1e-10 * abs(ref)

    @pytest.mark.parametrize("tau", [0.0, 0.4])
    def test_quaternion_moment_reconstruction(self, tau):
        N = 6
        k = pk.PfaffKernel("quaternion", N, tau)
        mom = pk.skew_moment_matrix("quaternion", tau, N)
        z1, z2 = 0.3 + 0.8j, -1.1 + 0.2j
        ref = pk.kernel_KN(k, z1, z2)
        assert abs(pk.kernel_from_moments(mom, z1, z2) - ref) <= 1e-5 * abs(ref)

    def test_real_elliptic_moment_reconstruction(self):
        N = 6
        k = pk.PfaffKernel("real", N, 0.5)
        mom = pk.skew_moment_matrix("real", 0.5, N)
        z1, z2 = 0.3 + 0.8j, -1.1 + 0.2j
        ref = pk.kernel_KN(k, z1, z2)
        assert abs(pk.kernel_from_moments(mom, z1, z2) - ref) <= 1e-5 * abs(ref)

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from(["real", "quaternion"]), st.floats(0, 0.9), st.complex_numbers(max_magnitude=4), st.complex_numbers(max_magnitude=4))
    def test_antisymmetry(self, cls, tau, z1, z2):
        k = pk.PfaffKernel(cls, 8, tau)
        a = pk.kernel_KN(k, z1, z2)
        b = pk.kernel_KN(k, z2, z1)
        assert a == -b
        c = pk.kernel_KN(k, np.array([z1]), np.array([z2]))[0]
        assert abs(a - c) <= 1e-13 * abs(a) + 1e-15

    def test_folded_matches_product(self):
        k = pk.PfaffKernel("quaternion", 10, 0.3)
        z1, z2 = 0.5 + 0.7j, 1.0 - 0.4j
        ref = k.f(z1) * k.f(z2) * pk.kernel_KN(k, z1, z2)
        assert pk.kernel_folded(k, z1, z2) == pytest.approx(ref, rel=1e-12)

    def test_large_n_folded_finite(self):
        k = pk.PfaffKernel("real", 400, 0.5)
        assert np.isfinite(pk.kernel_folded(k, 12 + 3j, 12 - 3j))


class TestMoments:
    def test_quaternion_entry(self):
        a = pk.skew_moment_matrix("quaternion", 0.0, 4).A
        assert a[0, 1] == pytest.approx(2 * math.pi)
        assert a[1, 2] == pytest.approx(2 * math.pi * 2)

    def test_quaternion_two_forms_agree(self):
        a = pk.skew_moment_matrix("quaternion", 0.0, 8).A
        b = pk.skew_moment_matrix("quaternion", 0.0, 8, form="duplication").A
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9)

    @pytest.mark.parametrize("cls", ["real", "quaternion"])
    def test_closed_vs_numeric(self, cls):
        a = pk.skew_moment_matrix(cls, 0.0, 6).A
        b = pk.skew_moment_matrix(cls, 0.0, 6, form="numeric").A
        np.testing.assert_allclose(b, a, rtol=1e-8, atol=1e-8 * np.max(np.abs(a)))

    @pytest.mark.parametrize("cls", ["real", "quaternion"])
    def test_inverse_and_antisymmetry(self, cls):
        m = pk.skew_moment_matrix(cls, 0.0, 8)
        np.testing.assert_array_equal(m.A, -m.A.T)
        np.testing.assert_allclose(m.A @ m.A_inv, np.eye(8), atol=1e-10)

    def test_rejects_odd(self):
        with pytest.raises(ValueError):
            pk.skew_moment_matrix("real", 0.0, 5)


class TestNormalization:
    def test_real_n2(self):
        assert pk.normalization("real", 0.0, 2) == pytest.approx(math.log(2 * SQ2PI))

    def test_quaternion_n2(self):
        assert pk.normalization("quaternion", 0.0, 2) == pytest.approx(math.log(2 * math.pi))

    def test_real_n4(self):
        assert pk.normalization("real", 0.0, 4) == pytest.approx(2 * math.log(2 * SQ2PI) + math.log(2))

    @pytest.mark.parametrize("cls", ["real", "quaternion"])
    def test_pfaffian_of_moments(self, cls):
        # 1/C_N is the Pfaffian of the moment matrix
        for N in (2, 4, 6):
            a = pk.skew_moment_matrix(cls, 0.0, N).A
            assert math.log(abs(pk.pfaffian(a))) == pytest.approx(pk.normalization(cls, 0.0, N), rel=1e-12)

    def test_elliptic_pfaffian_of_moments(self):
        for cls in ("real", "quaternion"):
            a = pk.skew_moment_matrix(cls, 0.5, 4).A
            assert math.log(abs(pk.pfaffian(a))) == pytest.approx(pk.normalization(cls, 0.5, 4), abs=1e-6)

    def test_rejects_odd(self):
        with pytest.raises(ValueError):
            pk.normalization("real", 0.0, 3)


class TestDensityComplex:
    def test_closed_vs_kernel(self):
        k = pk.PfaffKernel("real", 20)
        for z in (1 + 0.5j, 3 + 2j, 0.1 + 0.01j):
            a = pk.density_complex(k, z)
            b = pk.density_complex(k, z, method="closed")
            assert a == pytest.approx(b, rel=1e-10)

    @pytest.mark.xfail(strict=True, reason="depletion near the real axis is 1 - 1/(4y^2) + ..., 2.6% at y = 3")
    def test_bulk_circular_law_y3(self):
        assert pk.density_complex(pk.PfaffKernel("real", 400), 3j) == pytest.approx(1 / math.pi, rel=0.02)

    @pytest.mark.parametrize("cls", ["real", "quaternion"])
    def test_bulk_circular_law(self, cls):
        assert pk.density_complex(pk.PfaffKernel(cls, 400), 0.5 + 5j) == pytest.approx(1 / math.pi, rel=0.02)

    @pytest.mark.parametrize("y", [1.0, 3.0, 6.0])
    def test_axis_depletion_asymptotics(self, y):
        # closed form ratio to 1/pi is sqrt(2 pi) y erfcx(sqrt2 y) = 1 - 1/(4y^2) + 3/(16 y^4) - ...
        got = pk.density_complex(pk.PfaffKernel("real", 400), 0.5 + 1j * y) * math.pi
        assert got == pytest.approx(SQ2PI * y * special.erfcx(math.sqrt(2) * y), rel=1e-10)

    def test_quaternion_axis_suppression(self):
        k = pk.PfaffKernel("quaternion", 10)
        vals = [pk.density_complex(k, 0.5 + 1j * e) / e**2 for e in (1e-2, 1e-3, 1e-4)]
        assert vals[1] == pytest.approx(vals[2], rel=1e-2)
        assert vals[0] > 0

    def test_rejects_lower_half(self):
        with pytest.raises(ValueError):
            pk.density_complex(pk.PfaffKernel("real", 4), 1.0)

    def test_elliptic_bulk(self):
        t = 0.5
        k = pk.PfaffKernel("real", 200, t)
        assert pk.density_complex(k, 4j) == pytest.approx(1 / (math.pi * (1 - t * t)), rel=0.03)


class TestDensityReal:
    def test_origin_large_n(self):
        assert pk.density_real(100, 0.0) == pytest.approx(1 / SQ2PI, abs=1e-3)

    @pytest.mark.parametrize("u", [-1.0, 0.0, 1.0])
    def test_edge(self, u):
        N = 100
        ref = special.erfc(math.sqrt(2) * u) / (2 * SQ2PI) + math.exp(-u * u) * special.erfc(-u) / (4 * math.sqrt(math.pi))
        assert abs(pk.density_real(N, math.sqrt(N) + u) - ref) < 2e-2

    def test_integral_is_expected_count(self):
        val = integrate.quad(lambda x: pk.density_real(10, x), -20, 20, epsabs=0, epsrel=1e-12, limit=200, points=[-math.sqrt(10), math.sqrt(10)])[0]
        assert val == pytest.approx(pk.expected_real_count(10), abs=1e-6)

    @pytest.mark.parametrize("x", [0.0, 1.3, 3.9])
    def test_closed_vs_quadrature(self, x):
        a = pk.density_real(8, x, method="closed")
        b = pk.density_real(pk.PfaffKernel("real", 8), x, method="quadrature")
        assert a == pytest.approx(b, rel=1e-8)

    def test_quaternion_zero(self):
        assert pk.density_real(pk.PfaffKernel("quaternion", 4), 0.3) == 0

    def test_elliptic_origin(self):
        t = 0.5
        v = pk.density_real(pk.PfaffKernel("real", 200, t), 0.0)
        assert v == pytest.approx(1 / math.sqrt(2 * math.pi * (1 - t * t)), rel=0.03)


class TestExpectedRealCount:
    def test_n1(self):
        assert pk.expected_real_count(1) == 1

    def test_n2(self):
        assert pk.expected_real_count(2) == pytest.approx(math.sqrt(2), rel=1e-13)

    @pytest.mark.parametrize("N", [3, 10, 100])
    def test_closed_form_oracle(self, N):
        mp.mp.dps = 30
        ref = mp.mpf(1) / 2 + mp.sqrt(2) * mp.gamma(N + mp.mpf(1) / 2) / (mp.gamma(N) * mp.sqrt(mp.pi)) * mp.hyp2f1(1, -mp.mpf(1) / 2, N, mp.mpf(1) / 2)
        assert pk.expected_real_count(N) == pytest.approx(float(ref), rel=1e-12)

    @given(st.integers(1, 300))
    def test_bounds(self, N):
        assert 1 <= pk.expected_real_count(N) <= N


@pytest.mark.parametrize("cls,N", [("real", 4), ("real", 6), ("quaternion", 4)])
def test_total_mass(cls, N):
    k = pk.PfaffKernel(cls, N)
    span = math.sqrt(N) + 7
    x, w = np.polynomial.legendre.leggauss(120)
    xs, wx = span * x, span * w
    ys, wy = 0.5 * span * (x + 1), 0.5 * span * w
    zz = xs[:, None] + 1j * ys[None, :]
    pair = 2 * np.einsum("i,j,ij->", wx, wy, pk.density_complex(k, zz))
    line = 0.0
    if cls == "real":
        line = integrate.quad(lambda t: pk.density_real(N, t), -span, span, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert line + pair == pytest.approx(N, rel=1e-5)


class TestCorrelations:
    def test_one_point(self):
        for k in (pk.PfaffKernel("real", 10), pk.PfaffKernel("quaternion", 10, 0.3)):
            z = 0.7 + 0.9j
            assert pk.correlations_upper(k, [z]) == pytest.approx(pk.density_complex(k, z), rel=1e-12)

    def test_coincident(self):
        k = pk.PfaffKernel("real", 10)
        assert abs(pk.correlations_upper(k, [1 + 1j, 1 + 1j])) < 1e-10

    def test_pair_nonnegative_and_repulsive(self):
        k = pk.PfaffKernel("real", 20)
        r2 = pk.correlations_upper(k, [1 + 1j, 1.5 + 0.8j])
        r1 = pk.density_complex(k, 1 + 1j) * pk.density_complex(k, 1.5 + 0.8j)
        assert 0 < r2 < r1

    def test_far_points_factorize(self):
        k = pk.PfaffKernel("quaternion", 40)
        z1, z2 = -3 + 2j, 3 + 2.5j
        r2 = pk.correlations_upper(k, [z1, z2])
        assert r2 == pytest.approx(pk.density_complex(k, z1) * pk.density_complex(k, z2), rel=1e-4)

    def test_errors(self):
        k = pk.PfaffKernel("real", 6)
        with pytest.raises(ValueError):
            pk.correlations_upper(k, [1 - 1j])
        with pytest.raises(ValueError):
            pk.correlations_upper(k, [1j] * 5)


class TestLimits:
    def test_real_bulk_diagonal(self):
        assert pk.limit_kernel("real", "circular_bulk", 1 + 1j, 1 + 1j) == 0

    def test_elliptic_reduces_to_circular(self):
        z1, z2 = 0.3 + 0.2j, -0.4 + 1j
        a = pk.limit_kernel("real", "elliptic_bulk", z1, z2, tau=0.0)
        assert a == pytest.approx(pk.limit_kernel("real", "circular_bulk", z1, z2), rel=1e-15)

    def test_finite_n_convergence(self):
        z1, z2 = 1 + 1j, 0.5 - 0.3j
        a = pk.real_circular_kernel(200, z1, z2)
        b = pk.limit_kernel("real", "circular_bulk", z1, z2)
        assert abs(a - b) <= 1e-6 * abs(b)

    def test_quaternion_bulk_pole(self):
        with pytest.raises(ValueError):
            pk.limit_kernel("quaternion", "circular_bulk", 1j, 1j)

    def test_quaternion_bulk_matches_finite_n(self):
        # valid for separations of order sqrt(N) across the real axis; corrections ~ 2/|z1 - z2|^2
        k = pk.PfaffKernel("quaternion", 400)
        for z1, z2 in [(2 + 5j, 2.5 - 4j), (1 + 6j, 0.5 - 6j), (-3 + 4j, -3 - 5j)]:
            a = pk.kernel_KN(k, z1, z2)
            b = pk.limit_kernel("quaternion", "circular_bulk", z1, z2)
            assert abs(a - b) <= 0.03 * abs(b)

    @pytest.mark.parametrize("cls", ["real", "quaternion"])
    @pytest.mark.parametrize("tau", [0.0, 0.5])
    def test_elliptic_bulk_finite_n(self, cls, tau):
        for z1, z2 in [(0.3 + 0.2j, -0.4 + 0.6j), (1 + 1j, 0.5 - 1j)]:
            a = pk.kernel_KN(pk.PfaffKernel(cls, 200, tau), z1, z2)
            b = pk.limit_kernel(cls, "elliptic_bulk", z1, z2, tau=tau)
            assert abs(a - b) <= 1e-6 * abs(b)

    def test_weak_real_finite_n(self):
        N, a = 400, 1.0
        k = pk.PfaffKernel("real", N, 1 - a * a / N)
        for x1, x2 in [(0.3 + 0.2j, -0.5 + 0.1j), (1.0 + 0.4j, 0.2 - 0.3j)]:
            z1, z2 = x1 / math.sqrt(N), x2 / math.sqrt(N)
            fin = pk.kernel_KN(k, z1, z2)
            lim = pk.limit_kernel("real", "weak", z1, z2, a=a, N=N)
            assert abs(fin - lim) <= 5e-3 * abs(lim)

    def test_weak_needs_parameters(self):
        with pytest.raises(ValueError):
            pk.limit_kernel("real", "weak", 0.1, 0.2)


class TestWeakProfile:
    def test_real_small_a(self):
        assert pk.weak_density_profile("real", 0.0, 1e-4)[0] == pytest.approx(1.0, abs=1e-6)

    def test_quaternion_axis(self):
        assert pk.weak_density_profile("quaternion", 0.0, 1.0) == (0.0, 0.0)

    def test_quaternion_quadratic_onset(self):
        a = 1.0
        v1 = pk.weak_density_profile("quaternion", 1e-3, a)[1]
        v2 = pk.weak_density_profile("quaternion", 2e-3, a)[1]
        assert v2 / v1 == pytest.approx(4.0, rel=1e-3)

    @pytest.mark.parametrize("a", [0.3, 1.0, 2.0])
    def test_real_normalization(self, a):
        sing = pk.weak_density_profile("real", 0.0, a)[0]
        f = lambda y: pk.weak_density_profile("real", y, a)[1]  # noqa: E731
        hi = 10 * a + 2 * math.pi * a * a + 10
        smooth = 2 * integrate.quad(f, 0, hi, epsabs=0, epsrel=1e-11, limit=400)[0]
        assert sing + smooth == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("a", [0.3, 1.0, 2.0])
    def test_quaternion_normalization(self, a):
        # the profile is even in y and normalized over the whole line
        f = lambda y: pk.weak_density_profile("quaternion", y, a)[1]  # noqa: E731
        hi = 10 * a + 2 * math.pi * a * a + 10
        assert 2 * integrate.quad(f, 0, hi, epsabs=0, epsrel=1e-11, limit=400)[0] == pytest.approx(1.0, abs=1e-6)

    def test_rejects_a(self):
        with pytest.raises(ValueError):
            pk.weak_density_profile("real", 0.1, 0.0)
