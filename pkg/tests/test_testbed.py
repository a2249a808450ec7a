import math

import numpy as np
import pytest
from scipy import integrate

import streams
from entities import SobolevParams
from fourier import eval_basis, sobolev_norm_sq
from testbed import (BumpFamilySpec, CoefficientTruth, SmoothFunction, _psi_fourier, _psi_fourier_gauss, bump_G,
                     build_truth, derivative_l2_sq, derivative_l2_sq_gauss, discriminator_membership, eta_constant,
                     family_constants, gamma_constant, make_nu, psi, psi_derivative, psi_norms,
                     sobolev_membership_check, truth_from_json)


def test_psi_values():
    assert psi(0.25) == pytest.approx(math.exp(-1))
    assert psi(0.75) == pytest.approx(-math.exp(-1))
    assert psi(0.5) == 0.0
    assert psi(0.0) == 0.0 and psi(1.0) == 0.0


def test_psi_has_zero_mean():
    value, _ = integrate.quad(psi, 0.0, 1.0, points=[0.5])
    assert value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("k,t", [(1, 0.1), (1, 0.3), (2, 0.2), (3, 0.65)])
def test_closed_form_derivatives_match_finite_differences(k, t):
    h = 1e-5
    numeric = (psi_derivative(k - 1, t + h) - psi_derivative(k - 1, t - h)) / (2 * h)
    assert psi_derivative(k, t) == pytest.approx(numeric, rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_derivative_norms_agree_across_quadratures(k):
    assert derivative_l2_sq(k) == pytest.approx(derivative_l2_sq_gauss(k), rel=1e-6)


def test_psi_norms():
    norms = psi_norms()
    assert norms.sup == pytest.approx(math.exp(-1))
    assert 0 < norms.l2_sq < norms.l1 < norms.sup


def test_bump_G():
    assert bump_G((1,), [0.125], 2) == pytest.approx(math.exp(-1))
    assert bump_G((2,), [0.125], 2) == 0.0
    with pytest.raises(ValueError):
        bump_G((3,), [0.1], 2)


def test_gamma_constant_validation():
    with pytest.raises(ValueError):
        gamma_constant(1, 1.0, 1)
    with pytest.raises(ValueError):
        gamma_constant(1.5, 2.0, 1)
    assert 0 < gamma_constant(1, 2.0, 1) <= math.e


def test_family_constants():
    gamma, eta = family_constants(2, 1, 2.0, 2)
    assert gamma == gamma_constant(2, 2.0, 2)
    assert eta == eta_constant(1, 2)
    assert gamma <= math.e ** 2 and eta > 0
    # the radius only enters gamma
    assert family_constants(2, 1, 1.5, 2)[1] == eta
    with pytest.raises(ValueError):
        family_constants(2, 0.5, 2.0, 2)


def test_nu_patterns():
    assert make_nu(2, 2, "dense") == (1, 1, 1, 1)
    assert make_nu(2, 2, "sparse") == (1, 0, 0, 1)
    assert make_nu(1, 3, "empty") == (0, 0, 0)
    assert len(make_nu(2, 3, "random", np.random.default_rng(0))) == 9
    with pytest.raises(ValueError):
        make_nu(1, 2, "random")


def _family(d=1, J=2, pattern="dense"):
    return BumpFamilySpec.build(d, J, 1, 2.0, pattern, np.random.default_rng(0))


def test_bump_coefficients_match_quadrature():
    spec = _family()
    table = spec.coefficients(7)
    assert table[(1,)] == 1.0
    for j in range(2, 8):
        value, _ = integrate.quad(lambda x: spec.density([[x]])[0] * eval_basis((j,), [x]), 0.0, 1.0,
                                  points=[0.25, 0.5, 0.75], limit=200, epsabs=1e-13, epsrel=1e-12)
        assert table[(j,)] == pytest.approx(value, abs=1e-9)


@pytest.mark.parametrize("m", [1, 2, 3, 7])
def test_psi_fourier_vanishes_by_antisymmetry(m):
    # psi(1 - y) = -psi(y): cosine moments vanish at 2*pi*m, sine moments at (2m - 1)*pi
    assert _psi_fourier(2 * math.pi * m)[0] == pytest.approx(0.0, abs=1e-9)
    assert _psi_fourier((2 * m - 1) * math.pi)[1] == pytest.approx(0.0, abs=1e-9)
    assert _psi_fourier_gauss(2 * math.pi * m)[0] == pytest.approx(0.0, abs=1e-11)


@pytest.mark.parametrize("omega", [math.pi, 2.5, 3 * math.pi, 40.0])
def test_psi_fourier_routes_agree(omega):
    quad_route = _psi_fourier(omega)
    gauss_route = _psi_fourier_gauss(omega)
    assert quad_route[0] == pytest.approx(gauss_route[0], abs=1e-9)
    assert quad_route[1] == pytest.approx(gauss_route[1], abs=1e-9)


def test_bump_coefficients_through_omega_pi():
    # J = 2 reaches omega = pi at the first cosine/sine pair
    table = _family(J=2).coefficients(31)
    assert table[(1,)] == 1.0
    assert table.bound == (31,)
    assert np.isfinite([table[(j,)] for j in range(1, 32)]).all()


def test_bump_coefficients_are_separable():
    one = _family(d=1)
    two = _family(d=2)
    t1 = one.coefficients(5)
    t2 = two.coefficients(5)
    assert t2[(1, 1)] == 1.0
    assert t2.bound == (5, 5)
    for j1 in range(2, 6):
        for j2 in range(2, 6):
            expected = t1[(j1,)] * t1[(j2,)] / one.amplitude ** 2 * two.amplitude
            assert t2[(j1, j2)] == pytest.approx(expected, rel=1e-9, abs=1e-15)
    # every bump has zero mean, so mixed terms with a constant factor vanish
    assert t2[(1, 3)] == 0.0


def test_parseval_mass_matches_coefficients():
    spec = _family()
    _, values = spec.coefficients(127).as_arrays()
    assert float(np.sum(values ** 2)) == pytest.approx(spec.parseval_mass(), rel=1e-6)


def test_density_integrates_to_one_and_is_positive():
    spec = _family(J=3)
    assert spec.box_mass([0.0], [1.0]) == pytest.approx(1.0, abs=1e-10)
    grid = np.linspace(0, 1, 1001).reshape(-1, 1)
    assert spec.density(grid).min() > 0
    assert spec.density(grid).max() <= spec.envelope + 1e-12


def test_sampler_matches_box_mass():
    spec = _family()
    points = spec.sample(20_000, streams.derive_stream(1, streams.SAMPLE))
    assert points.shape == (20_000, 1)
    expected = spec.box_mass([0.0], [0.25])
    frac = float(np.mean(points[:, 0] <= 0.25))
    assert abs(frac - expected) < 4 * math.sqrt(expected * (1 - expected) / 20_000)


def test_bump_family_membership():
    for pattern in ("dense", "sparse"):
        spec = _family(d=2, J=3, pattern=pattern)
        result = sobolev_membership_check(spec, spec.params)
        assert result.member
        assert result.margin >= 0


def test_membership_of_a_smooth_function():
    f = SmoothFunction(
        d=1,
        f=lambda x: 1.0 + 0.1 * math.cos(2 * math.pi * x),
        partials={0: lambda x: -0.2 * math.pi * math.sin(2 * math.pi * x)},
    )
    inside = sobolev_membership_check(f, SobolevParams((1.0,), 2.0))
    assert inside.member
    assert inside.c1_sq == pytest.approx(1.005)
    assert inside.c2_sq == pytest.approx(0.02 * math.pi ** 2)
    assert not sobolev_membership_check(f, SobolevParams((1.0,), 1.05)).member


def test_discriminator_family_membership():
    assert discriminator_membership(1, 4, 1).member
    assert discriminator_membership(2, 2, 2).member


def test_coefficient_truth_stays_in_the_ball():
    params = SobolevParams.isotropic(1.5, 1, 2.0)
    truth = CoefficientTruth.build(params, 15, np.random.default_rng(2))
    assert sobolev_norm_sq(truth.table, params) <= params.radius ** 2
    assert truth.envelope <= 1.9 + 1e-12
    assert truth.coefficients(31).bound == (31,)
    assert truth.coefficients(7).bound == (7,)
    assert truth.density(np.linspace(0, 1, 101).reshape(-1, 1)).min() > 0


def test_build_truth_kinds_and_json():
    params = SobolevParams.isotropic(1.0, 1, 2.0)
    bump = build_truth("bump", params, J=2, pattern="random", root_seed=3)
    assert truth_from_json(bump.to_json()) == bump
    assert build_truth("uniform", params).active_cells == 0
    coeffs = build_truth("coefficients", params, support=7, root_seed=3)
    assert truth_from_json(coeffs.to_json()).table == coeffs.table
    with pytest.raises(ValueError):
        build_truth("spline", params)
    with pytest.raises(ValueError):
        build_truth("bump", SobolevParams((1.0, 2.0), 2.0))
