import math

import numpy as np
import pytest

from torusphase.blowup import (
    BlowupLattice,
    ClassVector,
    RightAnglePhase,
    blowup_table,
    cot_theta_from_classes,
    family_classes,
    fd_slope_at_zero,
    g_function,
    g_partials_origin,
    intersection_numbers,
    pairing,
    perturbed_cot,
    perturbed_cot_slope,
    ray_check,
    solve_t_of_s,
    theta_hat_from_classes,
)

H = ClassVector(1.0, 0.0)
E = ClassVector(0.0, 1.0)


def quadratic_root_oracle(s, m, L):
    """t(s) from the closed-form quadratic: G(s, .) = -s t^2 + 2mL t - s((m^2-1)L + s^2),
    small root of a t^2 + b t + c with a = -s, b = 2mL, c = -s((m^2-1)L + s^2)."""
    a, b, c = -s, 2.0 * m * L, -s * ((m * m - 1.0) * L + s * s)
    disc = math.sqrt(b * b - 4.0 * a * c)
    return (-b + disc) / (2.0 * a)


class TestPairing:
    def test_h_self(self):
        assert pairing(H, H, BlowupLattice(2.5)) == 2.5

    def test_exceptional_self(self):
        assert pairing(E, E, BlowupLattice(1.0)) == -1.0

    def test_mixed_orthogonal(self):
        assert pairing(H, E, BlowupLattice(3.0)) == 0.0

    def test_bilinear_expansion(self):
        lat = BlowupLattice(1.0)
        a = ClassVector(1.0, -0.1)
        b = ClassVector(2.0, -0.2)
        assert pairing(a, b, lat) == pytest.approx(1.98, abs=1e-15)

    def test_lattice_validation(self):
        with pytest.raises(ValueError):
            BlowupLattice(0.0)


class TestCotFromClasses:
    def test_proportional_pair(self):
        lat = BlowupLattice(1.7)
        for m in (1.5, 2.0, 3.0):
            cot = cot_theta_from_classes(H, ClassVector(m, 0.0), lat)
            assert cot == pytest.approx((1.0 - m * m) / (2.0 * m), rel=1e-14)

    def test_m_two(self):
        assert cot_theta_from_classes(H, ClassVector(2.0, 0.0), BlowupLattice(1.0)) == -0.75

    def test_degenerate_family_point(self):
        # s = t = 0 reduces to the proportional pair.
        ups, gam, lat = family_classes(0.0, 2.0, 1.0)
        assert cot_theta_from_classes(ups, gam, lat) == -0.75

    def test_right_angle_errors(self):
        with pytest.raises(RightAnglePhase):
            cot_theta_from_classes(H, E, BlowupLattice(1.0))

    def test_quadrant_resolution(self):
        lat = BlowupLattice(1.0)
        # m > 1: negative real part, positive pairing -> second quadrant.
        th = theta_hat_from_classes(H, ClassVector(2.0, 0.0), lat)
        assert 0.5 * math.pi < th < math.pi
        # small second class -> first quadrant
        th2 = theta_hat_from_classes(H, ClassVector(0.5, 0.0), lat)
        assert 0.0 < th2 < 0.5 * math.pi
        # right angle resolved exactly
        th3 = theta_hat_from_classes(H, ClassVector(1.0, 0.0), lat)
        assert th3 == pytest.approx(0.5 * math.pi, abs=1e-15)


class TestGFunction:
    def test_origin(self):
        assert g_function(0.0, 0.0, 2.0, 1.0) == 0.0

    def test_partials_at_origin(self):
        m, L = 2.0, 1.0
        gs, gt = g_partials_origin(m, L)
        assert gs == (1.0 - m * m) * L
        assert gt == 2.0 * m * L
        # cross-check by central differences
        h = 1e-7
        fd_s = (g_function(h, 0.0, m, L) - g_function(-h, 0.0, m, L)) / (2.0 * h)
        fd_t = (g_function(0.0, h, m, L) - g_function(0.0, -h, m, L)) / (2.0 * h)
        assert fd_s == pytest.approx(gs, abs=1e-7)
        assert fd_t == pytest.approx(gt, abs=1e-7)

    def test_solved_root_annihilates(self):
        t = solve_t_of_s(0.1, 2.0, 1.0)
        assert abs(g_function(0.1, t, 2.0, 1.0)) < 1e-14


class TestSolveT:
    def test_zero(self):
        assert solve_t_of_s(0.0, 2.0, 1.0) == 0.0

    def test_against_quadratic_oracle(self):
        for s in (0.01, 0.05, 0.1, 0.2):
            t = solve_t_of_s(s, 2.0, 1.0)
            assert t == pytest.approx(quadratic_root_oracle(s, 2.0, 1.0), rel=1e-12)
        # reference point: t(0.1) = (4 - sqrt(15.8796))/0.2 ~ 0.0753921
        assert solve_t_of_s(0.1, 2.0, 1.0) == pytest.approx(0.0753921, abs=5e-7)

    def test_fd_slope_matches_implicit_function(self):
        # dt/ds at 0 is (m^2 - 1)/(2m); one-sided difference at h = 1e-6.
        assert fd_slope_at_zero(2.0, 1.0, h=1e-6) == pytest.approx(0.75, abs=1e-5)
        assert fd_slope_at_zero(3.0, 2.0, h=1e-6) == pytest.approx(8.0 / 6.0, abs=1e-5)

    def test_outside_regime_raises(self):
        with pytest.raises(ValueError, match="regime"):
            solve_t_of_s(2.0, 2.0, 1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            solve_t_of_s(0.1, 1.0, 1.0)
        with pytest.raises(ValueError):
            solve_t_of_s(-0.1, 2.0, 1.0)


class TestRayCheck:
    def test_base_point(self):
        e_defect, h_coeff = ray_check(0.0, 2.0, 1.0)
        assert e_defect == 0.0
        assert h_coeff == pytest.approx((1.0 + 4.0) / 4.0, rel=1e-14)

    def test_deformed_points(self):
        for s, m, L in ((0.1, 2.0, 1.0), (0.05, 3.0, 2.0), (0.01, 2.0, 1.0)):
            e_defect, h_coeff = ray_check(s, m, L)
            assert abs(e_defect) < 1e-12
            assert h_coeff > 0.0

    def test_defect_is_rescaled_g(self):
        # e_defect = -G(s, t)/(2(mL - st)); with the solved root both vanish.
        s, m, L = 0.1, 2.0, 1.0
        t = solve_t_of_s(s, m, L, tol=1e-14)
        e_defect, _ = ray_check(s, m, L, tol=1e-14)
        g = g_function(s, t, m, L)
        assert e_defect == pytest.approx(-g / (2.0 * (m * L - s * t)), abs=1e-15)


class TestPerturbedFamily:
    def test_base_value(self):
        assert perturbed_cot(0.0, 1.0, 4.0, 2.0) == pytest.approx((1.0 - 4.0) / 4.0)

    def test_symmetric_case(self):
        assert perturbed_cot(0.0, 1.0, 1.0, 1.0) == 0.0
        assert perturbed_cot_slope(1.0, 1.0, 1.0) == 1.0

    def test_slope_by_central_difference(self):
        M, N, S = intersection_numbers(0.1, 2.0, 1.0)
        slope = perturbed_cot_slope(M, N, S)
        errs = []
        for d in (1e-3, 1e-4):
            fd = (perturbed_cot(d, M, N, S) - perturbed_cot(-d, M, N, S)) / (2.0 * d)
            errs.append(abs(fd - slope))
        assert errs[0] < 1e-4
        # second-order shrinkage
        assert errs[1] < errs[0] / 50.0

    def test_family_sign_and_inward_inequality(self):
        for s in (0.01, 0.05, 0.1):
            M, N, S = intersection_numbers(s, 2.0, 1.0)
            cot = perturbed_cot(0.0, M, N, S)
            slope = perturbed_cot_slope(M, N, S)
            assert cot < 0.0
            assert slope > 0.0
            assert abs(cot) < abs(slope)

    def test_errors(self):
        with pytest.raises(ValueError):
            perturbed_cot(1.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            perturbed_cot(0.0, 1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            perturbed_cot_slope(1.0, 1.0, 0.0)


class TestFamilyInvariants:
    def test_root_and_defect_across_range(self):
        tol = 1e-14
        for s in np.linspace(0.0, 0.25, 11):
            t = solve_t_of_s(float(s), 2.0, 1.0, tol)
            assert abs(g_function(float(s), t, 2.0, 1.0)) <= tol
            e_defect, h_coeff = ray_check(float(s), 2.0, 1.0, tol)
            assert abs(e_defect) < 10.0 * tol
            assert h_coeff > 0.0

    def test_kahler_positivity(self):
        lat = BlowupLattice(1.0)
        for s in (0.01, 0.05, 0.1, 0.2):
            ups, gam, lat = family_classes(s, 2.0, 1.0)
            assert pairing(ups, ups, lat) > 0.0
            assert pairing(gam, gam, lat) > 0.0
            assert pairing(ups, H, lat) > 0.0
            assert pairing(gam, H, lat) > 0.0

    def test_cot_continuous_to_base(self):
        base = -0.75
        prev_gap = abs(
            cot_theta_from_classes(*family_classes(0.01, 2.0, 1.0)) - base
        )
        for s in (0.003, 0.001, 0.0003):
            ups, gam, lat = family_classes(s, 2.0, 1.0)
            gap = abs(cot_theta_from_classes(ups, gam, lat) - base)
            assert gap < prev_gap
            prev_gap = gap
        assert prev_gap < 1e-3


class TestTable:
    def test_columns_and_values(self):
        rows = blowup_table(2.0, 1.0, [0.0, 0.05, 0.1])
        assert [r["s"] for r in rows] == [0.0, 0.05, 0.1]
        assert rows[0]["cot_theta"] == -0.75
        for r in rows:
            assert abs(r["e_defect"]) < 1e-12
            assert r["h_coeff"] > 0.0
            assert r["pert_slope"] == pytest.approx(
                (r["M"] + r["N"]) / (2.0 * r["S"]), rel=1e-14
            )
