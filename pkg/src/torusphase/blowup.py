"""Intersection arithmetic of a one-point blowup and its deformation family.

The lattice is spanned by H (the pullback of a form of self-intersection
L > 0) and the exceptional class E, with pairing matrix diag(L, -1).  For
m > 1 the pair (H, mH) has target cotangent (1 - m^2)/(2m); deforming to
(H - sE, mH - tE) and asking that

    cot(theta_hat)(H - sE) + (mH - tE)

stay on the positive ray through H gives one scalar equation G(s, t) = 0,
solved here for t(s) by bisection plus Newton polish.  A perturbed family
(H - sE, (1-d)(mH - tE)) has cotangent cot_psi(d) whose derivative at d = 0
is (M + N)/(2S) in the self- and mutual intersection numbers M, N, S.

Everything is low-degree polynomial arithmetic in floating point; the
conditioning is benign and no rational arithmetic is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class RightAnglePhase(ValueError):
    """cot(theta_hat) requested where the phase is exactly pi/2."""


@dataclass(frozen=True)
class BlowupLattice:
    """Rank-two lattice {H, E} with pairing diag(L, -1)."""

    L: float

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")


@dataclass(frozen=True)
class ClassVector:
    """h_coeff * H + e_coeff * E."""

    h: float
    e: float


def pairing(a: ClassVector, b: ClassVector, lat: BlowupLattice) -> float:
    """Intersection number a.b = a_h b_h L - a_e b_e."""
    return a.h * b.h * lat.L - a.e * b.e


def cot_theta_from_classes(a: ClassVector, f: ClassVector, lat: BlowupLattice) -> float:
    """cot(theta_hat) = (a.a - f.f) / (2 a.f); errors when a.f = 0 (phase pi/2)."""
    den = 2.0 * pairing(a, f, lat)
    if den == 0.0:
        raise RightAnglePhase("pairing vanishes: theta_hat = pi/2 exactly")
    return (pairing(a, a, lat) - pairing(f, f, lat)) / den


def theta_hat_from_classes(a: ClassVector, f: ClassVector, lat: BlowupLattice) -> float:
    """theta_hat in (-pi, pi) with the quadrant fixed by the signs of
    a.a - f.f and a.f (the charge is (a.a - f.f) + 2i a.f)."""
    return math.atan2(2.0 * pairing(a, f, lat), pairing(a, a, lat) - pairing(f, f, lat))


def g_function(s: float, t: float, m: float, L: float) -> float:
    """G(s, t) = s[(1 - m^2)L - s^2 + t^2] + 2t(mL - st); the ray condition is G = 0."""
    return s * ((1.0 - m * m) * L - s * s + t * t) + 2.0 * t * (m * L - s * t)


def g_partials_origin(m: float, L: float) -> tuple[float, float]:
    """(dG/ds, dG/dt) at the origin: ((1 - m^2)L, 2mL)."""
    return (1.0 - m * m) * L, 2.0 * m * L


def solve_t_of_s(s: float, m: float, L: float, tol: float = 1e-14) -> float:
    """Root t(s) of G(s, .) = 0 with t(0) = 0, by bisection then Newton.

    The bracket [0, s(m^2 - 1)/m] follows from the implicit-function slope
    (m^2 - 1)/(2m) with a factor-two margin; no sign change there means s is
    outside the local regime and raises.
    """
    if m <= 1.0:
        raise ValueError("need m > 1")
    if s < 0.0:
        raise ValueError("need s >= 0")
    if s == 0.0:
        return 0.0
    lo, hi = 0.0, s * (m * m - 1.0) / m
    g_lo, g_hi = g_function(s, lo, m, L), g_function(s, hi, m, L)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0.0:
        raise ValueError(f"no ray solution bracketed for s={s} (outside the local regime)")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        g_mid = g_function(s, mid, m, L)
        if g_mid == 0.0:
            lo = hi = mid
            break
        if g_lo * g_mid < 0.0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
    t = 0.5 * (lo + hi)
    for _ in range(8):
        g = g_function(s, t, m, L)
        if abs(g) < tol:
            break
        dg = 2.0 * m * L - 2.0 * s * t  # dG/dt
        t -= g / dg
    if abs(g_function(s, t, m, L)) > tol:
        raise ValueError(f"root polish failed for s={s}")
    return t


def family_classes(s: float, m: float, L: float, tol: float = 1e-14):
    """(upsilon, gamma, lattice) = (H - sE, mH - t(s)E) with the solved t."""
    t = solve_t_of_s(s, m, L, tol)
    return ClassVector(1.0, -s), ClassVector(m, -t), BlowupLattice(L)


def ray_check(s: float, m: float, L: float, tol: float = 1e-14) -> tuple[float, float]:
    """(e_defect, h_coeff) of cot(theta_hat) * upsilon + gamma.

    e_defect is the E-coefficient, which must vanish (it is G = 0 rearranged);
    h_coeff = cot(theta_hat) + m must be positive for the combination to lie
    on the positive H-ray.
    """
    ups, gam, lat = family_classes(s, m, L, tol)
    c = cot_theta_from_classes(ups, gam, lat)
    e_defect = c * ups.e + gam.e  # = -(c*s + t)
    return e_defect, c * ups.h + gam.h


def perturbed_cot(delta: float, M: float, N: float, S: float) -> float:
    """cot of the perturbed family: (M - (1-delta)^2 N) / (2 (1-delta) S)."""
    if S == 0.0:
        raise ValueError("S must be nonzero")
    if delta == 1.0:
        raise ValueError("delta = 1 collapses the second class")
    u = 1.0 - delta
    return (M - u * u * N) / (2.0 * u * S)


def perturbed_cot_slope(M: float, N: float, S: float) -> float:
    """d/d(delta) of perturbed_cot at delta = 0: (M + N) / (2S)."""
    if S == 0.0:
        raise ValueError("S must be nonzero")
    return (M + N) / (2.0 * S)


def intersection_numbers(s: float, m: float, L: float, tol: float = 1e-14):
    """(M, N, S) = (ups.ups, gam.gam, ups.gam) for the solved family."""
    ups, gam, lat = family_classes(s, m, L, tol)
    return pairing(ups, ups, lat), pairing(gam, gam, lat), pairing(ups, gam, lat)


def fd_slope_at_zero(m: float, L: float, h: float = 1e-6, tol: float = 1e-14) -> float:
    """One-sided finite-difference dt/ds at s = 0; tends to (m^2 - 1)/(2m)."""
    return solve_t_of_s(h, m, L, tol) / h


def blowup_table(m: float, L: float, s_values, tol: float = 1e-14):
    """Rows (dicts) of the family data for each s: t, cot_theta, ray defect,
    intersection numbers and the perturbed-family slope."""
    rows = []
    for s in s_values:
        t = solve_t_of_s(s, m, L, tol)
        ups, gam, lat = ClassVector(1.0, -s), ClassVector(m, -t), BlowupLattice(L)
        M = pairing(ups, ups, lat)
        N = pairing(gam, gam, lat)
        S = pairing(ups, gam, lat)
        cot = cot_theta_from_classes(ups, gam, lat)
        rows.append(
            {
                "s": s,
                "t": t,
                "cot_theta": cot,
                "e_defect": cot * ups.e + gam.e,
                "h_coeff": cot + m,
                "M": M,
                "N": N,
                "S": S,
                "pert_slope": perturbed_cot_slope(M, N, S),
            }
        )
    return rows
