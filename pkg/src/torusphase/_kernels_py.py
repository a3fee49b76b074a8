"""Numpy reference implementations of the batched pointwise kernels.

Same arithmetic as the compiled backend, written as whole-array operations.
alpha enters through precomputed scalars: its entries (a11, a12, a22), the
entries of its inverse (ia11, ia12, ia22) and 1/det(alpha).
"""

import numpy as np


def pencil_phase(f11, f12, f22, ia11, ia12, ia22, inv_det_a):
    """Per-point pencil data: (re_zeta, im_zeta, theta, v, lam1, lam2).

    t1 = tr(alpha^{-1} f) and t2 = det(f)/det(alpha) give
    zeta = (1 - t2) + i t1 and the eigenvalues as roots of
    lam^2 - t1 lam + t2 = 0 (tiny negative discriminants clamp to a tie).
    """
    t1 = ia11 * f11 + ia22 * f22 + 2.0 * (ia12.real * f12.real + ia12.imag * f12.imag)
    t2 = (f11 * f22 - (f12.real * f12.real + f12.imag * f12.imag)) * inv_det_a
    re_z = 1.0 - t2
    im_z = t1
    v = np.hypot(re_z, im_z)
    theta = np.arctan2(im_z, re_z)
    disc = t1 * t1 - 4.0 * t2
    np.maximum(disc, 0.0, out=disc)
    root = np.sqrt(disc)
    lam1 = 0.5 * (t1 + root)
    lam2 = 0.5 * (t1 - root)
    return re_z, im_z, theta, v, lam1, lam2


def eta_inv(f11, f12, f22, a11, a12, a22, ia11, ia12, ia22):
    """Inverse of eta = alpha + f alpha^{-1} f per point: (e11, e12, e22)."""
    # c = alpha^{-1} f
    c11 = ia11 * f11 + ia12 * np.conj(f12)
    c12 = ia11 * f12 + ia12 * f22
    c21 = np.conj(ia12) * f11 + ia22 * np.conj(f12)
    c22 = np.conj(ia12) * f12 + ia22 * f22
    # eta = alpha + f c
    e11 = a11 + (f11 * c11 + f12 * c21).real
    e12 = a12 + f11 * c12 + f12 * c22
    e22 = a22 + (np.conj(f12) * c12 + f22 * c22).real
    det = e11 * e22 - (e12.real * e12.real + e12.imag * e12.imag)
    return e22 / det, -e12 / det, e11 / det


def trace_contract(e11, e12, e22, h11, h12, h22):
    """tr(E H) for Hermitian E = [[e11, e12], [conj(e12), e22]] and likewise H."""
    return e11 * h11 + e22 * h22 + 2.0 * (e12.real * h12.real + e12.imag * h12.imag)


def grad_quadratic(e11, e12, e22, g1, g2):
    """Hermitian quadratic form conj(g)^T E g for g = (g1, g2), real output."""
    cross = np.conj(g1) * e12 * g2
    return (
        e11 * (g1.real * g1.real + g1.imag * g1.imag)
        + e22 * (g2.real * g2.real + g2.imag * g2.imag)
        + 2.0 * cross.real
    )
