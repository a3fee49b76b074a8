# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise pencil kernels.

Fused single-pass versions of the whole-array operations in _kernels_py;
see that module for the formulas.  Loops are parallel over points only, so
the thread count can never change the result.
"""

import numpy as np

cimport cython
from cython.parallel cimport prange
from libc.math cimport atan2, hypot, sqrt


def pencil_phase(double[::1] f11, double complex[::1] f12, double[::1] f22,
                 double ia11, double complex ia12, double ia22, double inv_det_a,
                 int threads):
    cdef Py_ssize_t n = f11.shape[0]
    re_z_a = np.empty(n); im_z_a = np.empty(n); th_a = np.empty(n)
    v_a = np.empty(n); l1_a = np.empty(n); l2_a = np.empty(n)
    cdef double[::1] re_z = re_z_a, im_z = im_z_a, th = th_a
    cdef double[::1] v = v_a, l1 = l1_a, l2 = l2_a
    cdef double iar = ia12.real, iai = ia12.imag
    cdef double t1, t2, disc, root, fr, fi
    cdef Py_ssize_t i
    for i in prange(n, nogil=True, num_threads=threads, schedule='static'):
        fr = f12[i].real
        fi = f12[i].imag
        t1 = ia11 * f11[i] + ia22 * f22[i] + 2.0 * (iar * fr + iai * fi)
        t2 = (f11[i] * f22[i] - (fr * fr + fi * fi)) * inv_det_a
        re_z[i] = 1.0 - t2
        im_z[i] = t1
        v[i] = hypot(re_z[i], im_z[i])
        th[i] = atan2(im_z[i], re_z[i])
        disc = t1 * t1 - 4.0 * t2
        if disc < 0.0:
            disc = 0.0
        root = sqrt(disc)
        l1[i] = 0.5 * (t1 + root)
        l2[i] = 0.5 * (t1 - root)
    return re_z_a, im_z_a, th_a, v_a, l1_a, l2_a


def eta_inv(double[::1] f11, double complex[::1] f12, double[::1] f22,
            double a11, double complex a12, double a22,
            double ia11, double complex ia12, double ia22,
            int threads):
    cdef Py_ssize_t n = f11.shape[0]
    e11_a = np.empty(n); e12_a = np.empty(n, dtype=np.complex128); e22_a = np.empty(n)
    cdef double[::1] e11 = e11_a, e22 = e22_a
    cdef double complex[::1] e12 = e12_a
    cdef double complex c11, c12, c21, c22, t12, f12c
    cdef double t11, t22, det
    cdef Py_ssize_t i
    for i in prange(n, nogil=True, num_threads=threads, schedule='static'):
        f12c = f12[i].conjugate()
        c11 = ia11 * f11[i] + ia12 * f12c
        c12 = ia11 * f12[i] + ia12 * f22[i]
        c21 = ia12.conjugate() * f11[i] + ia22 * f12c
        c22 = ia12.conjugate() * f12[i] + ia22 * f22[i]
        t11 = a11 + (f11[i] * c11 + f12[i] * c21).real
        t12 = a12 + f11[i] * c12 + f12[i] * c22
        t22 = a22 + (f12c * c12 + f22[i] * c22).real
        det = t11 * t22 - (t12.real * t12.real + t12.imag * t12.imag)
        e11[i] = t22 / det
        e12[i] = -t12 / det
        e22[i] = t11 / det
    return e11_a, e12_a, e22_a


def trace_contract(double[::1] e11, double complex[::1] e12, double[::1] e22,
                   double[::1] h11, double complex[::1] h12, double[::1] h22,
                   int threads):
    cdef Py_ssize_t n = h11.shape[0]
    out_a = np.empty(n)
    cdef double[::1] out = out_a
    cdef Py_ssize_t i
    for i in prange(n, nogil=True, num_threads=threads, schedule='static'):
        out[i] = (e11[i] * h11[i] + e22[i] * h22[i]
                  + 2.0 * (e12[i].real * h12[i].real + e12[i].imag * h12[i].imag))
    return out_a


def grad_quadratic(double[::1] e11, double complex[::1] e12, double[::1] e22,
                   double complex[::1] g1, double complex[::1] g2,
                   int threads):
    cdef Py_ssize_t n = g1.shape[0]
    out_a = np.empty(n)
    cdef double[::1] out = out_a
    cdef double complex cross
    cdef Py_ssize_t i
    for i in prange(n, nogil=True, num_threads=threads, schedule='static'):
        cross = g1[i].conjugate() * e12[i] * g2[i]
        out[i] = (e11[i] * (g1[i].real * g1[i].real + g1[i].imag * g1[i].imag)
                  + e22[i] * (g2[i].real * g2[i].real + g2[i].imag * g2[i].imag)
                  + 2.0 * cross.real)
    return out_a
