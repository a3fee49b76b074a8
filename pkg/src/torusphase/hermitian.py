"""Pointwise linear algebra of a Hermitian pencil (f, alpha) in two complex dims.

Everything here works on a single 2x2 pair and serves as the readable
reference for the batched grid kernels (torusphase.kernels); the unit tests
cross-check the two against each other.

For a Hermitian f and positive definite Hermitian alpha the generalized
eigenvalues lam solving det(f - lam*alpha) = 0 are real.  The derived
quantities are

    zeta = prod(1 + i*lam_p) = 1 - lam1*lam2 + i*(lam1 + lam2),
    v    = |zeta| = sqrt(prod(1 + lam_p^2)),
    theta = sum(arctan(lam_p)) = Arg(zeta),
    eta  = alpha + f alpha^{-1} f        (the linearising metric).

zeta never meets the branch cut (-inf, 0]: if Im(zeta) = lam1 + lam2 = 0 then
Re(zeta) = 1 + lam1^2 > 0, so Arg is always the principal branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10


class BranchCutError(ValueError):
    """A complex charge landed on the argument's branch cut (-inf, 0]."""


def symmetrize(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return the Hermitian part of m; reject asymmetry beyond tol.

    Spectral round trips produce ~1e-15 drift, which is silently folded in;
    anything larger signals corrupted input.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    asym = np.max(np.abs(m - m.conj().T))
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian: asymmetry {asym:.3e} > {tol:.0e}")
    return 0.5 * (m + m.conj().T)


def is_positive_definite(m: np.ndarray) -> bool:
    a11 = m[0, 0].real
    det = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
    return a11 > 0.0 and det > 0.0


@dataclass
class HermitianPair:
    """A positive Hermitian form alpha and a Hermitian form f at one point."""

    alpha: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        self.alpha = symmetrize(self.alpha)
        self.f = symmetrize(self.f)
        if not is_positive_definite(self.alpha):
            raise ValueError("alpha must be positive definite")


@dataclass
class PhasePoint:
    """Pencil eigenvalues and the derived pointwise phase data."""

    lam: tuple
    theta: float
    zeta: complex
    v: float
    eta: np.ndarray


def pencil_eigenvalues(pair: HermitianPair):
    """Real generalized eigenvalues of det(f - lam*alpha) = 0, descending.

    Uses the closed-form quadratic in tr(alpha^{-1} f) and det(f)/det(alpha);
    a tiny negative discriminant from rounding is clamped to zero (ties are
    returned as an equal pair).
    """
    a, f = pair.alpha, pair.f
    det_a = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]).real
    det_f = (f[0, 0] * f[1, 1] - f[0, 1] * f[1, 0]).real
    # tr(alpha^{-1} f) via the adjugate, avoiding an explicit inverse.
    tr = (a[1, 1] * f[0, 0] + a[0, 0] * f[1, 1] - a[0, 1] * f[1, 0] - a[1, 0] * f[0, 1]).real
    t1 = tr / det_a
    t2 = det_f / det_a
    disc = max(t1 * t1 - 4.0 * t2, 0.0)
    root = math.sqrt(disc)
    return (0.5 * (t1 + root), 0.5 * (t1 - root))


def lagrangian_phase(lam) -> float:
    """Sum of arctangents of the eigenvalues, in (-pi, pi)."""
    return math.atan(lam[0]) + math.atan(lam[1])


def zeta_v(lam):
    """(prod(1 + i*lam_p), sqrt(prod(1 + lam_p^2)))."""
    z = complex(1.0 - lam[0] * lam[1], lam[0] + lam[1])
    v = math.sqrt((1.0 + lam[0] ** 2) * (1.0 + lam[1] ** 2))
    return z, v


def phase_from_arg(z: complex) -> float:
    """Principal argument in (-pi, pi); rejects the cut (-inf, 0].

    A cut value cannot arise from a genuine Hermitian pencil, so hitting it
    signals bad input rather than a numerical edge case.
    """
    if z.imag == 0.0 and z.real <= 0.0:
        raise BranchCutError(f"argument undefined on the branch cut: {z}")
    return math.atan2(z.imag, z.real)


def eta_metric(pair: HermitianPair) -> np.ndarray:
    """alpha + f alpha^{-1} f: Hermitian, >= alpha, equals diag(1 + lam^2) in
    any frame where alpha is the identity and f is diagonal."""
    a, f = pair.alpha, pair.f
    inv_a = np.linalg.inv(a)
    return symmetrize(a + f @ inv_a @ f, tol=math.inf)


def hypercritical(lam) -> bool:
    """True iff the phase exceeds pi/2 (both eigenvalues > 0, product > 1)."""
    return lagrangian_phase(lam) > 0.5 * math.pi


def phase_point(pair: HermitianPair) -> PhasePoint:
    lam = pencil_eigenvalues(pair)
    z, v = zeta_v(lam)
    return PhasePoint(lam=lam, theta=phase_from_arg(z), zeta=z, v=v, eta=eta_metric(pair))


def _cot(x: float) -> float:
    return math.cos(x) / math.sin(x)


def subsolution_gap(
    gamma: float,
    delta: float,
    theta_hat: float,
    r_min: float,
    x_max: float,
    step: float,
    block: int = 256,
) -> float:
    """Scanned minimum of the concavity gap function

        G(x1, x2) = sum_p arctan(x_p) - theta_hat
                    - sum_p (cot(theta_hat) + x_p) / (1 + x_p^2)
                    + sum_p delta / (1 + x_p^2)

    over {pi/2 + gamma <= arctan(x1) + arctan(x2) <= pi - gamma, r_min <= x1 <= x_max},
    scanning uniformly in (arctan(x1), arctan(x2)) with the given step so the
    unbounded region maps to a bounded rectangle.  A positive return witnesses
    the strict-positivity constant on the scanned window; no claim is made
    about the sharp constant.
    """
    if gamma <= 0 or delta <= 0 or step <= 0:
        raise ValueError("gamma, delta and step must be positive")
    half_pi = 0.5 * math.pi
    if not (half_pi + gamma <= theta_hat <= math.pi - gamma):
        raise ValueError("theta_hat must lie in [pi/2 + gamma, pi - gamma]")
    if not (r_min < x_max):
        raise ValueError("need r_min < x_max")
    c_hat = _cot(theta_hat)
    u1 = np.arange(math.atan(r_min), math.atan(x_max) + 0.5 * step, step)
    u1 = u1[u1 < half_pi]
    lo_all = np.maximum(half_pi + gamma - u1, -half_pi + step)
    hi_all = np.minimum(math.pi - gamma - u1, half_pi - step)
    if not np.any(lo_all <= hi_all):
        raise ValueError("empty scan domain")
    u2_lo = float(np.min(lo_all[lo_all <= hi_all]))
    u2_hi = float(np.max(hi_all[lo_all <= hi_all]))
    u2 = np.arange(u2_lo, u2_hi + 0.5 * step, step)
    best = math.inf
    for start in range(0, u1.size, block):
        a = u1[start : start + block, None]
        b = u2[None, :]
        s = a + b
        mask = (s >= half_pi + gamma) & (s <= math.pi - gamma)
        if not mask.any():
            continue
        x1 = np.tan(a)
        x2 = np.tan(b)
        w1 = 1.0 / (1.0 + x1 * x1)
        w2 = 1.0 / (1.0 + x2 * x2)
        g = (
            s
            - theta_hat
            - (c_hat + x1) * w1
            - (c_hat + x2) * w2
            + delta * (w1 + w2)
        )
        m = float(np.min(g[mask]))
        if m < best:
            best = m
    if not math.isfinite(best):
        raise ValueError("empty scan domain")
    return best


def subsolution_gap_limit(theta: float, theta_hat: float, delta: float = 0.0) -> float:
    """Boundary value of the gap scan as x1 -> inf with theta = pi/2 + arctan(x2),
    scaled by 1 + cot(theta)^2:

        (1 + cot(theta)^2) (theta - theta_hat) + cot(theta) - cot(theta_hat) + delta.

    Vanishes at theta = theta_hat when delta = 0 and is non-negative on
    (pi/2, pi) by concavity of the cotangent there.
    """
    return (1.0 + _cot(theta) ** 2) * (theta - theta_hat) + _cot(theta) - _cot(theta_hat) + delta
