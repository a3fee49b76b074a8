"""Global functionals of a potential on a fixed torus background.

A background is a constant positive Hermitian form alpha together with a
closed Hermitian form built from a constant matrix plus the complex Hessian
of a fixed bump potential.  For a potential phi the evolving form is
F_phi = F_hat + Hessian(phi); its pointwise pencil data feed

    total charge      Z = integral of zeta over the cell (a complex number
                      depending only on the constant parts, to rounding),
    target phase      theta_hat = Arg(Z), with cot(theta_hat) = Re(Z)/Im(Z),
    volume            V = integral of v,
    complex energy    CY = (1/3) * sum_j integral of phi * (alpha + i F_phi)^j
                      wedge (alpha + i F_hat)^(2-j),
    I = Im(CY),  J = -Im(exp(-i theta_hat) * CY),
    dissipation       integral of |d theta|^2_eta * v,
    residuals         sup / L2 of v sin(theta - theta_hat), and the
                      Monge-Ampere form cot(theta_hat) Im(zeta) - Re(zeta).

Mixed wedges are evaluated by determinant polarisation,
A ^ B = det(A + B) - det(A) - det(B) on the 2x2 coefficient matrices; the
entrywise expansion is kept in the tests as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fields import (
    GridSpec,
    HermitianField,
    ScalarField,
    complex_hessian,
    gradient_z,
    volume_weight,
)
from .hermitian import BranchCutError, is_positive_definite, symmetrize

HALF_PI = 0.5 * math.pi


def wedge_number(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection number of two constant Hermitian forms on the unit cell."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    perm = (a[0, 0] * b[1, 1] + a[1, 1] * b[0, 0] - a[0, 1] * b[1, 0] - a[1, 0] * b[0, 1]).real
    return 4.0 * perm


def top_number(a: np.ndarray) -> float:
    """Self-intersection of a constant Hermitian form (8 det for 2x2)."""
    return wedge_number(a, a)


def class_charge(alpha: np.ndarray, f_const: np.ndarray) -> complex:
    """Charge from intersection numbers alone:
    [alpha]^2 - [f]^2 + 2i [alpha].[f]."""
    return complex(
        top_number(alpha) - top_number(f_const), 2.0 * wedge_number(alpha, f_const)
    )


@dataclass
class BackgroundData:
    """Frozen data of one torus background; built by make_background."""

    grid: GridSpec
    alpha: np.ndarray
    f_hat_const: np.ndarray
    f_hat_bump: ScalarField | None
    f_hat: HermitianField
    z: complex
    theta_hat: float
    cot_theta_hat: float
    # cached alpha scalars
    a11: float = 0.0
    a12: complex = 0.0
    a22: float = 0.0
    ia11: float = 0.0
    ia12: complex = 0.0
    ia22: float = 0.0
    det_alpha: float = 0.0
    inv_det_alpha: float = 0.0
    weight: float = 0.0
    det_hat: np.ndarray = field(default=None, repr=False)  # det(alpha + i F_hat) per point

    @property
    def sin_theta_hat(self) -> float:
        return math.sin(self.theta_hat)

    @property
    def cos_theta_hat(self) -> float:
        return math.cos(self.theta_hat)


def _alpha_scalars(alpha: np.ndarray):
    a11 = alpha[0, 0].real
    a12 = complex(alpha[0, 1])
    a22 = alpha[1, 1].real
    det = a11 * a22 - (a12.real**2 + a12.imag**2)
    return a11, a12, a22, a22 / det, -a12 / det, a11 / det, det


def make_background(
    grid: GridSpec,
    alpha: np.ndarray,
    f_hat_const: np.ndarray,
    bump: ScalarField | None = None,
) -> BackgroundData:
    """Assemble a background and freeze its charge and target phase.

    The target phase is cohomological: it is computed once here and never
    recomputed along a flow.
    """
    if grid.dims != 4:
        raise ValueError("backgrounds need the full two-complex-dimension grid")
    alpha = symmetrize(alpha)
    f_hat_const = symmetrize(f_hat_const)
    if not is_positive_definite(alpha):
        raise ValueError("alpha must be positive definite")
    if bump is not None and bump.grid != grid:
        raise ValueError("bump grid mismatch")

    if bump is None:
        zero = np.zeros(grid.shape)
        f_hat = HermitianField(grid, zero + f_hat_const[0, 0].real,
                               np.zeros(grid.shape, np.complex128) + f_hat_const[0, 1],
                               zero + f_hat_const[1, 1].real)
    else:
        f_hat = complex_hessian(bump).add_constant(f_hat_const)

    a11, a12, a22, ia11, ia12, ia22, det = _alpha_scalars(alpha)
    bg = BackgroundData(
        grid=grid,
        alpha=alpha,
        f_hat_const=f_hat_const,
        f_hat_bump=bump,
        f_hat=f_hat,
        z=0j,
        theta_hat=0.0,
        cot_theta_hat=0.0,
        a11=a11,
        a12=a12,
        a22=a22,
        ia11=ia11,
        ia12=ia12,
        ia22=ia22,
        det_alpha=det,
        inv_det_alpha=1.0 / det,
        weight=volume_weight(alpha),
    )
    bg.det_hat = _det_shift(bg, f_hat.h11, f_hat.h12, f_hat.h22, 1.0)
    re_z, im_z, _, _, _, _ = kernels.pencil_phase(
        f_hat.h11, f_hat.h12, f_hat.h22, ia11, ia12, ia22, 1.0 / det
    )
    z = complex(re_z.mean(), im_z.mean()) * bg.weight
    if z.imag == 0.0 and z.real <= 0.0:
        raise BranchCutError(f"total charge {z} lies on the branch cut")
    bg.z = z
    bg.theta_hat = math.atan2(z.imag, z.real)
    bg.cot_theta_hat = z.real / z.imag if z.imag != 0.0 else math.inf
    return bg


@dataclass
class StateCache:
    """Potential plus its derived pointwise pencil fields."""

    phi: ScalarField
    f11: np.ndarray
    f12: np.ndarray
    f22: np.ndarray
    re_zeta: np.ndarray
    im_zeta: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    _eta: tuple | None = field(default=None, repr=False)

    def eta_inverse(self, bg: BackgroundData):
        """(e11, e12, e22) entries of eta^{-1}, computed once per state."""
        if self._eta is None:
            self._eta = kernels.eta_inv(
                self.f11, self.f12, self.f22,
                bg.a11, bg.a12, bg.a22, bg.ia11, bg.ia12, bg.ia22,
            )
        return self._eta

    def hypercritical_everywhere(self) -> bool:
        return float(self.theta.min()) > HALF_PI


def evaluate_state(phi: ScalarField, bg: BackgroundData) -> StateCache:
    """Pointwise pencil data of F_hat + Hessian(phi)."""
    h11, h12, h22 = _hessian_tuple(phi)
    f11 = bg.f_hat.h11 + h11
    f12 = bg.f_hat.h12 + h12
    f22 = bg.f_hat.h22 + h22
    re_z, im_z, theta, v, lam1, lam2 = kernels.pencil_phase(
        f11, f12, f22, bg.ia11, bg.ia12, bg.ia22, bg.inv_det_alpha
    )
    return StateCache(phi, f11, f12, f22, re_z, im_z, theta, v, lam1, lam2)


def _hessian_tuple(phi: ScalarField):
    h = complex_hessian(phi)
    return h.h11, h.h12, h.h22


def _ensure_state(state_or_phi, bg: BackgroundData) -> StateCache:
    if isinstance(state_or_phi, StateCache):
        return state_or_phi
    return evaluate_state(state_or_phi, bg)


def _det_shift(bg: BackgroundData, f11, f12, f22, c0: float):
    """det(c0 * alpha + i F) per point (complex)."""
    d11 = c0 * bg.a11 + 1j * f11
    d22 = c0 * bg.a22 + 1j * f22
    d12 = c0 * bg.a12 + 1j * f12
    d21 = c0 * np.conj(bg.a12) + 1j * np.conj(f12)
    return d11 * d22 - d12 * d21


def compute_z_theta(bg: BackgroundData) -> tuple[complex, float]:
    """(Z, theta_hat) as frozen on the background."""
    return bg.z, bg.theta_hat


def volume_functional(state_or_phi, bg: BackgroundData) -> float:
    """Integral of the pointwise volume density v."""
    state = _ensure_state(state_or_phi, bg)
    return float(state.v.mean()) * bg.weight


def cy_complex(state_or_phi, bg: BackgroundData) -> complex:
    """Complex energy CY(phi); CY(phi + c) = CY(phi) + c Z."""
    state = _ensure_state(state_or_phi, bg)
    phi = state.phi.values
    det_phi = _det_shift(bg, state.f11, state.f12, state.f22, 1.0)
    det_sum = _det_shift(
        bg, bg.f_hat.h11 + state.f11, bg.f_hat.h12 + state.f12, bg.f_hat.h22 + state.f22, 2.0
    )
    mixed = det_sum - bg.det_hat - det_phi
    total = 8.0 * (phi * bg.det_hat).mean() + 4.0 * (phi * mixed).mean() + 8.0 * (
        phi * det_phi
    ).mean()
    return complex(total) / 3.0


def i_functional(state_or_phi, bg: BackgroundData) -> float:
    """I = Re(exp(-i pi/2) CY) = Im(CY); decreases along the flow."""
    return cy_complex(state_or_phi, bg).imag


def j_functional(state_or_phi, bg: BackgroundData) -> float:
    """J = -Im(exp(-i theta_hat) CY); invariant under constant shifts of phi."""
    cy = cy_complex(state_or_phi, bg)
    return -(cy * np.exp(-1j * bg.theta_hat)).imag


def dissipation(state_or_phi, bg: BackgroundData) -> float:
    """Integral of |d theta|^2_eta * v; equals -dV/dt along the flow."""
    state = _ensure_state(state_or_phi, bg)
    g1, g2 = gradient_z(ScalarField(state.phi.grid, state.theta))
    e11, e12, e22 = state.eta_inverse(bg)
    dens = kernels.grad_quadratic(e11, e12, e22, g1, g2) * state.v
    return float(dens.mean()) * bg.weight


def dhym_residual(state_or_phi, bg: BackgroundData) -> tuple[float, float]:
    """(sup, weighted L2) of the phase residual v sin(theta - theta_hat)."""
    state = _ensure_state(state_or_phi, bg)
    r = state.v * np.sin(state.theta - bg.theta_hat)
    sup = float(np.max(np.abs(r)))
    l2 = math.sqrt(float((r * r).mean()) * bg.weight)
    return sup, l2


def ma_residual(state_or_phi, bg: BackgroundData) -> float:
    """Sup of the Monge-Ampere residual
    det(alpha^{-1}(cot(theta_hat) alpha + F)) - (1 + cot(theta_hat)^2),
    which reduces pointwise to cot(theta_hat) Im(zeta) - Re(zeta)."""
    state = _ensure_state(state_or_phi, bg)
    if not math.isfinite(bg.cot_theta_hat):
        raise ValueError("cot(theta_hat) is infinite; Monge-Ampere form undefined")
    m = bg.cot_theta_hat * state.im_zeta - state.re_zeta
    return float(np.max(np.abs(m)))


def ma_identity_gap(state_or_phi, bg: BackgroundData) -> float:
    """Sup distance between the two routes to the Monge-Ampere residual:
    the zeta form above against the wedge recombination
    2 cot(theta_hat) (alpha ^ F)/alpha^2 + F^2/alpha^2 - 1."""
    state = _ensure_state(state_or_phi, bg)
    m_zeta = bg.cot_theta_hat * state.im_zeta - state.re_zeta
    perm = (
        bg.a11 * state.f22
        + bg.a22 * state.f11
        - 2.0 * (bg.a12.real * state.f12.real + bg.a12.imag * state.f12.imag)
    )
    det_f = state.f11 * state.f22 - (state.f12.real**2 + state.f12.imag**2)
    m_wedge = (bg.cot_theta_hat * perm + det_f) * bg.inv_det_alpha - 1.0
    return float(np.max(np.abs(m_zeta - m_wedge)))


def phase_drift_identity(state_or_phi, bg: BackgroundData) -> float:
    """Sup defect of the arctangent rewriting of theta - theta_hat.

    With theta and theta_hat both in (pi/2, pi),

      theta - theta_hat = arctan( m / ((1 + cot^2) (Re(zeta) sin cos + Im(zeta) sin^2)) )

    where m is the Monge-Ampere residual and sin, cos are taken at theta_hat.
    The identity is exact; only rounding should remain.
    """
    state = _ensure_state(state_or_phi, bg)
    if not (HALF_PI < bg.theta_hat < math.pi):
        raise ValueError("theta_hat must lie in (pi/2, pi)")
    if not state.hypercritical_everywhere():
        raise ValueError("state is not hypercritical at every grid point")
    s, c = bg.sin_theta_hat, bg.cos_theta_hat
    m = bg.cot_theta_hat * state.im_zeta - state.re_zeta
    denom = (1.0 + bg.cot_theta_hat**2) * (state.re_zeta * s * c + state.im_zeta * s * s)
    rhs = np.arctan(m / denom)
    lhs = state.theta - bg.theta_hat
    return float(np.max(np.abs(lhs - rhs)))


@dataclass
class FunctionalReport:
    """One state's monitor values."""

    cy: complex
    i_val: float
    j_val: float
    v_val: float
    dissipation: float
    res_dhym_sup: float
    res_dhym_l2: float
    res_ma_sup: float


def functional_report(state_or_phi, bg: BackgroundData) -> FunctionalReport:
    state = _ensure_state(state_or_phi, bg)
    cy = cy_complex(state, bg)
    sup, l2 = dhym_residual(state, bg)
    return FunctionalReport(
        cy=cy,
        i_val=cy.imag,
        j_val=-(cy * np.exp(-1j * bg.theta_hat)).imag,
        v_val=volume_functional(state, bg),
        dissipation=dissipation(state, bg),
        res_dhym_sup=sup,
        res_dhym_l2=l2,
        res_ma_sup=ma_residual(state, bg),
    )


def linearized_phase(state: StateCache, bg: BackgroundData, psi: ScalarField) -> np.ndarray:
    """Directional derivative of theta at the state: tr(eta^{-1} Hessian(psi))."""
    h11, h12, h22 = _hessian_tuple(psi)
    e11, e12, e22 = state.eta_inverse(bg)
    return kernels.trace_contract(e11, e12, e22, h11, h12, h22)
