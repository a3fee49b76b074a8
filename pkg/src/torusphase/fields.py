"""Periodic fields on the flat torus and their spectral calculus.

The unit cell is [0,1)^4 with complex coordinates z1 = x1 + i*x2 and
z2 = x3 + i*x4 (or [0,1)^2 with z = x1 + i*x2 in the one-complex-dimension
sanity mode).  All derivatives are global Fourier derivatives, exact for
band-limited data, and quadrature is the plain grid mean, which is the
exact integral for trigonometric polynomials below the aliasing threshold.
This is what turns the cohomological identities of the problem (potential
independence of the total charge, vanishing of integrated Hessian traces)
into machine-precision statements.

Volume normalisation: a constant positive Hermitian matrix a stands for the
form i * sum_jk a_jk dz_j dz_k-bar, whose top power has density
n! * 2**n * det(a) against dx1..dx_{2n}.  For the identity matrix in two
complex dimensions the cell volume is 8.

Sign conventions for derivatives: d/dz_j = (d/dx_{2j-1} - i d/dx_{2j})/2.
First derivatives zero the Nyquist mode (keeps real fields real); second
derivatives keep it with the standard -(pi*n)^2 interpretation.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

_ENV_WORKERS = "TORUSPHASE_WORKERS"


def fft_workers() -> int:
    """Worker count for the FFT backend, from TORUSPHASE_WORKERS (default: all cores).

    scipy's pooled FFT is bitwise reproducible for any worker count, so this
    setting can never change numerical output.
    """
    raw = os.environ.get(_ENV_WORKERS)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{_ENV_WORKERS} must be an integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"{_ENV_WORKERS} must be >= 1, got {n}")
    return n


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: n_per_dim points per real dimension."""

    n_per_dim: int
    dims: int = 4

    def __post_init__(self):
        if self.dims not in (2, 4):
            raise ValueError("dims must be 4 (two complex dims) or 2 (sanity mode)")
        if self.n_per_dim < 4 or self.n_per_dim % 2:
            raise ValueError("n_per_dim must be even and >= 4")

    @property
    def shape(self):
        return (self.n_per_dim,) * self.dims

    @property
    def n_complex(self) -> int:
        return self.dims // 2

    @property
    def npoints(self) -> int:
        return self.n_per_dim**self.dims

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_per_dim


@dataclass
class ScalarField:
    """Real scalar grid function on the torus."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scalar field contains non-finite values")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def mean(self) -> float:
        return float(self.values.mean())


_HERM_TOL = 1e-10


@dataclass
class HermitianField:
    """Pointwise 2x2 Hermitian matrix field, stored as (h11, h12, h22).

    h11 and h22 are real arrays, h12 is complex; the 21 entry is implicitly
    conj(h12).
    """

    grid: GridSpec
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray

    def __post_init__(self):
        self.h11 = np.asarray(self.h11, dtype=np.float64)
        self.h12 = np.asarray(self.h12, dtype=np.complex128)
        self.h22 = np.asarray(self.h22, dtype=np.float64)
        for a in (self.h11, self.h12, self.h22):
            if a.shape != self.grid.shape:
                raise ValueError("entry shape does not match grid")
            if not np.all(np.isfinite(a)):
                raise ValueError("Hermitian field contains non-finite values")

    @classmethod
    def from_matrices(cls, grid: GridSpec, m: np.ndarray) -> "HermitianField":
        """Build from an array of shape grid.shape + (2, 2), checking Hermiticity."""
        m = np.asarray(m, dtype=np.complex128)
        asym = np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))))
        if asym > _HERM_TOL:
            raise ValueError(f"field is not Hermitian: max asymmetry {asym:.3e}")
        m = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
        return cls(grid, m[..., 0, 0].real, m[..., 0, 1], m[..., 1, 1].real)

    def matrices(self) -> np.ndarray:
        """Dense grid.shape + (2, 2) complex array (for tests and oracles)."""
        out = np.empty(self.grid.shape + (2, 2), dtype=np.complex128)
        out[..., 0, 0] = self.h11
        out[..., 0, 1] = self.h12
        out[..., 1, 0] = np.conj(self.h12)
        out[..., 1, 1] = self.h22
        return out

    def add_constant(self, m: np.ndarray) -> "HermitianField":
        m = np.asarray(m, dtype=np.complex128)
        return HermitianField(
            self.grid, self.h11 + m[0, 0].real, self.h12 + m[0, 1], self.h22 + m[1, 1].real
        )


def grid_coords(grid: GridSpec):
    """Broadcastable coordinate arrays (x1, ..., x_dims), each in [0, 1)."""
    n, d = grid.n_per_dim, grid.dims
    x = np.arange(n) / n
    return tuple(x.reshape((1,) * m + (n,) + (1,) * (d - m - 1)) for m in range(d))


@lru_cache(maxsize=8)
def _tables(n: int, dims: int):
    """Spectral symbol tables on the rfft grid of shape (n,)*(dims-1) + (n//2+1,)."""
    ks = []
    for m in range(dims):
        if m == dims - 1:
            k = np.arange(n // 2 + 1, dtype=np.float64)
        else:
            k = np.fft.fftfreq(n) * n
        ks.append(k.reshape((1,) * m + (-1,) + (1,) * (dims - m - 1)))
    pi2 = math.pi**2
    tab = {}
    if dims == 4:
        k1, k2, k3, k4 = ks
        tab["h"] = (
            -pi2 * (k1 * k1 + k2 * k2),  # d/dz1 d/dz1bar
            -pi2 * (k3 * k3 + k4 * k4),  # d/dz2 d/dz2bar
            -pi2 * (k1 * k3 + k2 * k4),  # Re d/dz1 d/dz2bar
            -pi2 * (k1 * k4 - k2 * k3),  # Im d/dz1 d/dz2bar
        )
    else:
        k1, k2 = ks
        tab["h"] = (-pi2 * (k1 * k1 + k2 * k2),)
    # First-derivative factors 2*pi*k with the Nyquist line zeroed.
    dks = []
    for m, k in enumerate(ks):
        dk = 2.0 * math.pi * k.copy()
        if m == dims - 1:
            dk[..., -1] = 0.0
        else:
            idx = [slice(None)] * dims
            idx[m] = n // 2
            dk[tuple(idx)] = 0.0
        dks.append(dk)
    tab["d1"] = tuple(dks)
    for v in tab["h"] + tab["d1"]:
        v.flags.writeable = False
    return tab


def _rfftn(values):
    return _fft.rfftn(values, workers=fft_workers())


def _irfftn(spec, shape):
    return _fft.irfftn(spec, s=shape, axes=tuple(range(len(shape))), workers=fft_workers())


def complex_hessian(phi: ScalarField) -> HermitianField:
    """Mixed complex Hessian d^2 phi / dz_j dz_k-bar by Fourier differentiation.

    Exact for band-limited fields; the output is Hermitian by construction.
    Requires the full two-complex-dimension grid; use complex_hessian_entries
    in the sanity mode.
    """
    if phi.grid.dims != 4:
        raise ValueError("complex_hessian needs dims=4; see complex_hessian_entries")
    h11, h12, h22 = complex_hessian_entries(phi)
    return HermitianField(phi.grid, h11, h12, h22)


def complex_hessian_entries(phi: ScalarField):
    """Hessian entries as plain arrays: (h11,) in sanity mode, (h11, h12, h22) else."""
    g = phi.grid
    spec = _rfftn(phi.values)
    tab = _tables(g.n_per_dim, g.dims)["h"]
    if g.dims == 4:
        s11, s22, sp, sq = tab
        h11 = _irfftn(s11 * spec, g.shape)
        h22 = _irfftn(s22 * spec, g.shape)
        h12 = _irfftn(sp * spec, g.shape) + 1j * _irfftn(sq * spec, g.shape)
        return h11, h12, h22
    (s11,) = tab
    return (_irfftn(s11 * spec, g.shape),)


def gradient_z(f: ScalarField):
    """Holomorphic-coordinate gradient (df/dz_1, df/dz_2) as complex arrays.

    In sanity mode returns a 1-tuple.  d/dz_j = (d/dx_{2j-1} - i d/dx_{2j})/2.
    """
    g = f.grid
    spec = _rfftn(f.values)
    dks = _tables(g.n_per_dim, g.dims)["d1"]
    d = [_irfftn((1j * dk) * spec, g.shape) for dk in dks]
    return tuple(0.5 * (d[2 * j] - 1j * d[2 * j + 1]) for j in range(g.n_complex))


def volume_weight(alpha: np.ndarray, n_complex: int = 2) -> float:
    """Density of the top power of the constant form alpha against dx^1..dx^{2n}."""
    a = np.asarray(alpha)
    if n_complex == 2:
        det = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]).real
    else:
        det = float(np.asarray(a).reshape(-1)[0].real)
    return math.factorial(n_complex) * 2.0**n_complex * det


def integrate(f, alpha: np.ndarray, grid: GridSpec | None = None):
    """Integral of f against the top power of the constant form alpha.

    f may be a ScalarField or a (possibly complex) grid array.  The grid mean
    is the exact integral below the aliasing threshold.
    """
    if isinstance(f, ScalarField):
        values, grid = f.values, f.grid
    else:
        values = np.asarray(f)
        if grid is None:
            raise ValueError("grid required when integrating a bare array")
    w = volume_weight(alpha, grid.n_complex)
    out = values.mean() * w
    return complex(out) if np.iscomplexobj(values) else float(out)


def _hessian_symbol(grid: GridSpec, winv: np.ndarray):
    """Fourier symbol of u -> tr(winv . Hessian(u)) for a constant Hermitian winv."""
    tab = _tables(grid.n_per_dim, grid.dims)["h"]
    if grid.dims == 4:
        s11, s22, sp, sq = tab
        return (
            winv[0, 0].real * s11
            + winv[1, 1].real * s22
            + 2.0 * (winv[0, 1].real * sp + winv[0, 1].imag * sq)
        )
    return float(np.asarray(winv).reshape(-1)[0].real) * tab[0]


def _as_inverse_metric(coeff: np.ndarray, n_complex: int) -> np.ndarray:
    c = np.asarray(coeff, dtype=np.complex128)
    if n_complex == 1:
        c = c.reshape(1, 1)
        if c[0, 0].real <= 0:
            raise ValueError("coefficient must be positive")
        return np.array([[1.0 / c[0, 0]]])
    det = (c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]).real
    if c[0, 0].real <= 0 or det <= 0:
        raise ValueError("coefficient matrix must be positive definite")
    return np.array([[c[1, 1], -c[0, 1]], [-c[1, 0], c[0, 0]]], dtype=np.complex128) / det


def laplacian_apply(f: ScalarField, coeff: np.ndarray) -> ScalarField:
    """Constant-coefficient Laplacian tr(coeff^{-1} Hessian(f))."""
    winv = _as_inverse_metric(coeff, f.grid.n_complex)
    sym = _hessian_symbol(f.grid, winv)
    return ScalarField(f.grid, _irfftn(sym * _rfftn(f.values), f.grid.shape))


def solve_constant_laplacian(rhs: ScalarField, coeff: np.ndarray) -> ScalarField:
    """Invert the constant-coefficient Laplacian on the zero-mean subspace.

    Returns u with tr(coeff^{-1} Hessian(u)) = rhs - mean(rhs) and mean(u) = 0.
    """
    winv = _as_inverse_metric(coeff, rhs.grid.n_complex)
    sym = _hessian_symbol(rhs.grid, winv)
    spec = _rfftn(rhs.values)
    out = np.zeros_like(spec)
    nz = sym != 0.0
    out[nz] = spec[nz] / sym[nz]
    return ScalarField(rhs.grid, _irfftn(out, rhs.grid.shape))


def helmholtz_solve(rhs: ScalarField, coeff: np.ndarray, shift: float) -> ScalarField:
    """Solve (1 - shift * Laplacian_coeff) u = rhs.  shift >= 0 keeps it well posed."""
    if shift < 0:
        raise ValueError("shift must be non-negative")
    winv = _as_inverse_metric(coeff, rhs.grid.n_complex)
    sym = _hessian_symbol(rhs.grid, winv)
    spec = _rfftn(rhs.values)
    return ScalarField(rhs.grid, _irfftn(spec / (1.0 - shift * sym), rhs.grid.shape))


def random_bandlimited(
    grid: GridSpec, max_mode: int, amplitude: float, rng: np.random.Generator
) -> ScalarField:
    """Zero-mean random field with Fourier support in |k_m| <= max_mode.

    Keeping max_mode well below the Nyquist frequency makes low-order products
    of such fields alias-free, which the exactness tests rely on.
    """
    n, d = grid.n_per_dim, grid.dims
    if not 0 < max_mode < n // 2:
        raise ValueError("max_mode must be in (0, n_per_dim/2)")
    spec = np.zeros(grid.shape, dtype=np.complex128)
    ks = [np.fft.fftfreq(n) * n for _ in range(d)]
    mesh = np.meshgrid(*ks, indexing="ij")
    mask = np.ones(grid.shape, dtype=bool)
    for km in mesh:
        mask &= np.abs(km) <= max_mode
    mask[(0,) * d] = False
    cnt = int(mask.sum())
    spec[mask] = rng.standard_normal(cnt) + 1j * rng.standard_normal(cnt)
    vals = np.real(_fft.ifftn(spec, workers=fft_workers()))
    top = np.max(np.abs(vals))
    if top > 0:
        vals *= amplitude / top
    return ScalarField(grid, vals)


_SNAP_MAGIC = b"TPF1"


def save_field(path, f: ScalarField) -> None:
    """Write a field snapshot: magic 'TPF1', uint32 dims, uint32 n_per_dim,
    then n_per_dim**dims little-endian float64 values in row-major order."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", _SNAP_MAGIC, f.grid.dims, f.grid.n_per_dim))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path) -> ScalarField:
    """Read a field snapshot written by save_field."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) != 12:
            raise ValueError("snapshot truncated")
        magic, dims, n = struct.unpack("<4sII", head)
        if magic != _SNAP_MAGIC:
            raise ValueError("not a field snapshot (bad magic)")
        grid = GridSpec(n_per_dim=n, dims=dims)
        raw = fh.read(8 * grid.npoints)
        if len(raw) != 8 * grid.npoints:
            raise ValueError("snapshot truncated")
        vals = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(grid.shape)
    return ScalarField(grid, vals)
