"""Discrete Fourier realization of fractional Laplacian powers on a periodic box.

The box is [-L, L)^N sampled at M cells per axis (M a power of two), cell
centers x_i = -L + i*h with h = 2L/M.  The frequency lattice is
xi_k = pi*k/L for k in {-M/2, ..., M/2-1} per axis.

Transform convention: ``coeffs = h^(N/2) * fftn(values, norm="ortho")``.
With this scaling the discrete Plancherel identity

    sum |coeffs|^2  ==  sum values^2 * cell_volume

holds with no extra weights, and the homogeneous Sobolev norm is the plain
spectral sum  sum |xi|^(2s) |coeffs|^2.

The zero-frequency multiplier of |xi|^sigma is 0 for sigma > 0, 1 for
sigma == 0 and 0 for sigma < 0 (pseudo-inverse on mean-zero fields).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGrid, NegativeOrderOnNonMeanZero, NonRealResult

__all__ = [
    "Grid",
    "Field",
    "SpectralField",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "frac_power",
    "hs_inner",
    "field_to_bytes",
    "field_from_bytes",
    "DEFAULT_MAX_POINTS",
]

DEFAULT_MAX_POINTS = 2 ** 24

_IMAG_TOL = 1e-10
_MEAN_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Periodic computational box; immutable and safe for concurrent reads."""

    dim: int
    points_per_dim: int
    half_width: float
    spacing: float = field(init=False)
    cell_volume: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "spacing", 2.0 * self.half_width / self.points_per_dim)
        object.__setattr__(self, "cell_volume", self.spacing ** self.dim)
        object.__setattr__(self, "_axis", -self.half_width + self.spacing * np.arange(self.points_per_dim))
        k = 2.0 * np.pi * np.fft.fftfreq(self.points_per_dim, d=self.spacing)
        mats = np.meshgrid(*([k] * self.dim), indexing="ij")
        xi = np.sqrt(sum(m * m for m in mats))
        xi.setflags(write=False)
        object.__setattr__(self, "_xi", xi)
        self._axis.setflags(write=False)

    @property
    def shape(self):
        return (self.points_per_dim,) * self.dim

    @property
    def total_points(self):
        return self.points_per_dim ** self.dim

    @property
    def axis(self):
        """Cell-center coordinates along one axis."""
        return self._axis

    @property
    def xi_norm(self):
        """|xi| on the full frequency lattice, shape (M,)*N."""
        return self._xi

    def coords(self):
        """Cell-center coordinate arrays, one per axis, each shaped (M,)*N."""
        return np.meshgrid(*([self._axis] * self.dim), indexing="ij")

    def radii(self, center):
        """Euclidean distance from every cell center to ``center``."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.shape != (self.dim,):
            raise InvalidGrid(f"center must have {self.dim} components, got {center.shape}")
        return np.sqrt(sum((c - c0) ** 2 for c, c0 in zip(self.coords(), center)))


@dataclass(frozen=True)
class Field:
    """Real samples of a function at the cell centers of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            if v.size == self.grid.total_points:
                v = v.reshape(self.grid.shape)
            else:
                raise InvalidGrid(f"field shape {v.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidGrid("field contains non-finite entries")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients of a Field (unitary, Plancherel-preserving)."""

    grid: Grid
    coeffs: np.ndarray


def make_grid(dim, points_per_dim, half_width, max_points=DEFAULT_MAX_POINTS):
    """Build a Grid; raises InvalidGrid on bad parameters or memory-cap breach."""
    if dim < 1:
        raise InvalidGrid(f"dim must be >= 1, got {dim}")
    M = int(points_per_dim)
    if M < 4 or (M & (M - 1)) != 0:
        raise InvalidGrid(f"points_per_dim must be a power of two >= 4, got {points_per_dim}")
    if not half_width > 0:
        raise InvalidGrid(f"half_width must be positive, got {half_width}")
    if M ** dim > max_points:
        raise InvalidGrid(f"grid of {M}^{dim} points exceeds the cap of {max_points}")
    return Grid(dim=int(dim), points_per_dim=M, half_width=float(half_width))


def forward_transform(u):
    """Unitary DFT of a Field, scaled so Plancherel holds against cell sums."""
    g = u.grid
    coeffs = g.cell_volume ** 0.5 * np.fft.fftn(u.values, norm="ortho")
    return SpectralField(grid=g, coeffs=coeffs)


def inverse_transform(U):
    """Invert forward_transform; raises NonRealResult on broken conjugate symmetry."""
    g = U.grid
    w = np.fft.ifftn(U.coeffs, norm="ortho") / g.cell_volume ** 0.5
    scale = float(np.max(np.abs(w)))
    if scale > 0 and float(np.max(np.abs(w.imag))) > _IMAG_TOL * scale:
        raise NonRealResult(
            f"imaginary residue {np.max(np.abs(w.imag)) / scale:.3e} exceeds {_IMAG_TOL:.0e} relative"
        )
    return Field(grid=g, values=w.real)


def _multiplier(grid, sigma):
    xi = grid.xi_norm
    mult = np.empty_like(xi)
    nz = xi > 0
    mult[nz] = xi[nz] ** sigma
    mult[~nz] = 1.0 if sigma == 0 else 0.0
    return mult


def frac_power(u, sigma):
    """Apply (-Laplacian)^(sigma/2), the Fourier multiplier |xi|^sigma.

    For sigma < 0 the zero mode is annihilated (pseudo-inverse), which is
    only meaningful on mean-zero fields; a nonzero mean raises
    NegativeOrderOnNonMeanZero.
    """
    if sigma == 0:
        return u
    U = forward_transform(u)
    if sigma < 0:
        zero_amp = abs(U.coeffs[(0,) * u.grid.dim])
        total = float(np.sqrt(np.sum(np.abs(U.coeffs) ** 2)))
        if total > 0 and zero_amp > _MEAN_TOL * total:
            raise NegativeOrderOnNonMeanZero(
                f"zero mode {zero_amp:.3e} exceeds {_MEAN_TOL:.0e} of norm {total:.3e}"
            )
    out = SpectralField(grid=u.grid, coeffs=_multiplier(u.grid, sigma) * U.coeffs)
    return inverse_transform(out)


def hs_inner(u, v, s):
    """Homogeneous H^s inner product  sum |xi|^(2s) Re(u_hat conj(v_hat))."""
    cu = forward_transform(u).coeffs
    cv = forward_transform(v).coeffs
    w = _multiplier(u.grid, 2.0 * s)
    return float(np.sum(w * (cu * np.conj(cv)).real))


# ---------------------------------------------------------------------------
# Dump format: one JSON header line, then raw little-endian float64 values in
# lexicographic (C, row-major) order.  Byte layout is fixed; see README.

def field_to_bytes(u, extra_header=None):
    """Serialize a Field to the dump format (header line + raw payload)."""
    header = {
        "dim": u.grid.dim,
        "points_per_dim": u.grid.points_per_dim,
        "half_width": u.grid.half_width,
    }
    if extra_header:
        header.update(extra_header)
    payload = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    return json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + payload


def field_from_bytes(blob, max_points=DEFAULT_MAX_POINTS):
    """Parse the dump format back into a Field."""
    nl = blob.index(b"\n")
    header = json.loads(blob[:nl].decode("utf-8"))
    grid = make_grid(header["dim"], header["points_per_dim"], header["half_width"],
                     max_points=max_points)
    values = np.frombuffer(blob[nl + 1:], dtype="<f8", count=grid.total_points)
    return Field(grid=grid, values=values.reshape(grid.shape).copy())
