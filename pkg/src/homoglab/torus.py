"""Spectral calculus on the periodic unit cell [-1/2, 1/2)^d.

Everything downstream (cell problems, fibre solves, box solves) is built on
the discrete Fourier pair defined here.  Conventions:

* nodes per axis: y_i = -1/2 + i/n, i = 0..n-1 (n even);
* resolvable integer modes per axis: m in [-n/2, n/2), attached to the
  mode function exp(2*pi*i*m.y);
* frequency values are Fourier-series coefficients, so the mode-0
  coefficient of a field equals its cell mean and the map is unitary
  between the quadrature L2 norm in physical space, (1/n^d) * sum |f_i|^2,
  and the plain l2 norm of the coefficients.  Parseval is exact to
  rounding.

Quasimomentum shifts theta in [-pi, pi)^d enter only through the shifted
differential operators, which act as per-mode multipliers i*(2*pi*m + theta).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NonElliptic

ELLIPTICITY_FLOOR = 1e-10

PHYSICAL = "physical"
FREQUENCY = "frequency"


def validate_theta(theta, dim: int) -> np.ndarray:
    """Coerce theta to a float vector of length ``dim`` inside [-pi, pi)^d."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.shape != (dim,):
        raise ValueError(f"theta must have {dim} components, got shape {th.shape}")
    if np.any(th < -np.pi) or np.any(th >= np.pi):
        raise ValueError(f"theta {th} outside the dual cell [-pi, pi)^{dim}")
    return th


@dataclass(frozen=True)
class CellGrid:
    """Uniform tensor-product grid on the unit periodicity cell.

    Parameters
    ----------
    dim : 1 or 2.
    n : even number of points per axis, at least 8.
    """

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"points per axis must be even and >= 8, got {self.n}")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @cached_property
    def axis_nodes(self) -> np.ndarray:
        return -0.5 + np.arange(self.n) / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        """Physical coordinates, shape (dim, n, ..., n)."""
        grids = np.meshgrid(*(self.axis_nodes,) * self.dim, indexing="ij")
        return np.stack(grids)

    @cached_property
    def axis_modes(self) -> np.ndarray:
        # FFT ordering: 0, 1, ..., n/2-1, -n/2, ..., -1
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode vectors in FFT ordering, shape (dim, n, ..., n)."""
        grids = np.meshgrid(*(self.axis_modes,) * self.dim, indexing="ij")
        return np.stack(grids)

    @cached_property
    def phase(self) -> np.ndarray:
        # (-1)^(m_1 + ... + m_d); accounts for the -1/2 node offset in the DFT
        return (-1.0) ** np.sum(self.modes, axis=0)

    @cached_property
    def mode0_mask(self) -> np.ndarray:
        return np.all(self.modes == 0, axis=0)

    def wavevectors(self, theta=None) -> np.ndarray:
        """Shifted wavevectors 2*pi*m + theta, shape (dim, *shape)."""
        kappa = 2.0 * np.pi * self.modes.astype(float)
        if theta is not None:
            th = validate_theta(theta, self.dim)
            kappa = kappa + th.reshape((self.dim,) + (1,) * self.dim)
        return kappa


@dataclass
class SpectralField:
    """A scalar, d-vector or (1+d)-vector field on a :class:`CellGrid`.

    ``values`` has shape (ncomp, *grid.shape) and is complex.  The domain
    tag records whether the values are node samples or Fourier-series
    coefficients in FFT ordering.
    """

    grid: CellGrid
    values: np.ndarray
    domain: str = PHYSICAL

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        expected = self.grid.shape
        if self.values.ndim == self.grid.dim:
            self.values = self.values[np.newaxis]
        if self.values.shape[1:] != expected:
            raise ValueError(
                f"field values shape {self.values.shape} incompatible with grid {expected}"
            )
        if self.domain not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown domain tag {self.domain!r}")

    @property
    def ncomp(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.values.copy(), self.domain)

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, self.values[i : i + 1], self.domain)

    def _check_compatible(self, other: "SpectralField"):
        if self.grid != other.grid or self.domain != other.domain:
            raise ValueError("fields live on different grids or domains")
        if self.ncomp != other.ncomp:
            raise ValueError("component count mismatch")

    def __add__(self, other):
        self._check_compatible(other)
        return SpectralField(self.grid, self.values + other.values, self.domain)

    def __sub__(self, other):
        self._check_compatible(other)
        return SpectralField(self.grid, self.values - other.values, self.domain)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.values * scalar, self.domain)

    __rmul__ = __mul__


def zeros(grid: CellGrid, ncomp: int = 1, domain: str = FREQUENCY) -> SpectralField:
    return SpectralField(grid, np.zeros((ncomp,) + grid.shape, dtype=complex), domain)


def constant(grid: CellGrid, value, domain: str = PHYSICAL) -> SpectralField:
    vec = np.atleast_1d(np.asarray(value, dtype=complex))
    vals = np.broadcast_to(
        vec.reshape(vec.shape + (1,) * grid.dim), vec.shape + grid.shape
    ).copy()
    f = SpectralField(grid, vals, PHYSICAL)
    return f if domain == PHYSICAL else to_frequency(f)


def mode_field(grid: CellGrid, m, amplitude=1.0) -> SpectralField:
    """The single mode ``amplitude * exp(2*pi*i*m.y)`` in frequency form."""
    m = np.atleast_1d(np.asarray(m, dtype=int))
    f = zeros(grid, 1, FREQUENCY)
    idx = tuple(int(mi) % grid.n for mi in m)
    f.values[(0,) + idx] = amplitude
    return f


def random_field(
    grid: CellGrid, ncomp: int = 1, rng=None, max_mode: int | None = None
) -> SpectralField:
    """Random complex field; optionally band-limited to |m|_inf <= max_mode."""
    rng = np.random.default_rng(rng)
    vals = rng.standard_normal((ncomp,) + grid.shape) + 1j * rng.standard_normal(
        (ncomp,) + grid.shape
    )
    f = SpectralField(grid, vals, FREQUENCY)
    if max_mode is not None:
        keep = np.all(np.abs(grid.modes) <= max_mode, axis=0)
        f.values *= keep
    return f


def to_frequency(f: SpectralField) -> SpectralField:
    """Forward transform: node samples -> Fourier-series coefficients."""
    if f.domain != PHYSICAL:
        raise ValueError("to_frequency expects a physical-domain field")
    axes = tuple(range(1, 1 + f.grid.dim))
    coeff = np.fft.fftn(f.values, axes=axes) * (f.grid.phase / f.grid.size)
    return SpectralField(f.grid, coeff, FREQUENCY)


def to_physical(f: SpectralField) -> SpectralField:
    """Backward transform: Fourier-series coefficients -> node samples."""
    if f.domain != FREQUENCY:
        raise ValueError("to_physical expects a frequency-domain field")
    axes = tuple(range(1, 1 + f.grid.dim))
    vals = np.fft.ifftn(f.values * f.grid.phase, axes=axes) * f.grid.size
    return SpectralField(f.grid, vals, PHYSICAL)


def as_frequency(f: SpectralField) -> SpectralField:
    return f if f.domain == FREQUENCY else to_frequency(f)


def as_physical(f: SpectralField) -> SpectralField:
    return f if f.domain == PHYSICAL else to_physical(f)


def inner(f: SpectralField, g: SpectralField) -> complex:
    """L2(cell) inner product <f, g>; unitary in either domain."""
    f._check_compatible(g)
    s = np.vdot(g.values, f.values)  # sum conj(g) * f
    if f.domain == PHYSICAL:
        s /= f.grid.size
    return complex(s)

def norm(f: SpectralField) -> float:
    return float(np.sqrt(max(inner(f, f).real, 0.0)))


def cell_mean(f: SpectralField) -> np.ndarray:
    """Cell average per component (equals the mode-0 coefficient)."""
    if f.domain == FREQUENCY:
        return f.values[(slice(None),) + (0,) * f.grid.dim].copy()
    axes = tuple(range(1, 1 + f.grid.dim))
    return f.values.mean(axis=axes)


def h1_norm(f: SpectralField, theta=None) -> float:
    """H1(cell) norm sqrt(||f||^2 + ||(grad + i theta) f||^2) of a scalar field."""
    fh = as_frequency(f)
    kappa = f.grid.wavevectors(theta)
    weight = 1.0 + np.sum(kappa**2, axis=0)
    return float(np.sqrt(np.sum(weight * np.abs(fh.values) ** 2)))


def shifted_gradient(f: SpectralField, theta) -> SpectralField:
    """Apply (grad + i*theta) to a scalar field; returns a d-vector field."""
    if f.ncomp != 1:
        raise ValueError("shifted_gradient expects a scalar field")
    fh = as_frequency(f)
    kappa = f.grid.wavevectors(theta)
    vals = 1j * kappa * fh.values[0]
    return SpectralField(f.grid, vals, FREQUENCY)


def shifted_divergence(v: SpectralField, theta) -> SpectralField:
    """Apply (div + i*theta .) to a d-vector field; returns a scalar field.

    Satisfies the adjoint identity <shifted_gradient(p), v> = <p, -shifted_divergence(v)>.
    """
    if v.ncomp != v.grid.dim:
        raise ValueError(
            f"shifted_divergence expects {v.grid.dim} components, got {v.ncomp}"
        )
    vh = as_frequency(v)
    kappa = v.grid.wavevectors(theta)
    vals = np.sum(1j * kappa * vh.values, axis=0)
    return SpectralField(v.grid, vals[np.newaxis], FREQUENCY)


def replicate(f: SpectralField, factor: int) -> SpectralField:
    """Spectral replication y -> factor*y: the field x |-> f(factor * x).

    Maps the cell mode m to mode factor*m on a grid with factor*n points,
    which realises f(x / eps) for eps = 1/factor exactly (no aliasing).
    """
    if factor < 1:
        raise ValueError("replication factor must be a positive integer")
    fh = as_frequency(f)
    src = fh.grid
    dst = CellGrid(src.dim, src.n * factor)
    out = np.zeros((f.ncomp,) + dst.shape, dtype=complex)
    axis_map = (src.axis_modes * factor) % dst.n
    idx = np.ix_(*(axis_map,) * src.dim)
    for c in range(f.ncomp):
        out[c][idx] = fh.values[c]
    return SpectralField(dst, out, FREQUENCY)


# ---------------------------------------------------------------------------
# Periodic coefficients given as trigonometric polynomials
# ---------------------------------------------------------------------------


@dataclass
class CoefficientCell:
    """A periodic matrix- or scalar-valued coefficient on the unit cell.

    The coefficient is a trigonometric polynomial
        c(y) = sum_m amp[m] * exp(2*pi*i*m.y)
    stored as a list of (integer frequency vector, amplitude matrix) terms.
    Amplitudes have shape (r, r) with r = 1 (scalar kind) or r = dim
    (matrix kind); the constant term must be present.  Grid samples are
    cached per grid.
    """

    dim: int
    terms: list = field(default_factory=list)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        norm_terms = []
        rank = None
        for freq, amp in self.terms:
            fvec = tuple(int(x) for x in np.atleast_1d(freq))
            if len(fvec) != self.dim:
                raise ValueError(f"frequency {fvec} has wrong length for d={self.dim}")
            a = np.atleast_2d(np.asarray(amp, dtype=complex))
            if rank is None:
                rank = a.shape[0]
            if a.shape != (rank, rank):
                raise ValueError("all amplitudes must share one square shape")
            norm_terms.append((fvec, a))
        if rank is None or rank not in (1, self.dim):
            raise ValueError("amplitude rank must be 1 (scalar) or d (matrix)")
        if not any(all(f == 0 for f in fv) for fv, _ in norm_terms):
            raise ValueError("constant term (zero frequency) is required")
        self.terms = norm_terms
        self._rank = rank
        self._sample_cache = {}

    @property
    def is_scalar(self) -> bool:
        return self._rank == 1

    @property
    def kind(self) -> str:
        return "scalar" if self.is_scalar else "matrix"

    @property
    def max_frequency(self) -> int:
        return max(max(abs(f) for f in fv) for fv, _ in self.terms)

    @property
    def mean(self) -> np.ndarray:
        """The constant term, i.e. the cell average <c>."""
        for fv, a in self.terms:
            if all(f == 0 for f in fv):
                return a.copy()
        raise AssertionError("constant term enforced at construction")

    def _evaluate(self, nodes: np.ndarray) -> np.ndarray:
        """Sum the trig polynomial at given nodes, shape (r, r, *spatial)."""
        spatial = nodes.shape[1:]
        out = np.zeros((self._rank, self._rank) + spatial, dtype=complex)
        for fv, a in self.terms:
            phase = np.exp(
                2j * np.pi * np.tensordot(np.asarray(fv, float), nodes, axes=(0, 0))
            )
            out += a.reshape((self._rank, self._rank) + (1,) * len(spatial)) * phase
        return out

    def samples(self, grid: CellGrid, scale: int = 1) -> np.ndarray:
        """Node samples of y -> c(scale * y), shape (r, r, *grid.shape).

        ``scale = M`` gives c(x/eps) on a grid over the unit box; requires
        the grid to resolve the scaled spectrum (alias-free sampling).
        """
        if grid.dim != self.dim:
            raise ValueError("grid dimension mismatch")
        if scale * self.max_frequency >= grid.n // 2 and self.max_frequency > 0:
            raise ValueError(
                f"grid with n={grid.n} under-resolves coefficient frequencies "
                f"scaled by {scale} (max frequency {self.max_frequency})"
            )
        key = (grid.dim, grid.n, scale)
        if key not in self._sample_cache:
            self._sample_cache[key] = self._evaluate(scale * grid.nodes)
        return self._sample_cache[key]

    def matrix_samples(self, grid: CellGrid, scale: int = 1) -> np.ndarray:
        """Samples promoted to (d, d, *shape); scalar kind becomes c * I."""
        s = self.samples(grid, scale)
        if self._rank == self.dim:
            return s
        eye = np.eye(self.dim).reshape((self.dim, self.dim) + (1,) * self.dim)
        return s[0, 0] * eye

    def scalar_samples(self, grid: CellGrid, scale: int = 1) -> np.ndarray:
        if not self.is_scalar:
            raise ValueError("coefficient is matrix-valued")
        return self.samples(grid, scale)[0, 0]

    def inverse_samples(self, grid: CellGrid, scale: int = 1) -> np.ndarray:
        """Nodewise inverse of the matrix samples, shape (d, d, *shape)."""
        key = ("inv", grid.dim, grid.n, scale)
        if key not in self._sample_cache:
            s = self.matrix_samples(grid, scale)
            stacked = np.moveaxis(s.reshape(self.dim, self.dim, -1), -1, 0)
            inv = np.linalg.inv(stacked)
            self._sample_cache[key] = np.moveaxis(inv, 0, -1).reshape(s.shape)
        return self._sample_cache[key]

    def hermitian_defect(self, grid: CellGrid) -> float:
        """Max nodewise deviation from c(y) = c(y)^*."""
        s = self.matrix_samples(grid)
        return float(np.max(np.abs(s - np.conj(np.swapaxes(s, 0, 1)))))

    def to_json(self) -> list:
        return [
            {
                "freq": list(fv),
                "re": a.real.tolist(),
                "im": a.imag.tolist(),
            }
            for fv, a in self.terms
        ]

    @classmethod
    def from_json(cls, data: list, dim: int | None = None) -> "CoefficientCell":
        terms = []
        for entry in data:
            freq = entry["freq"]
            re = np.atleast_2d(np.asarray(entry["re"], dtype=float))
            im = np.atleast_2d(np.asarray(entry.get("im", np.zeros_like(re)), dtype=float))
            terms.append((freq, re + 1j * im))
        if dim is None:
            dim = len(terms[0][0])
        return cls(dim=dim, terms=terms)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    @classmethod
    def load(cls, path, dim: int | None = None) -> "CoefficientCell":
        with open(path) as fh:
            return cls.from_json(json.load(fh), dim=dim)


def scalar_coefficient(dim: int, terms) -> CoefficientCell:
    """Build a scalar coefficient from {freq tuple: complex amplitude} pairs."""
    term_list = [(fv, np.array([[amp]], dtype=complex)) for fv, amp in dict(terms).items()]
    return CoefficientCell(dim=dim, terms=term_list)


def constant_coefficient(dim: int, matrix) -> CoefficientCell:
    m = np.atleast_2d(np.asarray(matrix, dtype=complex))
    return CoefficientCell(dim=dim, terms=[((0,) * dim, m)])


def ellipticity_check(coeff: CoefficientCell, grid: CellGrid) -> float:
    """Smallest eigenvalue of the Hermitian part of c over all grid nodes.

    Raises :class:`NonElliptic` if the minimum does not exceed the floor.
    """
    s = coeff.matrix_samples(grid)
    d = coeff.dim
    flat = np.moveaxis(s.reshape(d, d, -1), -1, 0)  # (N, d, d)
    herm = 0.5 * (flat + np.conj(np.swapaxes(flat, 1, 2)))
    eigs = np.linalg.eigvalsh(herm)
    kappa = float(eigs.min())
    if kappa <= ELLIPTICITY_FLOOR:
        raise NonElliptic(
            f"coefficient is not uniformly elliptic (min eigenvalue {kappa:.3e})"
        )
    return kappa
