"""Shifted corrector cell problems and homogenised tensors.

For a coefficient ``a`` and quasimomentum ``theta`` the corrector component
N^j solves, in the mean-zero trigonometric space of the grid,

    <a (grad + i theta) N^j, (grad + i theta) phi> = -<a e_j, (grad + i theta) phi>

for every retained test mode phi.  The operator is applied matrix-free
(shifted gradient -> nodewise multiply -> shifted divergence) and solved by
a Krylov iteration with the constant-coefficient symbol as preconditioner.
The effective tensor is assembled from cell averages of the corrected
fluxes: column j equals <a (e_j + (grad + i theta) N^j)>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import torus
from .errors import NoConvergence
from .solvers import solve_linear
from .torus import (
    FREQUENCY,
    CellGrid,
    CoefficientCell,
    SpectralField,
    ellipticity_check,
    validate_theta,
)

HERMITIAN_TOL = 1e-12


@dataclass
class Corrector:
    """Cell corrector fields N^j, one mean-zero scalar field per direction."""

    theta: np.ndarray
    fields: list  # list[SpectralField], frequency domain
    residuals: list

    @property
    def grid(self) -> CellGrid:
        return self.fields[0].grid

    @property
    def dim(self) -> int:
        return self.grid.dim

    def mean_defect(self) -> float:
        return max(abs(complex(torus.cell_mean(f)[0])) for f in self.fields)


@dataclass
class HomogenisedTensor:
    """Constant effective d x d matrix at one quasimomentum."""

    theta: np.ndarray
    matrix: np.ndarray

    def quadratic_form(self, xi) -> complex:
        xi = np.asarray(xi, dtype=complex)
        return complex(self.matrix @ xi @ xi)


def _zero_mean(values: np.ndarray, grid: CellGrid) -> np.ndarray:
    values = values.copy()
    values[(0,) * grid.dim] = 0.0
    return values


def _corrector_operator(coeff: CoefficientCell, grid: CellGrid, theta: np.ndarray):
    """Return (apply, precond) for -div_theta(a grad_theta .) on mean-zero fields."""
    kappa = grid.wavevectors(theta)  # (d, *shape)
    a = coeff.matrix_samples(grid)  # (d, d, *shape)
    abar = 0.5 * (coeff.mean + np.conj(coeff.mean.T))
    if coeff.is_scalar:
        abar = abar[0, 0].real * np.eye(grid.dim)
    symbol = np.einsum("pq,p...,q...->...", abar.real, kappa, kappa)
    symbol[(0,) * grid.dim] = 1.0  # mode 0 is projected out anyway

    freq_axes = tuple(range(1, 1 + grid.dim))

    def apply(vec: np.ndarray) -> np.ndarray:
        u = _zero_mean(vec.reshape(grid.shape), grid)
        grad = 1j * kappa * u  # frequency, (d, *shape)
        grad_phys = np.fft.ifftn(grad * grid.phase, axes=freq_axes) * grid.size
        flux_phys = np.einsum("pq...,q...->p...", a, grad_phys)
        flux = np.fft.fftn(flux_phys, axes=freq_axes) * (grid.phase / grid.size)
        out = -np.sum(1j * kappa * flux, axis=0)
        return _zero_mean(out, grid).ravel()

    def precond(vec: np.ndarray) -> np.ndarray:
        u = vec.reshape(grid.shape) / symbol
        return _zero_mean(u, grid).ravel()

    return apply, precond


def solve_corrector(
    coeff: CoefficientCell,
    theta,
    grid: CellGrid,
    rtol: float = 1e-10,
) -> Corrector:
    """Solve the shifted cell problem for every direction j."""
    theta = validate_theta(theta, grid.dim)
    ellipticity_check(coeff, grid)
    hermitian = coeff.hermitian_defect(grid) <= HERMITIAN_TOL

    apply, precond = _corrector_operator(coeff, grid, theta)
    a = coeff.matrix_samples(grid)
    kappa = grid.wavevectors(theta)
    freq_axes = tuple(range(1, 1 + grid.dim))

    fields, residuals = [], []
    for j in range(grid.dim):
        # rhs: div_theta(a e_j), mean part removed
        aej_phys = a[:, j]  # (d, *shape)
        aej = np.fft.fftn(aej_phys, axes=freq_axes) * (grid.phase / grid.size)
        rhs = _zero_mean(np.sum(1j * kappa * aej, axis=0), grid)
        try:
            x, info = solve_linear(
                apply,
                rhs.ravel(),
                hermitian=hermitian,
                rtol=rtol,
                maxiter=10 * grid.size,
                precond=precond,
            )
        except NoConvergence as exc:
            raise NoConvergence(
                f"corrector direction {j} at theta={theta}: {exc}",
                residual=exc.residual,
                iterations=exc.iterations,
            ) from exc
        fields.append(SpectralField(grid, x.reshape((1,) + grid.shape), FREQUENCY))
        residuals.append(info["residual"])
    return Corrector(theta=theta, fields=fields, residuals=residuals)


def corrector_residual(coeff: CoefficientCell, cor: Corrector) -> float:
    """Max over directions of the relative Galerkin residual of the cell problem."""
    grid = cor.grid
    apply, _ = _corrector_operator(coeff, grid, cor.theta)
    a = coeff.matrix_samples(grid)
    kappa = grid.wavevectors(cor.theta)
    freq_axes = tuple(range(1, 1 + grid.dim))
    worst = 0.0
    for j, f in enumerate(cor.fields):
        aej = np.fft.fftn(a[:, j], axes=freq_axes) * (grid.phase / grid.size)
        rhs = _zero_mean(np.sum(1j * kappa * aej, axis=0), grid)
        res = np.linalg.norm(apply(f.values[0].ravel()) - rhs.ravel())
        worst = max(worst, res / np.linalg.norm(rhs.ravel()))
    return worst


def corrected_directions(
    coeff: CoefficientCell, cor: Corrector, plain_gradient: bool = False
) -> np.ndarray:
    """Physical samples of a(y) (e_j + (grad + i theta) N^j), shape (d, d, *shape).

    Column j is the corrected flux direction; with ``plain_gradient`` the
    shift is dropped (used by the zero-quasimomentum reference states).
    """
    grid = cor.grid
    a = coeff.matrix_samples(grid)
    theta = np.zeros(grid.dim) if plain_gradient else cor.theta
    cols = []
    for j in range(grid.dim):
        grad = torus.shifted_gradient(cor.fields[j], theta)
        g_phys = torus.to_physical(grad).values  # (d, *shape)
        e_j = np.zeros((grid.dim,) + grid.shape)
        e_j[j] = 1.0
        cols.append(np.einsum("pq...,q...->p...", a, e_j + g_phys))
    return np.stack(cols, axis=1)  # (d, dcol, *shape)


def homogenised_tensor(coeff: CoefficientCell, cor: Corrector) -> HomogenisedTensor:
    """Assemble the effective tensor from cell averages of corrected fluxes."""
    grid = cor.grid
    flux = corrected_directions(coeff, cor)
    axes = tuple(range(2, 2 + grid.dim))
    matrix = flux.mean(axis=axes)  # (d, d): column j = <a(e_j + grad_theta N^j)>
    return HomogenisedTensor(theta=cor.theta, matrix=matrix)


@dataclass
class DeviationTable:
    """Per-theta distance of the effective tensor from its theta=0 value.

    ``exact_zero`` flags record degenerate sweeps (for example constant
    coefficients, or the one-dimensional tensor where the corrected flux is
    forced constant) where a log-log slope is meaningless.
    """

    thetas: list
    deviations: list  # operator norms |a_theta - a_0|
    corrector_h1: list  # max_j ||N_theta^j - N_0^j||_{H1}
    slope: float | None
    corrector_slope: float | None
    empirical_constant: float
    tensor_exact_zero: bool
    corrector_exact_zero: bool


def tensor_theta_deviation(
    coeff: CoefficientCell,
    thetas,
    grid: CellGrid,
    rtol: float = 1e-10,
) -> DeviationTable:
    """Sweep |a_theta - a_0| and corrector H1 distances over a theta list."""
    thetas = [validate_theta(t, grid.dim) for t in thetas]
    if not thetas:
        raise ValueError("theta list must be nonempty")
    cor0 = solve_corrector(coeff, np.zeros(grid.dim), grid, rtol=rtol)
    t0 = homogenised_tensor(coeff, cor0)

    deviations, cor_dists = [], []
    for th in thetas:
        cor = solve_corrector(coeff, th, grid, rtol=rtol)
        t = homogenised_tensor(coeff, cor)
        deviations.append(float(np.linalg.norm(t.matrix - t0.matrix, ord=2)))
        cor_dists.append(
            max(
                torus.h1_norm(cor.fields[j] - cor0.fields[j])
                for j in range(grid.dim)
            )
        )

    abs_t = np.array([np.linalg.norm(t) for t in thetas])
    dev = np.array(deviations)
    cd = np.array(cor_dists)
    scale = max(float(np.linalg.norm(t0.matrix, ord=2)), 1.0)
    tensor_zero = bool(np.all(dev < 1e-12 * scale))
    corrector_zero = bool(np.all(cd < 1e-12))
    slope = None if tensor_zero else _loglog_slope(abs_t, dev)
    cor_slope = None if corrector_zero else _loglog_slope(abs_t, cd)
    const = 0.0 if tensor_zero else float(np.max(dev / abs_t))
    return DeviationTable(
        thetas=thetas,
        deviations=deviations,
        corrector_h1=cor_dists,
        slope=slope,
        corrector_slope=cor_slope,
        empirical_constant=const,
        tensor_exact_zero=tensor_zero,
        corrector_exact_zero=corrector_zero,
    )


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float | None:
    mask = (x > 0) & (y > 0)
    if mask.sum() < 2:
        return None
    p = np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)
    return float(p[0])


def _as_integer_reciprocal(eps: float) -> int:
    m = round(1.0 / eps)
    if m < 1 or abs(1.0 / eps - m) > 1e-9:
        raise ValueError(f"eps must be the reciprocal of a positive integer, got {eps}")
    return m


def multiplier_check(cor: Corrector, eps: float, phis) -> dict:
    """Empirical constant in the corrector-gradient multiplier bound.

    For each band-limited phi on the fine grid, the ratio

        int |grad N^j(x/eps) phi(x)|^2 dx  /  int (|phi|^2 + eps^2 |grad phi|^2)

    is returned per direction; the result carries the max over phis and j.
    """
    if np.linalg.norm(cor.theta) != 0.0:
        raise ValueError("multiplier check is defined for the theta=0 corrector")
    m_factor = _as_integer_reciprocal(eps)
    grads = [
        torus.replicate(torus.shifted_gradient(f, np.zeros(cor.dim)), m_factor)
        for f in cor.fields
    ]
    return _multiplier_ratios(grads, phis, grad_weight=eps**2)


def gamma_multiplier_check(gamma: CoefficientCell, eps: float, phis) -> dict:
    """Same ratio for the gradient of a scalar coupling coefficient.

    Here the right-hand side carries unit weight on |grad phi|^2.
    """
    m_factor = _as_integer_reciprocal(eps)
    grid = phis[0].grid
    cell = CellGrid(gamma.dim, grid.n // m_factor)
    g_field = SpectralField(cell, gamma.scalar_samples(cell)[np.newaxis], torus.PHYSICAL)
    grad = torus.shifted_gradient(torus.to_frequency(g_field), np.zeros(gamma.dim))
    return _multiplier_ratios([torus.replicate(grad, m_factor)], phis, grad_weight=1.0)


def _multiplier_ratios(cell_gradients, phis, grad_weight: float) -> dict:
    ratios = []
    for phi in phis:
        phi_phys = torus.as_physical(phi)
        grad_phi = torus.shifted_gradient(phi, np.zeros(phi.grid.dim))
        rhs = torus.norm(phi) ** 2 + grad_weight * torus.norm(grad_phi) ** 2
        row = []
        for g in cell_gradients:
            g_phys = torus.as_physical(g)
            prod = g_phys.values * phi_phys.values[0]
            lhs = float(np.sum(np.abs(prod) ** 2) / phi.grid.size)
            row.append(lhs / rhs)
        ratios.append(row)
    arr = np.array(ratios)
    return {"ratios": arr, "max": float(arr.max())}
