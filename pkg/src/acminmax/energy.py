"""The Allen-Cahn energy on a grid: value, variations, spectra, minimization.

The discrete energy is

    E_eps(u) = eps/2 * sum_edges w_e (u_i - u_j)^2  +  sum_i vol_i W(u_i)/eps

with the edge weights chosen so the first term is the metric Dirichlet
form.  The nodewise residual -eps^2 Lap u + W'(u) uses the volume
normalized graph Laplacian of the same form, so residual = eps * gradient
where gradient is dE/du_i divided by the volume weight; the two vanish
together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field import ScalarField, _check_same_grid
from .geometry import Grid, Region
from .potential import Potential


class EigensolverError(RuntimeError):
    pass


class IntervalError(ValueError):
    pass


class AllenCahnEnergy:
    """Energy machinery bound to one grid and one potential."""

    def __init__(self, grid: Grid, potential: Potential):
        self.grid = grid
        self.potential = potential
        self._L = grid.dirichlet_matrix

    # -- scalar energy ----------------------------------------------------

    def _check(self, u: ScalarField) -> np.ndarray:
        if u.grid is not self.grid:
            raise ValueError("field lives on a different grid")
        return u.values

    def total_energy(self, u: ScalarField, eps: float) -> float:
        return self.energy_of_values(self._check(u), eps)

    def energy_of_values(self, v: np.ndarray, eps: float) -> float:
        """Energy of raw value arrays; accepts (n,) or a batch (..., n)."""
        g = self.grid
        dv = v[..., g.edge_i] - v[..., g.edge_j]
        grad = 0.5 * eps * (dv * dv) @ g.edge_w if v.ndim > 1 else \
            0.5 * eps * float(np.dot(dv * dv, g.edge_w))
        pot = (np.asarray(self.potential.eval(v)) @ g.vol) / eps
        return grad + pot

    def energy_density(self, u: ScalarField, eps: float) -> np.ndarray:
        """Per-node energy share: potential plus half of each incident edge."""
        v = self._check(u)
        return self.density_of_values(v, eps)

    def density_of_values(self, v: np.ndarray, eps: float) -> np.ndarray:
        g = self.grid
        dv = v[g.edge_i] - v[g.edge_j]
        ge = 0.5 * eps * g.edge_w * dv * dv
        dens = g.vol * np.asarray(self.potential.eval(v)) / eps
        np.add.at(dens, g.edge_i, 0.5 * ge)
        np.add.at(dens, g.edge_j, 0.5 * ge)
        return dens

    def localized_energy(self, u: ScalarField, eps: float, s: Region) -> float:
        """Energy over a region; additive over disjoint regions by construction."""
        if s.grid is not self.grid:
            raise ValueError("region lives on a different grid")
        return float(self.energy_density(u, eps)[s.mask].sum())

    def energy_density_gap(self, u: ScalarField, v: ScalarField, eps: float) -> float:
        """Integral of |e(u) - e(v)| at nodewise resolution."""
        _check_same_grid(u, v)
        du = self.energy_density(u, eps)
        dv = self.energy_density(v, eps)
        return float(np.abs(du - dv).sum())

    # -- first and second variation ----------------------------------------

    def residual_of_values(self, v: np.ndarray, eps: float) -> np.ndarray:
        return eps * eps * (self._L @ v) / self.grid.vol + np.asarray(self.potential.d1(v))

    def ac_residual(self, u: ScalarField, eps: float) -> ScalarField:
        """Nodewise -eps^2 Lap u + W'(u)."""
        return u.with_values(self.residual_of_values(self._check(u), eps), "residual")

    def energy_gradient(self, u: ScalarField, eps: float) -> ScalarField:
        """dE/du_i / vol_i; equals ac_residual / eps."""
        return u.with_values(self.residual_of_values(self._check(u), eps) / eps, "gradient")

    def gradient_of_values(self, v: np.ndarray, eps: float) -> np.ndarray:
        return self.residual_of_values(v, eps) / eps

    def hessian_apply(self, u: ScalarField, eps: float, v: ScalarField) -> ScalarField:
        """Linearized operator at u: -eps^2 Lap v + W''(u) v."""
        uu = self._check(u)
        vv = self._check(v)
        out = eps * eps * (self._L @ vv) / self.grid.vol + np.asarray(self.potential.d2(uu)) * vv
        return u.with_values(out, "hessian")

    def hessian_matrices(self, u: ScalarField, eps: float):
        """(A, d) with A = eps^2 L + diag(vol * W''(u)) and d = vol.

        The operator of hessian_apply is diag(1/d) A; it is self-adjoint in
        the volume inner product, so its spectrum is that of the symmetric
        pencil (A, diag(d)).
        """
        uu = self._check(u)
        A = (eps * eps) * self._L + sp.diags(self.grid.vol * np.asarray(self.potential.d2(uu)))
        return A.tocsr(), self.grid.vol

    def operator_norm_bound(self, u: ScalarField, eps: float) -> float:
        """Gershgorin bound for the volume-normalized linearization."""
        A, d = self.hessian_matrices(u, eps)
        absA = abs(A)
        row = np.asarray(absA.sum(axis=1)).ravel()
        return float(np.max(row / d))

    def morse_index(self, u: ScalarField, eps: float, k: int = 6,
                    spectral_tol: float | None = None,
                    dense_threshold: int = 4000):
        """Count of negative eigenvalues of the linearization, with the k
        smallest eigenvalues attached.

        Dense solve below the threshold, shift-inverted Lanczos above;
        grids over 2e5 nodes are refused.
        """
        n = self.grid.n_nodes
        if n > 200_000:
            raise EigensolverError("grid too large for spectral certification (> 2e5 nodes)")
        k = min(k, n - 1) if n > 1 else 1
        A, d = self.hessian_matrices(u, eps)
        dinv_sqrt = 1.0 / np.sqrt(d)
        B = sp.diags(dinv_sqrt) @ A @ sp.diags(dinv_sqrt)
        if spectral_tol is None:
            spectral_tol = 1e-8 * self.operator_norm_bound(u, eps)
        if n <= dense_threshold:
            vals = scipy.linalg.eigh(B.toarray(), eigvals_only=True,
                                     subset_by_index=[0, k - 1])
        else:
            sigma = float(-self.operator_norm_bound(u, eps) - 1.0)
            try:
                vals = spla.eigsh(B.tocsc(), k=k, sigma=sigma, which="LM",
                                  return_eigenvectors=False, maxiter=5000)
            except spla.ArpackNoConvergence as exc:
                raise EigensolverError(
                    f"eigensolver did not converge ({len(exc.eigenvalues)} of {k} pairs)") from exc
            vals = np.sort(vals)
        index = int(np.sum(vals < -spectral_tol))
        return index, np.asarray(vals)


@dataclass
class MinimizeResult:
    field: ScalarField
    converged: bool
    iterations: int
    pg_residual: float
    energy: float


def constrained_minimize(energy: AllenCahnEnergy, lower: ScalarField, upper: ScalarField,
                         start: ScalarField, eps: float, tol: float = 1e-8,
                         max_iter: int = 2000) -> MinimizeResult:
    """Projected-gradient minimization of E over the order interval [lower, upper].

    Projection is the nodewise clamp, steps are Armijo-backtracked, and the
    stationarity measure is the unit-step projected gradient.  A stationary
    start on a symmetric ridge is nudged along the constant direction (the
    leading Laplacian eigenvector of a connected grid) with positive sign.
    """
    lo, up = lower.values, upper.values
    if np.any(lo > up):
        raise IntervalError("lower bound exceeds upper bound")
    u = np.clip(start.values, lo, up)
    if not np.allclose(u, start.values):
        raise IntervalError("start lies outside the order interval")

    def project(v):
        return np.clip(v, lo, up)

    def pg_residual(v, g):
        return float(np.max(np.abs(v - project(v - g))))

    E = energy.energy_of_values(u, eps)
    g = energy.gradient_of_values(u, eps)

    if pg_residual(u, g) <= tol:
        nudged = project(u + 0.05)
        if energy.energy_of_values(nudged, eps) < E:
            u, E = nudged, energy.energy_of_values(nudged, eps)
            g = energy.gradient_of_values(u, eps)
        else:
            return MinimizeResult(start.with_values(u, "argmin"), True, 0,
                                  pg_residual(u, g), E)

    alpha = eps / max(energy.operator_norm_bound(start.with_values(u), eps), 1e-12)
    c_armijo = 1e-4
    it = 0
    for it in range(1, max_iter + 1):
        for _ in range(60):
            cand = project(u - alpha * g)
            step = cand - u
            decrease = energy.energy_of_values(cand, eps) - E
            # directional derivative along the projected step, volume-weighted
            slope = float(np.dot(energy.grid.vol * g, step))
            if decrease <= c_armijo * slope or not step.any():
                break
            alpha *= 0.5
        u = cand
        E += decrease
        g = energy.gradient_of_values(u, eps)
        res = pg_residual(u, g)
        if res <= tol:
            return MinimizeResult(start.with_values(u, "argmin"), True, it, res, E)
        alpha *= 1.3
    return MinimizeResult(start.with_values(u, "argmin"), False, it,
                          pg_residual(u, g), E)


@dataclass
class CriticalPoint:
    """A residual-certified field with spectral data attached."""

    field: ScalarField
    eps: float
    energy: float
    residual_inf: float
    index: int
    spectrum_head: np.ndarray
    flags: tuple = ()

    @property
    def accepted(self) -> bool:
        return len(self.flags) == 0


def certify_critical_point(energy: AllenCahnEnergy, u: ScalarField, eps: float,
                           residual_tol: float, k: int = 6,
                           spectral_tol: float | None = None) -> CriticalPoint:
    """Bundle residual, maximum-principle and index checks on a candidate."""
    res = float(np.max(np.abs(energy.residual_of_values(u.values, eps))))
    flags = []
    if res > residual_tol:
        flags.append("residual above tolerance")
    if float(np.max(np.abs(u.values))) >= 1.0:
        flags.append("maximum principle violated: |u| reaches 1")
    index, head = energy.morse_index(u, eps, k=k, spectral_tol=spectral_tol)
    if index > 1:
        flags.append("index violation")
    return CriticalPoint(field=u, eps=eps, energy=energy.total_energy(u, eps),
                         residual_inf=res, index=index, spectrum_head=head,
                         flags=tuple(flags))
