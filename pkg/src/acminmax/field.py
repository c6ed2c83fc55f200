"""Scalar fields on grids and the order-lattice algebra they support.

Fields take values in [-1, 1]; min/max combinations drive all sweepout
surgery, so these operations copy values exactly (no arithmetic on them)
to keep the lattice identities bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .geometry import Grid, Region


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_nodes,):
            raise FieldError("field values do not match grid nodes")
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, label: str | None = None) -> "ScalarField":
        return ScalarField(self.grid, values, self.label if label is None else label)

    def __ge__(self, other: "ScalarField") -> bool:
        _check_same_grid(self, other)
        return bool(np.all(self.values >= other.values))

    def __le__(self, other: "ScalarField") -> bool:
        _check_same_grid(self, other)
        return bool(np.all(self.values <= other.values))


def _check_same_grid(*fields: ScalarField) -> Grid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid is not g:
            raise FieldError("fields live on different grids")
    return g


def constant_field(g: Grid, value: float, label: str = "") -> ScalarField:
    return ScalarField(g, np.full(g.n_nodes, float(value)), label or f"const {value}")


def from_external(g: Grid, values, label: str = "") -> ScalarField:
    """Entry point for external data: clamps to [-1, 1] on construction."""
    v = np.clip(np.asarray(values, dtype=float), -1.0, 1.0)
    return ScalarField(g, v, label)


def lattice_max(u: ScalarField, v: ScalarField) -> ScalarField:
    _check_same_grid(u, v)
    return u.with_values(np.maximum(u.values, v.values), "max")


def lattice_min(u: ScalarField, v: ScalarField) -> ScalarField:
    _check_same_grid(u, v)
    return u.with_values(np.minimum(u.values, v.values), "min")


def clamp_pm1(u: ScalarField) -> ScalarField:
    return u.with_values(np.clip(u.values, -1.0, 1.0), u.label)


def phi_combine(u0: ScalarField, u1: ScalarField, w: ScalarField) -> ScalarField:
    """min{max{u0, -w}, max{u1, w}}"""
    _check_same_grid(u0, u1, w)
    a = np.maximum(u0.values, -w.values)
    b = np.maximum(u1.values, w.values)
    return u0.with_values(np.minimum(a, b), "phi")


def psi_combine(u0: ScalarField, u1: ScalarField, w: ScalarField) -> ScalarField:
    """max{min{u0, w}, min{u1, -w}}"""
    _check_same_grid(u0, u1, w)
    a = np.minimum(u0.values, w.values)
    b = np.minimum(u1.values, -w.values)
    return u0.with_values(np.maximum(a, b), "psi")


def theta_combine(u0: ScalarField, u1: ScalarField, w: ScalarField) -> ScalarField:
    """Positive part of phi plus negative part of psi.

    Interpolates between u0 (where w = 1) and u1 (where w = -1); at every
    node the result is one of u0, u1, w, -w, and it stays inside any order
    interval containing u0 and u1.
    """
    ph = phi_combine(u0, u1, w).values
    ps = psi_combine(u0, u1, w).values
    return u0.with_values(np.maximum(ph, 0.0) + np.minimum(ps, 0.0), "theta")


def l1_distance(u: ScalarField, v: ScalarField, s: Region | None = None) -> float:
    """Volume-weighted integral of |u - v| over a region (default: all)."""
    g = _check_same_grid(u, v)
    diff = np.abs(u.values - v.values) * g.vol
    if s is not None:
        if s.grid is not g:
            raise FieldError("region lives on a different grid")
        return float(diff[s.mask].sum())
    return float(diff.sum())


def linf_distance(u: ScalarField, v: ScalarField, s: Region | None = None) -> float:
    g = _check_same_grid(u, v)
    diff = np.abs(u.values - v.values)
    if s is not None:
        diff = diff[s.mask]
    return float(diff.max()) if diff.size else 0.0
