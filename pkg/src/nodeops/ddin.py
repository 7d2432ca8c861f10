"""Local interpolation in an arbitrary function basis, and linear
operators applied through it.

Around node i the field is modeled as

    phi(x) ~ phi_i + a_1*F_1(x - x_i) + ... + a_M*F_M(x - x_i)

where the F_mu are caller-chosen basis functions of the offset.  The
coefficients come from a weighted least-squares fit to the neighbor
differences phi_j - phi_i (the same solve path as the Taylor stencils).
A linear operator L evaluated at the center is then

    (L phi)_i = sum_mu a_mu * (L F_mu)(0)

where each basis function carries its operator values at zero offset
analytically.  With the monomial basis this reproduces the Taylor
least-squares estimates exactly; any other basis (for example the
Gaussian bump here) plugs into the same machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import wlsq
from .nodes import NodeSet
from .wlsq import DegenerateStencilError, UnderdeterminedStencilError

OPERATOR_LABELS = ("identity", "dx", "dy", "dxx", "dxy", "dyy", "laplacian")


@dataclass(frozen=True)
class BasisFunction:
    """One basis function of the offset from the center node.

    func maps an offset vector (shape (dim,) or (n, dim)) to values;
    images holds (L F)(0) for every supported operator label.
    """

    name: str
    dim: int
    func: object
    images: dict = field(default_factory=dict)

    def __call__(self, offset):
        return self.func(np.asarray(offset, dtype=float))


@dataclass
class Interpolant:
    center: int
    center_position: np.ndarray
    phi_center: float
    coefficients: np.ndarray
    basis: list
    condition_estimate: float


def _monomial(name, dim, exponents, images):
    ex = np.asarray(exponents, dtype=float)

    def func(offset):
        offset = np.atleast_2d(offset)
        vals = np.prod(offset ** ex, axis=1)
        return vals if vals.size > 1 else float(vals[0])

    full = {lbl: 0.0 for lbl in OPERATOR_LABELS if lbl not in ("dy", "dxy", "dyy") or dim == 2}
    full.update(images)
    if dim == 2:
        full["laplacian"] = full["dxx"] + full["dyy"]
    else:
        full["laplacian"] = full["dxx"]
    return BasisFunction(name=name, dim=dim, func=func, images=full)


def power_basis(order: int, dim: int) -> list:
    """Monomials of the offset up to the given total degree, constant
    excluded (the interpolant carries phi_i separately).

    Operator images at zero offset are analytic: the only nonzero ones
    are d/dx of x (1), d2/dx2 of x^2 (2), d2/dxdy of xy (1), and their
    y counterparts.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    if dim == 1:
        basis = [_monomial("x", 1, [1], {"dx": 1.0})]
        if order == 2:
            basis.append(_monomial("x^2", 1, [2], {"dxx": 2.0}))
    else:
        basis = [_monomial("x", 2, [1, 0], {"dx": 1.0}),
                 _monomial("y", 2, [0, 1], {"dy": 1.0})]
        if order == 2:
            basis += [_monomial("x^2", 2, [2, 0], {"dxx": 2.0}),
                      _monomial("x*y", 2, [1, 1], {"dxy": 1.0}),
                      _monomial("y^2", 2, [0, 2], {"dyy": 2.0})]
    return basis


def gaussian_basis(dim: int, scale: float) -> list:
    """A single radial bump exp(-|offset|^2/scale^2) - 1.

    Vanishes at zero offset; its curvature there gives the operator
    images dxx = dyy = -2/scale^2.  A non-polynomial witness that the
    interpolation framework is not tied to Taylor monomials.
    """
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    c2 = scale * scale

    def func(offset):
        offset = np.atleast_2d(offset)
        vals = np.exp(-np.sum(offset**2, axis=1) / c2) - 1.0
        return vals if vals.size > 1 else float(vals[0])

    images = {"identity": 0.0, "dx": 0.0, "dxx": -2.0 / c2}
    if dim == 2:
        images.update({"dy": 0.0, "dxy": 0.0, "dyy": -2.0 / c2})
    images["laplacian"] = -2.0 * dim / c2
    return [BasisFunction(name=f"gauss(scale={scale:g})", dim=dim, func=func,
                          images=images)]


def fit(nodes: NodeSet, values, i: int, basis: list, r_e: float | None = None,
        weight_mode: str = "mps", neighbor_indices=None,
        row_weights=None) -> Interpolant:
    """Weighted least-squares fit of the basis coefficients at node i.

    Requires at least as many neighbors as basis functions and a
    full-rank design matrix.
    """
    if not basis:
        raise ValueError("basis must contain at least one function")
    values = np.asarray(values, dtype=float)
    idx, offsets, dist, w = wlsq._neighbor_geometry(
        nodes, i, r_e, neighbor_indices, weight_mode, row_weights)
    if len(idx) < len(basis):
        raise UnderdeterminedStencilError(
            f"underdetermined stencil: {len(idx)} neighbors for {len(basis)} basis functions")
    design = np.column_stack([np.atleast_1d(bf.func(offsets)) for bf in basis])
    peaks = np.max(np.abs(design), axis=0)
    if np.any(peaks == 0.0):
        dead = basis[int(np.argmin(peaks))].name
        raise DegenerateStencilError(math.inf, f"basis function {dead!r} vanishes on the stencil")
    col = 1.0 / peaks
    rhs = values[idx] - values[i]
    scaled, normal, cond = wlsq._scaled_normal_matrix(design, w, col)
    coeff = wlsq._solve_scaled(scaled, normal, cond, w, rhs) * col
    return Interpolant(center=i, center_position=nodes.positions[i].copy(),
                       phi_center=float(values[i]), coefficients=coeff,
                       basis=list(basis), condition_estimate=cond)


def evaluate(interp: Interpolant, x) -> float:
    """Interpolated field value at position x."""
    x = np.asarray(x, dtype=float).reshape(-1)
    offset = x - interp.center_position
    total = interp.phi_center
    for a, bf in zip(interp.coefficients, interp.basis):
        total += a * bf.func(offset)
    return float(total)


def apply_operator(interp: Interpolant, label: str) -> float:
    """Linear operator at the center node via the basis operator images."""
    if label not in OPERATOR_LABELS:
        raise ValueError(f"unknown operator label {label!r}")
    total = 0.0
    for a, bf in zip(interp.coefficients, interp.basis):
        if label not in bf.images:
            raise ValueError(f"operator {label!r} not supported by basis function {bf.name!r}")
        total += a * bf.images[label]
    if label == "identity":
        total += interp.phi_center
    return float(total)
