"""Classic MPS difference operators and the Khayyer-Gotoh pressure gradient.

The original particle-method operators approximate derivatives at node i
by weighted sums over its neighbors:

    gradient:   (d/n0) * sum_j (phi_j - phi_i)/|r_ij|^2 * r_ij * w(|r_ij|)
    Laplacian:  (2d/(lambda*n0)) * sum_j (phi_j - phi_i) * w(|r_ij|)

with r_ij = r_j - r_i, d the spatial dimension, n0 a reference particle
number density, and lambda the weighted mean squared neighbor distance.

For pressure fields the classic gradient is usually evaluated against
the minimum pressure among a particle and its neighbors (p_hat) instead
of p_i.  That form is not antisymmetric under i<->j, so summed pairwise
forces violate Newton's third law.  The Khayyer-Gotoh variant replaces
the coefficient with (p_i + p_j) - (p_hat_i + p_hat_j), which is
symmetric in the pair and restores exact momentum conservation; both
variants are provided, together with a total-force diagnostic that
exposes the difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nodes import NeighborList, NodeSet, find_neighbors, lambda_coefficient, weight


class IsolatedNodeError(ValueError):
    """Raised when an operator is evaluated at a node with no neighbors."""


@dataclass(frozen=True)
class MpsParams:
    """Parameters shared by the classic operators.

    r_e : weight cutoff radius
    dim : spatial dimension (1 or 2)
    n0 : reference particle number density; conventionally the density
        of an interior node in a regular arrangement at the same spacing
        (see :func:`reference_number_density`)
    lam : fixed Laplacian normalization; None computes the weighted mean
        squared neighbor distance per node
    """

    r_e: float
    dim: int
    n0: float
    lam: float | None = None

    def __post_init__(self):
        if self.r_e <= 0.0:
            raise ValueError("r_e must be positive")
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.n0 <= 0.0:
            raise ValueError("n0 must be positive")
        if self.lam is not None and self.lam <= 0.0:
            raise ValueError("fixed lambda must be positive")


def _check_field(values, nodes: NodeSet) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (nodes.count,):
        raise ValueError(f"field must have one value per node, expected shape ({nodes.count},), got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field values must be finite")
    return values


def _neighbors_or_raise(nodes: NodeSet, i: int, params: MpsParams) -> NeighborList:
    if params.dim != nodes.dim:
        raise ValueError(f"params.dim={params.dim} does not match node set dim={nodes.dim}")
    nl = find_neighbors(nodes, i, params.r_e)
    if len(nl) == 0:
        raise IsolatedNodeError(f"isolated node {i}: no neighbors within r_e={params.r_e}")
    return nl


def mps_gradient(values, nodes: NodeSet, i: int, params: MpsParams) -> np.ndarray:
    """Classic MPS gradient estimate at node i, one component per dimension."""
    values = _check_field(values, nodes)
    nl = _neighbors_or_raise(nodes, i, params)
    coeff = (values[nl.indices] - values[i]) / nl.distances**2 * nl.weights
    return (params.dim / params.n0) * (coeff @ nl.offsets)


def mps_laplacian(values, nodes: NodeSet, i: int, params: MpsParams) -> float:
    """Classic MPS Laplacian estimate at node i."""
    values = _check_field(values, nodes)
    nl = _neighbors_or_raise(nodes, i, params)
    lam = params.lam if params.lam is not None else lambda_coefficient(nl)
    s = np.sum((values[nl.indices] - values[i]) * nl.weights)
    return float(2.0 * params.dim / (lam * params.n0) * s)


def reference_number_density(spacing: float, r_e: float, dim: int) -> float:
    """Particle number density of an interior node in a regular arrangement.

    Sums the weight over the integer lattice with the given spacing,
    which is the conventional way to fix n0 for a given resolution.
    """
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    reach = int(np.ceil(r_e / spacing)) + 1
    ks = np.arange(-reach, reach + 1)
    if dim == 1:
        d = np.abs(ks[ks != 0]) * spacing
    else:
        kx, ky = np.meshgrid(ks, ks)
        d = spacing * np.hypot(kx, ky).ravel()
        d = d[d > 0.0]
    d = d[d < r_e]
    if d.size == 0:
        return 0.0
    return float(np.sum(weight(d, r_e)))


def min_hat_pressure(values, nl: NeighborList) -> float:
    """Minimum pressure among node i and its nonzero-weight neighbors.

    With no neighbors this is simply the node's own pressure.
    """
    p_i = float(np.asarray(values, dtype=float)[nl.center])
    if len(nl) == 0:
        return p_i
    return min(p_i, float(np.min(np.asarray(values, dtype=float)[nl.indices])))


def mps_pressure_gradient(values, nodes: NodeSet, i: int, params: MpsParams) -> np.ndarray:
    """Classic pressure gradient: the gradient form with (p_j - p_hat_i).

    p_hat_i is the minimum pressure among particle i and its neighbors,
    which keeps the resulting force repulsive but breaks pairwise
    antisymmetry.
    """
    values = _check_field(values, nodes)
    nl = _neighbors_or_raise(nodes, i, params)
    p_hat = min_hat_pressure(values, nl)
    coeff = (values[nl.indices] - p_hat) / nl.distances**2 * nl.weights
    return (params.dim / params.n0) * (coeff @ nl.offsets)


def kg_pressure_gradient(values, nodes: NodeSet, i: int, params: MpsParams) -> np.ndarray:
    """Khayyer-Gotoh pressure gradient with the pair-symmetric coefficient
    (p_i + p_j) - (p_hat_i + p_hat_j)."""
    values = _check_field(values, nodes)
    nl = _neighbors_or_raise(nodes, i, params)
    p_hat_i = min_hat_pressure(values, nl)
    p_hat_j = np.array([min_hat_pressure(values, find_neighbors(nodes, j, params.r_e))
                        for j in nl.indices])
    coeff = ((values[i] + values[nl.indices]) - (p_hat_i + p_hat_j)) \
        / nl.distances**2 * nl.weights
    return (params.dim / params.n0) * (coeff @ nl.offsets)


def pressure_force(values, nodes: NodeSet, i: int, params: MpsParams,
                   mass: float, rho: float, variant: str = "kg") -> np.ndarray:
    """Pressure gradient force on particle i: -(mass/rho) times the
    chosen pressure-gradient variant ("original" or "kg")."""
    if mass <= 0.0 or rho <= 0.0:
        raise ValueError("mass and rho must be positive")
    if variant == "original":
        grad = mps_pressure_gradient(values, nodes, i, params)
    elif variant == "kg":
        grad = kg_pressure_gradient(values, nodes, i, params)
    else:
        raise ValueError(f"unknown variant {variant!r}, expected 'original' or 'kg'")
    return -(mass / rho) * grad


def total_pressure_force(values, nodes: NodeSet, params: MpsParams,
                         mass: float, rho: float, variant: str = "kg"):
    """Momentum-conservation diagnostic over a whole particle cloud.

    Returns (total, largest_term): the sum of the per-particle pressure
    forces and the norm of the largest single pairwise contribution.
    For the "kg" variant the total vanishes to roundoff because the
    j-term of particle i and the i-term of particle j are exact
    negatives; the "original" variant has no such cancellation.
    """
    values = _check_field(values, nodes)
    total = np.zeros(nodes.dim)
    largest = 0.0
    prefac = -(mass / rho) * (params.dim / params.n0)
    for i in range(nodes.count):
        nl = find_neighbors(nodes, i, params.r_e)
        if len(nl) == 0:
            continue
        p_hat_i = min_hat_pressure(values, nl)
        if variant == "original":
            coeff = values[nl.indices] - p_hat_i
        elif variant == "kg":
            p_hat_j = np.array([min_hat_pressure(values, find_neighbors(nodes, j, params.r_e))
                                for j in nl.indices])
            coeff = (values[i] + values[nl.indices]) - (p_hat_i + p_hat_j)
        else:
            raise ValueError(f"unknown variant {variant!r}, expected 'original' or 'kg'")
        terms = prefac * (coeff / nl.distances**2 * nl.weights)[:, None] * nl.offsets
        total += terms.sum(axis=0)
        largest = max(largest, float(np.max(np.linalg.norm(terms, axis=1))))
    return total, largest
