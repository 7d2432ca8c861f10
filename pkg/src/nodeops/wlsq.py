"""Weighted least-squares derivative estimation from local Taylor systems.

Around a center node i, each neighbor j contributes one row of an
overdetermined linear system in the unknown derivatives at i.  Three row
layouts are supported:

* first order, normalized rows: offsets and right-hand side both divided
  by the neighbor distance, so every row has unit norm (the
  Iribe-Nakaza construction for an improved gradient);
* first order, plain rows: raw offset components against phi_j - phi_i;
* second order: columns (dx, 0.5*dx^2) in 1D or
  (dx, dy, 0.5*dx^2, dx*dy, 0.5*dy^2) in 2D, so the solved unknowns are
  true derivatives.  (The half factors on the squared terms come from
  the Taylor expansion; dropping them would rescale the second
  derivatives by 2.)

The weighted normal equations

    theta = (A^T W A)^{-1} A^T W b

are the default solve path.  Because they square the conditioning, a QR
solve of the row-scaled system takes over once the condition estimate of
A^T W A reaches 1e8, and anything at or beyond 1e12 is rejected as a
degenerate stencil.  Offsets are rescaled by the mean neighbor distance
before the normal equations are formed and the solution is mapped back
afterward, which keeps condition estimates comparable across node
spacings.

`stencil_coefficients` exposes any single solved derivative as an
explicit linear functional c_i*phi_i + sum_j c_j*phi_j of nodal values
(the coefficients sum to zero), which is what global assembly of a
boundary value problem needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nodes import NodeSet, find_neighbors, weight

COND_QR_SWITCH = 1e8
COND_LIMIT = 1e12

_LABELS_1D_O1 = ("dx",)
_LABELS_1D_O2 = ("dx", "dxx")
_LABELS_2D_O1 = ("dx", "dy")
_LABELS_2D_O2 = ("dx", "dy", "dxx", "dxy", "dyy")
_LABEL_ORDER = {"dx": 1, "dy": 1, "dxx": 2, "dxy": 2, "dyy": 2}


class UnderdeterminedStencilError(ValueError):
    """Fewer neighbors than unknown derivatives."""


class DegenerateStencilError(ValueError):
    """Numerically rank-deficient stencil; carries the condition estimate."""

    def __init__(self, condition: float, detail: str = ""):
        self.condition = condition
        msg = f"degenerate stencil (condition estimate {condition:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


@dataclass
class StencilSystem:
    """One local least-squares problem: matrix rows over neighbors,
    unknown derivative labels over columns.

    matrix : (J, K) rows built from true neighbor offsets
    rhs : (J,) values rhs_scale_j * (phi_j - phi_i)
    row_weights : (J,) strictly positive row weights
    labels : K unknown names drawn from dx, dy, dxx, dxy, dyy
    neighbor_indices : (J,) node indices, ascending
    center : index of the expansion node
    rhs_scale : (J,) factor applied to the raw differences (1, or
        1/distance for normalized rows); kept so the solution can be
        re-expressed as a linear functional of nodal values
    column_scales : (K,) conditioning rescale applied inside the solver
    """

    matrix: np.ndarray
    rhs: np.ndarray
    row_weights: np.ndarray
    labels: tuple
    neighbor_indices: np.ndarray
    center: int
    rhs_scale: np.ndarray
    column_scales: np.ndarray

    def __post_init__(self):
        j, k = self.matrix.shape
        if len(self.labels) != k or len(set(self.labels)) != k:
            raise ValueError("labels must be unique and match the column count")
        if j < k:
            raise UnderdeterminedStencilError(
                f"underdetermined stencil: {j} neighbors for {k} unknowns")
        if np.any(self.row_weights <= 0.0):
            raise ValueError("row weights must be strictly positive")


@dataclass
class DerivativeEstimate:
    """Solved derivatives keyed by label, plus the condition estimate of
    the (rescaled) normal-equation matrix."""

    values: dict
    condition_estimate: float

    def __getitem__(self, label: str) -> float:
        return self.values[label]

    @property
    def gradient(self) -> np.ndarray:
        if "dy" in self.values:
            return np.array([self.values["dx"], self.values["dy"]])
        return np.array([self.values["dx"]])

    @property
    def laplacian(self) -> float:
        return self.values["dxx"] + self.values.get("dyy", 0.0)


@dataclass
class StencilCoefficients:
    """A solved derivative as a linear functional of nodal values:

        estimate = center_coeff * phi_center + sum_j coefficients_j * phi_j

    Built from differences phi_j - phi_center, so the coefficients sum
    to zero and constants are annihilated exactly.
    """

    target: str
    center: int
    center_coeff: float
    neighbor_indices: np.ndarray
    coefficients: np.ndarray

    def apply(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float(self.coefficients @ values[self.neighbor_indices]
                     + self.center_coeff * values[self.center])


def _neighbor_geometry(nodes, i, r_e=None, neighbor_indices=None,
                       weight_mode="mps", row_weights=None):
    """Resolve the neighbor set and per-row weights for a local system.

    Neighbors come either from a radius query (r_e) or from an explicit
    index list (the k-nearest mode that the BVP harness uses).  Row
    weights are the MPS weight at the neighbor distance, ones, or a
    caller-supplied positive vector.
    """
    if neighbor_indices is not None:
        idx = np.asarray(neighbor_indices, dtype=int)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("neighbor_indices must be a non-empty 1D index list")
        if np.any(idx == i):
            raise ValueError("neighbor_indices must not contain the center node")
        offsets = nodes.positions[idx] - nodes.positions[i]
        dist = np.linalg.norm(offsets, axis=1)
    else:
        if r_e is None:
            raise ValueError("either r_e or neighbor_indices is required")
        nl = find_neighbors(nodes, i, r_e)
        idx, offsets, dist = nl.indices, nl.offsets, nl.distances

    if row_weights is not None:
        w = np.asarray(row_weights, dtype=float)
        if w.shape != dist.shape:
            raise ValueError("row_weights must have one entry per neighbor")
    elif weight_mode == "identity":
        w = np.ones_like(dist)
    elif weight_mode == "mps":
        if r_e is None:
            raise ValueError("weight_mode='mps' requires r_e")
        w = np.asarray(weight(dist, r_e), dtype=float)
    else:
        raise ValueError(f"unknown weight_mode {weight_mode!r}")
    if np.any(w <= 0.0):
        raise ValueError("nonpositive row weight: a selected neighbor lies at or "
                         "beyond the weight cutoff")
    return idx, offsets, dist, w


def _first_order_columns(offsets, dist, normalized):
    dim = offsets.shape[1]
    labels = _LABELS_1D_O1 if dim == 1 else _LABELS_2D_O1
    if normalized:
        matrix = offsets / dist[:, None]
        rhs_scale = 1.0 / dist
        column_scales = np.ones(dim)
    else:
        matrix = offsets.copy()
        rhs_scale = np.ones_like(dist)
        h = float(dist.mean())
        column_scales = np.full(dim, 1.0 / h)
    return matrix, rhs_scale, labels, column_scales


def _second_order_columns(offsets, dist):
    dim = offsets.shape[1]
    h = float(dist.mean())
    if dim == 1:
        dx = offsets[:, 0]
        matrix = np.column_stack([dx, 0.5 * dx**2])
        labels = _LABELS_1D_O2
    else:
        dx, dy = offsets[:, 0], offsets[:, 1]
        matrix = np.column_stack([dx, dy, 0.5 * dx**2, dx * dy, 0.5 * dy**2])
        labels = _LABELS_2D_O2
    column_scales = np.array([h ** -_LABEL_ORDER[lbl] for lbl in labels])
    return matrix, np.ones_like(dist), labels, column_scales


def build_first_order(nodes: NodeSet, values, i: int, r_e: float | None = None,
                      normalized: bool = False, weight_mode: str = "mps",
                      neighbor_indices=None, row_weights=None) -> StencilSystem:
    """First-order Taylor system for the gradient at node i."""
    values = np.asarray(values, dtype=float)
    idx, offsets, dist, w = _neighbor_geometry(nodes, i, r_e, neighbor_indices,
                                               weight_mode, row_weights)
    matrix, rhs_scale, labels, col = _first_order_columns(offsets, dist, normalized)
    rhs = rhs_scale * (values[idx] - values[i])
    return StencilSystem(matrix, rhs, w, labels, idx, i, rhs_scale, col)


def build_second_order(nodes: NodeSet, values, i: int, r_e: float | None = None,
                       weight_mode: str = "mps", neighbor_indices=None,
                       row_weights=None) -> StencilSystem:
    """Second-order Taylor system: all derivatives up to order two at node i."""
    values = np.asarray(values, dtype=float)
    idx, offsets, dist, w = _neighbor_geometry(nodes, i, r_e, neighbor_indices,
                                               weight_mode, row_weights)
    matrix, rhs_scale, labels, col = _second_order_columns(offsets, dist)
    rhs = rhs_scale * (values[idx] - values[i])
    return StencilSystem(matrix, rhs, w, labels, idx, i, rhs_scale, col)


def _scaled_normal_matrix(matrix, row_weights, column_scales):
    scaled = matrix * column_scales
    normal = (scaled.T * row_weights) @ scaled
    cond = float(np.linalg.cond(normal))
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        raise DegenerateStencilError(cond if np.isfinite(cond) else np.inf)
    return scaled, normal, cond


def _solve_scaled(scaled, normal, cond, row_weights, rhs):
    if cond >= COND_QR_SWITCH:
        sq = np.sqrt(row_weights)
        sol, *_ = np.linalg.lstsq(sq[:, None] * scaled, sq * rhs, rcond=None)
        return sol
    return np.linalg.solve(normal, scaled.T @ (row_weights * rhs))


def solve_wlsq(system: StencilSystem) -> DerivativeEstimate:
    """Solve the weighted least-squares system for the derivative estimates."""
    scaled, normal, cond = _scaled_normal_matrix(system.matrix, system.row_weights,
                                                 system.column_scales)
    theta = _solve_scaled(scaled, normal, cond, system.row_weights, system.rhs)
    theta = theta * system.column_scales
    return DerivativeEstimate(dict(zip(system.labels, map(float, theta))), cond)


def gradient(nodes: NodeSet, values, i: int, r_e: float | None = None,
             normalized: bool = False, weight_mode: str = "mps",
             neighbor_indices=None, row_weights=None) -> np.ndarray:
    """Least-squares gradient at node i (build + solve in one call)."""
    system = build_first_order(nodes, values, i, r_e, normalized, weight_mode,
                               neighbor_indices, row_weights)
    return solve_wlsq(system).gradient


def derivatives2(nodes: NodeSet, values, i: int, r_e: float | None = None,
                 weight_mode: str = "mps", neighbor_indices=None,
                 row_weights=None) -> DerivativeEstimate:
    """All derivatives up to second order at node i; the Laplacian is the
    trace of the solved second derivatives."""
    system = build_second_order(nodes, values, i, r_e, weight_mode,
                                neighbor_indices, row_weights)
    return solve_wlsq(system)


def stencil_coefficients(nodes: NodeSet, i: int, target: str, order: int = 2,
                         normalized: bool = False, r_e: float | None = None,
                         weight_mode: str = "mps", neighbor_indices=None,
                         row_weights=None) -> StencilCoefficients:
    """Extract one solved derivative as coefficients on nodal values.

    Applying the result to a field reproduces the corresponding
    solve_wlsq estimate exactly; this is purely a refactoring of the
    least-squares solution operator, not a new approximation.
    """
    idx, offsets, dist, w = _neighbor_geometry(nodes, i, r_e, neighbor_indices,
                                               weight_mode, row_weights)
    if order == 1:
        matrix, rhs_scale, labels, col = _first_order_columns(offsets, dist, normalized)
    elif order == 2:
        if normalized:
            raise ValueError("normalized rows are a first-order construction")
        matrix, rhs_scale, labels, col = _second_order_columns(offsets, dist)
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    if target not in labels:
        raise ValueError(f"target {target!r} not among unknowns {labels}")
    if matrix.shape[0] < matrix.shape[1]:
        raise UnderdeterminedStencilError(
            f"underdetermined stencil: {matrix.shape[0]} neighbors for "
            f"{matrix.shape[1]} unknowns")

    scaled, normal, cond = _scaled_normal_matrix(matrix, w, col)
    if cond >= COND_QR_SWITCH:
        sq = np.sqrt(w)
        g, *_ = np.linalg.lstsq(sq[:, None] * scaled, np.diag(sq), rcond=None)
    else:
        g = np.linalg.solve(normal, scaled.T * w)
    row = g[labels.index(target)] * col[labels.index(target)]
    coeffs = row * rhs_scale
    return StencilCoefficients(target=target, center=i,
                               center_coeff=float(-np.sum(coeffs)),
                               neighbor_indices=idx, coefficients=coeffs)
