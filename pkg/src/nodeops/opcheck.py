"""Cross-operator consistency battery.

Each check compares an operator against an independent oracle (direct
stencil formulas, exact polynomial derivatives, or a side-by-side run of
an algebraically equivalent construction) and reports the worst residual
against a fixed bound.  The battery backs the `op-check` CLI command and
the acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ddin, wlsq
from .mps import MpsParams, mps_laplacian, reference_number_density, total_pressure_force
from .nodes import NodeSet, find_neighbors, generate_grid_2d


@dataclass
class CheckResult:
    name: str
    configuration: str
    residual: float
    bound: float
    passed: bool


def _random_patch(rng):
    """Jittered 3x3 neighborhood: a 2D node set with the center node last.

    Generic position with modest conditioning, the regime the operators
    are meant for.
    """
    s = rng.uniform(0.05, 0.5)
    ring = np.array([(ix, iy) for ix in (-1, 0, 1) for iy in (-1, 0, 1)
                     if (ix, iy) != (0, 0)], dtype=float) * s
    ring += rng.uniform(-0.3 * s, 0.3 * s, ring.shape)
    center = rng.uniform(-1.0, 1.0, 2)
    pos = np.vstack([center + ring, center])
    return NodeSet(pos), pos.shape[0] - 1, 2.5 * s


def check_mps_five_point(seed: int, trials: int = 100) -> CheckResult:
    """Classic Laplacian vs the 5-point stencil on a uniform grid.

    With only the four axis neighbors inside the cutoff and n0 equal to
    the interior number density, the two are algebraically identical.
    """
    spacing, r_e = 0.1, 0.12
    grid = generate_grid_2d(5, 5, spacing, jitter=0.0, seed=0)
    center = 12  # (2, 2) in row-major order
    east, west, north, south = 13, 11, 17, 7
    params = MpsParams(r_e=r_e, dim=2,
                       n0=reference_number_density(spacing, r_e, 2))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = rng.normal(size=grid.count)
        mps_val = mps_laplacian(f, grid, center, params)
        five = (f[east] + f[west] + f[north] + f[south] - 4.0 * f[center]) / spacing**2
        worst = max(worst, abs(mps_val - five) / max(abs(five), 1e-30))
    return CheckResult("mps_five_point_reduction",
                       f"5x5 grid, spacing={spacing}, re={r_e}, {trials} random fields",
                       worst, 1e-12, worst <= 1e-12)


def check_lsq_affine(seed: int, trials: int = 100) -> CheckResult:
    """First-order gradient must be exact on affine fields."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        nodes, i, r_e = _random_patch(rng)
        a, b, c = rng.normal(size=3)
        f = a + b * nodes.positions[:, 0] + c * nodes.positions[:, 1]
        g = wlsq.gradient(nodes, f, i, r_e=r_e, normalized=bool(rng.integers(2)))
        worst = max(worst, float(np.max(np.abs(g - (b, c)))))
    return CheckResult("lsq_affine_exactness",
                       f"{trials} random affine fields on jittered stencils",
                       worst, 1e-10, worst <= 1e-10)


def check_lsq_quadratic(seed: int, trials: int = 100) -> CheckResult:
    """Second-order estimates must be exact on degree-2 polynomials."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        nodes, i, r_e = _random_patch(rng)
        coef = rng.normal(size=6)
        x = nodes.positions[:, 0] - nodes.positions[i, 0]
        y = nodes.positions[:, 1] - nodes.positions[i, 1]
        f = coef[0] + coef[1]*x + coef[2]*y + coef[3]*x*x + coef[4]*x*y + coef[5]*y*y
        est = wlsq.derivatives2(nodes, f, i, r_e=r_e)
        truth = {"dx": coef[1], "dy": coef[2], "dxx": 2*coef[3],
                 "dxy": coef[4], "dyy": 2*coef[5]}
        worst = max(worst, max(abs(est[k] - v) for k, v in truth.items()))
    return CheckResult("lsq_quadratic_exactness",
                       f"{trials} random degree-2 fields on jittered stencils",
                       worst, 1e-8, worst <= 1e-8)


def check_normalization_equivalence(seed: int, trials: int = 100) -> CheckResult:
    """Row-normalized first-order system with weights W == plain system
    with weights W/d^2 (row scaling by s is weight scaling by s^2)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        nodes, i, r_e = _random_patch(rng)
        f = np.sin(1.3 * nodes.positions[:, 0]) * np.cos(0.7 * nodes.positions[:, 1])
        nl = find_neighbors(nodes, i, r_e)
        g_norm = wlsq.gradient(nodes, f, i, normalized=True,
                               neighbor_indices=nl.indices, row_weights=nl.weights)
        g_plain = wlsq.gradient(nodes, f, i, normalized=False,
                                neighbor_indices=nl.indices,
                                row_weights=nl.weights / nl.distances**2)
        scale = max(float(np.max(np.abs(g_norm))), 1e-30)
        worst = max(worst, float(np.max(np.abs(g_norm - g_plain))) / scale)
    return CheckResult("normalization_equivalence",
                       f"{trials} random stencils, smooth field",
                       worst, 1e-12, worst <= 1e-12)


def _ddin_vs_taylor(rng, order: int) -> float:
    nodes, i, r_e = _random_patch(rng)
    f = np.sin(1.1 * nodes.positions[:, 0] + 0.3) * np.cos(0.8 * nodes.positions[:, 1] - 0.2)
    basis = ddin.power_basis(order=order, dim=2)
    interp = ddin.fit(nodes, f, i, basis, r_e=r_e)
    if order == 1:
        ref = wlsq.gradient(nodes, f, i, r_e=r_e)
        got = np.array([ddin.apply_operator(interp, "dx"),
                        ddin.apply_operator(interp, "dy")])
    else:
        est = wlsq.derivatives2(nodes, f, i, r_e=r_e)
        labels = ("dx", "dy", "dxx", "dxy", "dyy")
        ref = np.array([est[k] for k in labels])
        got = np.array([ddin.apply_operator(interp, k) for k in labels])
    return float(np.max(np.abs(got - ref)) / max(np.max(np.abs(ref)), 1e-30))


def check_ddin_equivalence(seed: int, order: int, trials: int = 100) -> CheckResult:
    """Monomial-basis interpolation reproduces the Taylor least-squares
    estimates of the same order (same weights, same neighbors)."""
    rng = np.random.default_rng(seed)
    worst = max(_ddin_vs_taylor(rng, order) for _ in range(trials))
    return CheckResult(f"ddin_equivalence_order{order}",
                       f"{trials} random stencils, power basis order {order}",
                       worst, 1e-12, worst <= 1e-12)


def check_kg_force_sum(seed: int, clouds: int = 20) -> CheckResult:
    """Pair-symmetric pressure forces must sum to zero over any cloud."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(clouds):
        n = int(rng.integers(8, 16))
        nodes = NodeSet(rng.uniform(0.0, 1.0, (n, 2)))
        p = rng.uniform(0.0, 5.0, n)
        params = MpsParams(r_e=0.55, dim=2, n0=3.0)
        total, largest = total_pressure_force(p, nodes, params, mass=1.2, rho=2.5,
                                              variant="kg")
        if largest > 0.0:
            worst = max(worst, float(np.linalg.norm(total)) / largest)
    return CheckResult("kg_force_sum",
                       f"{clouds} random clouds in the unit square, re=0.55",
                       worst, 1e-13, worst <= 1e-13)


def check_original_force_sum() -> CheckResult:
    """The classic min-hat pressure force is NOT conservative: this check
    passes when the constructed configuration shows a total force well
    above roundoff."""
    nodes = NodeSet(np.array([[0.0], [1.0], [2.0]]))
    p = np.array([0.0, 1.0, 2.0])
    params = MpsParams(r_e=1.5, dim=1,
                       n0=reference_number_density(1.0, 1.5, 1))
    total, largest = total_pressure_force(p, nodes, params, mass=1.0, rho=1.0,
                                          variant="original")
    residual = float(np.linalg.norm(total)) / largest
    return CheckResult("mps_original_force_sum",
                       "3 collinear particles, p=(0,1,2), re=1.5",
                       residual, 1e-6, residual > 1e-6)


def run_battery(seed: int = 1) -> list:
    """Run every check with sub-seeds derived from the base seed."""
    return [
        check_mps_five_point(seed),
        check_lsq_affine(seed + 1),
        check_lsq_quadratic(seed + 2),
        check_normalization_equivalence(seed + 3),
        check_ddin_equivalence(seed + 4, order=1),
        check_ddin_equivalence(seed + 5, order=2),
        check_kg_force_sum(seed + 6),
        check_original_force_sum(),
    ]
