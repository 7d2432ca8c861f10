"""Node sets, the MPS weight function, and neighbor queries.

Everything downstream (MPS operators, least-squares stencils, the BVP
harness) works on a :class:`NodeSet`: an immutable cloud of 1D or 2D
points.  This module also provides the standard MPS weight

    w(r) = r_e / r - 1   for 0 < r < r_e,   0 otherwise,

radius-based neighbor lists with precomputed offsets/distances/weights,
the particle number density (sum of weights), the weighted mean squared
neighbor distance used to normalize the MPS Laplacian, and the seeded
node generators for the 1D boundary-value experiment and 2D test grids.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

# Above this node count, radius queries go through a cKDTree instead of
# the dense pairwise scan.  Both paths must return identical lists.
_BRUTE_FORCE_LIMIT = 10_000


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Immutable set of nodes in 1 or 2 dimensions.

    positions : (count, dim) float array, dim in {1, 2}
    meta : free-form provenance (generator name, seed, rng identity)
    """

    positions: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] not in (1, 2):
            raise ValueError(f"positions must be (count, dim) with dim 1 or 2, got shape {pos.shape}")
        if pos.shape[0] < 2:
            raise ValueError("a NodeSet needs at least 2 nodes")
        if not np.all(np.isfinite(pos)):
            raise ValueError("node coordinates must be finite")
        pos = pos.copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        # nearest-neighbor distance via a KD-tree; coincident nodes are invalid
        d, _ = cKDTree(pos).query(pos, k=2)
        if np.min(d[:, 1]) <= 0.0:
            raise ValueError("coincident nodes are not allowed")

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def x(self) -> np.ndarray:
        """First coordinate of every node (the full axis for 1D sets)."""
        return self.positions[:, 0]

    def _tree(self) -> cKDTree:
        tree = self.__dict__.get("_kdtree")
        if tree is None:
            tree = cKDTree(self.positions)
            object.__setattr__(self, "_kdtree", tree)
        return tree


@dataclass(frozen=True)
class NeighborList:
    """Neighbors of one center node within the weight cutoff.

    The center itself is excluded; all stored distances satisfy
    0 < distance < r_e, so all stored weights are strictly positive.
    Entries are ordered by ascending node index.
    """

    center: int
    indices: np.ndarray
    offsets: np.ndarray    # positions[j] - positions[center], shape (J, dim)
    distances: np.ndarray  # Euclidean norms of the offsets, shape (J,)
    weights: np.ndarray    # w(distance), shape (J,)

    def __len__(self) -> int:
        return len(self.indices)


def weight(r, r_e: float):
    """MPS weight w(r) = r_e/r - 1 inside the cutoff, 0 at and beyond it.

    Accepts scalars or arrays.  The weight is singular at r = 0, so
    nonpositive distances are a domain error (coincident nodes are
    invalid input everywhere in this package).
    """
    if r_e <= 0.0:
        raise ValueError("cutoff radius r_e must be positive")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise ValueError("weight is defined for r > 0 only")
    out = np.where(r_arr < r_e, r_e / r_arr - 1.0, 0.0)
    if np.isscalar(r) or r_arr.ndim == 0:
        return float(out)
    return out


def find_neighbors(nodes: NodeSet, i: int, r_e: float) -> NeighborList:
    """All nodes j != i with |r_j - r_i| < r_e, in ascending index order.

    Offsets, distances and weights are precomputed.  Small sets use a
    dense pairwise scan; sets with >= 10^4 nodes use a KD-tree query.
    The two paths return identical neighbor lists.
    """
    if r_e <= 0.0:
        raise ValueError("cutoff radius r_e must be positive")
    if not 0 <= i < nodes.count:
        raise IndexError(f"node index {i} out of range for {nodes.count} nodes")
    pos = nodes.positions
    center = pos[i]
    if nodes.count < _BRUTE_FORCE_LIMIT:
        offsets = pos - center
        dist = np.linalg.norm(offsets, axis=1)
        mask = (dist > 0.0) & (dist < r_e)
        idx = np.nonzero(mask)[0]
    else:
        cand = np.asarray(nodes._tree().query_ball_point(center, r_e), dtype=int)
        cand.sort()
        offsets = pos[cand] - center
        dist = np.linalg.norm(offsets, axis=1)
        keep = (dist > 0.0) & (dist < r_e)
        idx = cand[keep]
    off = pos[idx] - center
    d = np.linalg.norm(off, axis=1)
    return NeighborList(center=i, indices=idx, offsets=off, distances=d,
                        weights=r_e / d - 1.0)


def k_nearest(nodes: NodeSet, i: int, k: int) -> np.ndarray:
    """Indices of the k nearest nodes to node i (excluding i itself).

    Ties are broken by ascending distance, then ascending node index,
    so the selection is deterministic.
    """
    if not 0 <= i < nodes.count:
        raise IndexError(f"node index {i} out of range for {nodes.count} nodes")
    if not 1 <= k <= nodes.count - 1:
        raise ValueError(f"k must be in [1, {nodes.count - 1}], got {k}")
    dist = np.linalg.norm(nodes.positions - nodes.positions[i], axis=1)
    dist[i] = np.inf
    order = np.lexsort((np.arange(nodes.count), dist))
    return np.sort(order[:k])


def particle_number_density(nl: NeighborList) -> float:
    """Sum of weights over the neighbor list (0 for an isolated node)."""
    return float(np.sum(nl.weights))


def lambda_coefficient(nl: NeighborList) -> float:
    """Weighted mean squared neighbor distance,
    sum(|r_j - r_i|^2 w) / sum(w).

    This is the normalization constant in the MPS Laplacian.  Raises on
    an empty neighbor list (the density in the denominator is zero).
    """
    if len(nl) == 0:
        raise ValueError("lambda coefficient undefined for an empty neighbor list")
    wsum = np.sum(nl.weights)
    return float(np.sum(nl.distances**2 * nl.weights) / wsum)


def generate_regular_1d(m_total: int) -> NodeSet:
    """m_total equally spaced nodes spanning [-1, 1] inclusive."""
    if m_total < 2:
        raise ValueError("m_total must be >= 2")
    x = np.linspace(-1.0, 1.0, m_total)
    return NodeSet(x[:, None], meta={"generator": "regular_1d", "m_total": m_total})


def generate_perturbed_1d(m_total: int, rho_rnd: float, seed: int) -> NodeSet:
    """Regular 1D nodes with interior positions jittered by uniform noise.

    Each interior node moves by a draw from (-rho_rnd*dx, +rho_rnd*dx),
    where dx = 2/(m_total - 1).  The endpoint nodes stay pinned at -1
    and +1 so Dirichlet data can be imposed exactly.  The same seed
    always reproduces the same node set bit for bit.  rho_rnd < 0.5
    preserves node ordering; at larger amplitudes a collision guard
    redraws with seed+1 if two nodes land closer than 1e-9*dx.
    """
    if m_total < 2:
        raise ValueError("m_total must be >= 2")
    if not 0.0 <= rho_rnd < 1.0:
        raise ValueError(f"rho_rnd must be in [0, 1), got {rho_rnd}")
    dx = 2.0 / (m_total - 1)
    use_seed = int(seed)
    while True:
        x = np.linspace(-1.0, 1.0, m_total)
        rng = np.random.default_rng(use_seed)
        if m_total > 2:
            x[1:-1] += rng.uniform(-rho_rnd * dx, rho_rnd * dx, size=m_total - 2)
        gaps = np.abs(np.diff(np.sort(x)))
        if np.min(gaps) >= 1e-9 * dx:
            break
        use_seed += 1
    meta = {"generator": "perturbed_1d", "m_total": m_total, "rho_rnd": rho_rnd,
            "seed": int(seed), "effective_seed": use_seed,
            "rng": "numpy.random.default_rng (PCG64)"}
    return NodeSet(x[:, None], meta=meta)


def generate_grid_2d(nx: int, ny: int, spacing: float, jitter: float = 0.0,
                     seed: int = 0) -> NodeSet:
    """nx-by-ny grid with each coordinate jittered by uniform noise.

    The noise half-width is jitter*spacing per coordinate; jitter must
    stay below 0.5 so nodes cannot coincide.  Node order is row-major
    (x fastest).  Deterministic under the seed.
    """
    if nx < 2 or ny < 2:
        raise ValueError("nx and ny must be >= 2")
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")
    if not 0.0 <= jitter < 0.5:
        raise ValueError(f"jitter must be in [0, 0.5), got {jitter}")
    xs, ys = np.meshgrid(np.arange(nx) * spacing, np.arange(ny) * spacing)
    pos = np.column_stack([xs.ravel(), ys.ravel()])
    rng = np.random.default_rng(seed)
    if jitter > 0.0:
        pos = pos + rng.uniform(-jitter * spacing, jitter * spacing, size=pos.shape)
    meta = {"generator": "grid_2d", "nx": nx, "ny": ny, "spacing": spacing,
            "jitter": jitter, "seed": int(seed),
            "rng": "numpy.random.default_rng (PCG64)"}
    return NodeSet(pos, meta=meta)


def save_csv(nodes: NodeSet, path) -> None:
    """Write `index,x[,y]` rows with 17 significant digits (lossless)."""
    header = "index,x" if nodes.dim == 1 else "index,x,y"
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        for i, p in enumerate(nodes.positions):
            f.write(str(i) + "," + ",".join(f"{c:.17g}" for c in p) + "\n")


def load_csv(path) -> NodeSet:
    """Read a node set written by :func:`save_csv`."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:2] != ["index", "x"] or len(header) > 3 or (len(header) == 3 and header[2] != "y"):
            raise ValueError(f"unrecognized node CSV header: {header}")
        rows = [[float(c) for c in row[1:]] for row in reader if row]
    return NodeSet(np.asarray(rows), meta={"source": str(path)})
