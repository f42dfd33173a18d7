"""Dense related regions in the plane of a feature pair.

Two estimators are provided. The rolling-window estimator places a cell on
every observation and is quadratic in the number of observations; the grid
estimator uses ``round(3 ln N)`` equal bins per axis and merges dense cells
through 8-connectivity. In both, a cell is dense when its joint density
beats the densities of its two marginal strips and the global average.
"""

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .core import (
    DenseRegionSet,
    InsufficientDataError,
    NormalizedMatrix,
    ParameterSet,
    ReldencluError,
    TooFewFeaturesError,
    ZeroSeparationError,
)

logger = logging.getLogger(__name__)

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


# ---------------------------------------------------------------------------
# bin sizing
# ---------------------------------------------------------------------------


def maximal_separation(column):
    """Largest gap between consecutive values of the sorted column."""
    x = np.sort(np.asarray(column, dtype=np.float64))
    if x.size < 2:
        raise InsufficientDataError("maximal separation needs at least two values")
    return float(np.max(np.diff(x)))


def small_bin_length(sep, c=0.4999):
    """Cell length ``sep ** c`` used by the rolling-window estimator.

    With ``c < 0.5`` the cell area shrinks to zero while the expected number
    of observations per cell still grows without bound.
    """
    if not 0 < c < 0.5:
        raise ReldencluError(f"c must lie strictly inside (0, 0.5), got {c}")
    if sep == 0:
        raise ZeroSeparationError("zero maximal separation (column saturated with duplicates)")
    if not 0 < sep <= 1:
        raise ReldencluError(f"separation must lie in (0, 1], got {sep}")
    return float(sep ** c)


def large_partition_count(n):
    """Number of equal bins per axis for the grid estimator: ``round(3 ln n)``, at least 2."""
    if n < 2:
        raise InsufficientDataError(f"need at least two observations, got {n}")
    return max(2, int(math.floor(3.0 * math.log(n) + 0.5)))


# ---------------------------------------------------------------------------
# dense cell test
# ---------------------------------------------------------------------------


def dense_cell_predicate(joint, marg_x, marg_y, n_x, n_y):
    """Return True when a cell's joint probability marks it as dense.

    The three strict inequalities are ``joint > marg_x / n_y``,
    ``joint > marg_y / n_x`` and ``joint > 1 / (n_x n_y)``. Pass
    :class:`fractions.Fraction` values for exact comparisons.
    """
    return bool(
        joint * n_y > marg_x
        and joint * n_x > marg_y
        and joint * n_x * n_y > 1
    )


@dataclass(frozen=True)
class CellGeometry:
    center: tuple
    half_widths: tuple

    def contains(self, x, y):
        """Half-open membership ``(c - h, c + h]`` on both axes."""
        (cx, cy), (hx, hy) = self.center, self.half_widths
        return (cx - hx < x <= cx + hx) and (cy - hy < y <= cy + hy)


@dataclass(frozen=True)
class GridHistogram:
    """Joint counts of two normalized columns on an equal-width grid."""

    counts: np.ndarray
    total: int

    @property
    def n_x(self):
        return self.counts.shape[0]

    @property
    def n_y(self):
        return self.counts.shape[1]

    @property
    def bins_x(self):
        return np.arange(self.n_x + 1) / self.n_x

    @property
    def bins_y(self):
        return np.arange(self.n_y + 1) / self.n_y

    @property
    def joint(self):
        return self.counts / self.total

    @property
    def marginal_x(self):
        return self.counts.sum(axis=1) / self.total

    @property
    def marginal_y(self):
        return self.counts.sum(axis=0) / self.total

    def dense_mask(self):
        """Cells passing the dense test, evaluated on integer counts exactly."""
        c = self.counts.astype(np.int64)
        cx = c.sum(axis=1, keepdims=True)
        cy = c.sum(axis=0, keepdims=True)
        return (c * self.n_y > cx) & (c * self.n_x > cy) & (c * self.n_x * self.n_y > self.total)


def bin_index(values, n_bins):
    """Bin of each value for ``n_bins`` half-open bins ``(k/n, (k+1)/n]``; 0 goes to bin 0.

    Values lying within rounding distance of an edge are resolved with exact
    rational arithmetic, so the assignment matches the interval definition
    rather than the rounded float edges.
    """
    v = np.asarray(values, dtype=np.float64)
    scaled = v * n_bins
    idx = np.ceil(scaled).astype(np.intp) - 1
    near = np.flatnonzero(np.abs(scaled - np.round(scaled)) <= 1e-9 * max(1.0, n_bins))
    for k in near:
        idx[k] = math.ceil(Fraction(float(v[k])) * n_bins) - 1
    return np.clip(idx, 0, n_bins - 1)


def grid_histogram(x, y, n_bins):
    bx, by = bin_index(x, n_bins), bin_index(y, n_bins)
    counts = np.bincount(bx * n_bins + by, minlength=n_bins * n_bins).reshape(n_bins, n_bins)
    return GridHistogram(counts=counts, total=len(bx))


# ---------------------------------------------------------------------------
# grid estimator
# ---------------------------------------------------------------------------


def _regions_from_bins(bx, by, n_bins, feature_pair):
    n = len(bx)
    flat = bx * n_bins + by
    counts = np.bincount(flat, minlength=n_bins * n_bins).reshape(n_bins, n_bins)
    hist = GridHistogram(counts=counts, total=n)
    labels, n_regions = ndimage.label(hist.dense_mask(), structure=EIGHT_CONNECTED)
    if n_regions == 0:
        return DenseRegionSet(feature_pair, (), n_obs=n)
    point_label = labels.ravel()[flat]
    order = np.argsort(point_label, kind="stable")
    bounds = np.searchsorted(point_label[order], np.arange(1, n_regions + 2))
    regions = tuple(order[bounds[k]:bounds[k + 1]] for k in range(n_regions))
    return DenseRegionSet(feature_pair, regions, n_obs=n)


def dense_regions_large(x, y, n_bins=None, feature_pair=(0, 1)):
    """Grid estimator of dense regions.

    Parameters
    ----------
    x, y : array-like of shape (n_obs,)
        Normalized columns.
    n_bins : int, optional
        Bins per axis, ``large_partition_count(n_obs)`` by default.

    Returns
    -------
    DenseRegionSet
        One region per 8-connected group of dense cells, holding the
        observations that fall in the group's cells.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ReldencluError("columns must have the same length")
    if n_bins is None:
        n_bins = large_partition_count(len(x))
    return _regions_from_bins(bin_index(x, n_bins), bin_index(y, n_bins), n_bins, feature_pair)


# ---------------------------------------------------------------------------
# rolling-window estimator
# ---------------------------------------------------------------------------


def dense_regions_small(x, y, c=0.4999, feature_pair=(0, 1)):
    """Rolling-window estimator of dense regions.

    Each observation carries a cell of length ``s ** c`` per axis, ``s``
    being that axis' maximal separation. The steps are:

    1. neighbours: points closer than one cell length on both axes;
    2. survivors: neighbour count above the global average count and cell
       density above both marginal strip densities;
    3. surviving pairs merge when four times the shared-neighbour count per
       cell area beats all four marginal strip densities;
    4. survivors that merged with nobody are dropped;
    5. the rest are split into connected components, two points being linked
       when their Euclidean distance is below ``ln(npc) / npc``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ReldencluError("columns must have the same length")
    n = len(x)
    if n < 2:
        raise InsufficientDataError("need at least two observations")
    len_x = small_bin_length(maximal_separation(x), c)
    len_y = small_bin_length(maximal_separation(y), c)

    dx = np.abs(x[:, None] - x[None, :])
    dy = np.abs(y[:, None] - y[None, :])
    neigh = (dx < len_x) & (dy < len_y)
    np.fill_diagonal(neigh, False)
    n_neigh = neigh.sum(axis=1)
    # marginal strips span the whole of the other axis and include the point itself
    marg_x = (dx < len_x / 2).sum(axis=1)
    marg_y = (dy < len_y / 2).sum(axis=1)
    del dx, dy

    area = len_x * len_y
    cell_density = n_neigh / area
    strip_x = marg_x / len_x
    strip_y = marg_y / len_y
    average = n * len_x * len_y
    finset = np.flatnonzero((n_neigh > average) & (cell_density > strip_x) & (cell_density > strip_y))
    if finset.size < 2:
        return DenseRegionSet(feature_pair, (), n_obs=n)

    sub = neigh[finset].astype(np.float32)
    shared = (sub @ sub.T).astype(np.int64)
    strip_max = np.maximum(strip_x[finset], strip_y[finset])
    merged = shared * 4 / area > np.maximum(strip_max[:, None], strip_max[None, :])
    np.fill_diagonal(merged, False)
    # transitive closure of the merges cannot add a point without a direct
    # merge partner, so only the direct partners are needed here
    finset = finset[merged.any(axis=1)]
    npc = finset.size
    if npc == 0:
        return DenseRegionSet(feature_pair, (), n_obs=n)

    rad = math.log(npc) / npc
    pts = np.column_stack([x[finset], y[finset]])
    pairs = cKDTree(pts).query_pairs(rad, output_type="ndarray") if rad > 0 else np.empty((0, 2), int)
    if len(pairs):
        # query_pairs is inclusive; the link is strict
        d = np.hypot(*(pts[pairs[:, 0]] - pts[pairs[:, 1]]).T)
        pairs = pairs[d < rad]
    graph = csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(npc, npc))
    n_comp, comp = connected_components(graph, directed=False)
    regions = tuple(finset[comp == k] for k in range(n_comp))
    return DenseRegionSet(feature_pair, regions, n_obs=n)


# ---------------------------------------------------------------------------
# all pairs
# ---------------------------------------------------------------------------


def _worker_count(n_jobs=None):
    if n_jobs is None:
        n_jobs = int(os.environ.get("RELDENCLU_THREADS", "0") or 0)
    if n_jobs <= 0:
        n_jobs = os.cpu_count() or 1
    return n_jobs


def find_dense_regions(matrix, params=None, n_jobs=None):
    """Dense regions for every unordered feature pair.

    Parameters
    ----------
    matrix : NormalizedMatrix
    params : ParameterSet, optional
    n_jobs : int, optional
        Worker threads; falls back to ``RELDENCLU_THREADS`` and then to the
        CPU count.

    Returns
    -------
    dict
        ``{(i, j): DenseRegionSet}`` for ``i < j``, in lexicographic order.
        Pairs touching a constant column map to an empty set.
    """
    params = params or ParameterSet()
    values = matrix.values if isinstance(matrix, NormalizedMatrix) else np.asarray(matrix, dtype=np.float64)
    n, m = values.shape
    if m < 3:
        raise TooFewFeaturesError(f"need at least 3 features to form triplets, got {m}")
    if isinstance(matrix, NormalizedMatrix):
        degenerate = np.asarray(matrix.degenerate, dtype=bool)
    else:
        degenerate = values.max(axis=0) == values.min(axis=0)
    path = params.density_path(n)
    pairs = list(combinations(range(m), 2))

    if path == "large":
        n_bins = large_partition_count(n)
        bins = [bin_index(values[:, j], n_bins) for j in range(m)]

        def one(pair):
            i, j = pair
            if degenerate[i] or degenerate[j]:
                return DenseRegionSet(pair, (), n_obs=n)
            return _regions_from_bins(bins[i], bins[j], n_bins, pair)
    else:

        def one(pair):
            i, j = pair
            if degenerate[i] or degenerate[j]:
                return DenseRegionSet(pair, (), n_obs=n)
            try:
                return dense_regions_small(values[:, i], values[:, j], params.small_c, pair)
            except ZeroSeparationError:
                warnings.warn(f"pair {pair} skipped: zero separation", stacklevel=2)
                return DenseRegionSet(pair, (), n_obs=n)

    workers = min(_worker_count(n_jobs), len(pairs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, pairs))
    else:
        results = [one(p) for p in pairs]
    logger.debug("dense regions: %s path, %d pairs", path, len(pairs))
    return dict(zip(pairs, results))
