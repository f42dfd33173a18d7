"""Assembly of biclusters from per-pair dense regions.

Seeds are the observations shared by one dense region from each of the
three pairs of a feature triplet. Seeds are then grown, largest first, by
absorbing the triplets of every seed that shares a feature with the growing
bicluster and most of the base seed's observations. Near-duplicate outputs
are weeded with a cosine-style overlap score.
"""

import logging
import math
from itertools import combinations

import numpy as np
from scipy import sparse
from scipy.stats import rankdata

from .core import Bicluster, DataMatrix, ParameterSet, SeedBicluster, TooFewFeaturesError
from .density import find_dense_regions
from .normalize import normalize_matrix

logger = logging.getLogger(__name__)


def _pair_labels(regions, n_obs):
    return {pair: rs.labels(n_obs) for pair, rs in regions.items()}


def _n_obs(regions):
    for rs in regions.values():
        if rs.n_obs is not None:
            return rs.n_obs
        if rs.regions:
            return max(int(r.max()) for r in rs.regions if len(r)) + 1
    return 0


def build_seed_biclusters(regions, min_seed_size, n_obs=None, tie_key=None, max_combinations=None):
    """Intersect dense regions over every feature triplet.

    Parameters
    ----------
    regions : dict
        ``{(i, j): DenseRegionSet}`` covering all pairs ``i < j``.
    min_seed_size : int
        Seeds with fewer observations are discarded.
    n_obs : int, optional
        Number of observations; read from the region sets when omitted.
    tie_key : callable, optional
        ``tie_key(observations, triplet)`` returning a sortable value used to
        order seeds of equal size before the triplet itself.
    max_combinations : int, optional
        Skip a triplet when its number of region combinations exceeds this.

    Returns
    -------
    list of SeedBicluster
        Sorted by decreasing size.
    """
    if n_obs is None:
        n_obs = _n_obs(regions)
    features = sorted({f for pair in regions for f in pair})
    if len(features) < 3:
        raise TooFewFeaturesError("need at least 3 features to form triplets")
    labels = _pair_labels(regions, n_obs)
    n_regions = {pair: len(rs.regions) for pair, rs in regions.items()}

    seeds = []
    for i, j, k in combinations(features, 3):
        p_ij, p_jk, p_ik = (i, j), (j, k), (i, k)
        counts = (n_regions.get(p_ij, 0), n_regions.get(p_jk, 0), n_regions.get(p_ik, 0))
        if 0 in counts:
            continue
        if max_combinations is not None and math.prod(counts) > max_combinations:
            logger.warning("triplet %s skipped: %d region combinations", (i, j, k), math.prod(counts))
            continue
        u, v, w = labels[p_ij], labels[p_jk], labels[p_ik]
        inside = np.flatnonzero((u >= 0) & (v >= 0) & (w >= 0))
        if inside.size < min_seed_size:
            continue
        # one key per (u, v, w) combination; each group is one intersection
        key = (u[inside] * counts[1] + v[inside]) * counts[2] + w[inside]
        uniq, inverse, sizes = np.unique(key, return_inverse=True, return_counts=True)
        keep = np.flatnonzero(sizes >= min_seed_size)
        if keep.size == 0:
            continue
        order = np.argsort(inverse, kind="stable")
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        for g in keep:
            obs = np.sort(inside[order[bounds[g]:bounds[g + 1]]])
            combo = int(uniq[g])
            choice = (combo // (counts[1] * counts[2]), (combo // counts[2]) % counts[1], combo % counts[2])
            seeds.append(SeedBicluster(obs, (i, j, k), choice))

    if tie_key is None:
        seeds.sort(key=lambda s: (-len(s), s.feature_triplet, s.region_choice))
    else:
        seeds.sort(key=lambda s: (-len(s), tie_key(s.observations, s.feature_triplet), s.feature_triplet))
    return seeds


class SeedIndex:
    """Sparse incidence of seeds over observations, for fast overlap counts."""

    def __init__(self, seeds, n_obs):
        self.seeds = list(seeds)
        self.n_obs = n_obs
        self.sizes = np.array([len(s) for s in self.seeds], dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(self.sizes)])
        indices = (
            np.concatenate([s.observations for s in self.seeds]) if self.seeds else np.empty(0, np.intp)
        )
        self.matrix = sparse.csr_matrix(
            (np.ones(len(indices), dtype=np.int32), indices, indptr), shape=(len(self.seeds), n_obs)
        )
        self.csc = self.matrix.tocsc()
        m = 1 + max((max(s.feature_triplet) for s in self.seeds), default=0)
        self.triplets = np.zeros((len(self.seeds), m), dtype=bool)
        for r, s in enumerate(self.seeds):
            self.triplets[r, list(s.feature_triplet)] = True

    def overlaps(self, row):
        """``|T_row ∩ T_y|`` for every seed ``y``."""
        obs = self.seeds[row].observations
        return np.asarray(self.csc[:, obs].sum(axis=1)).ravel()


def grow_bicluster(base, seeds, params, index=None, ignored=None):
    """Grow one bicluster from the seed at position ``base``.

    Parameters
    ----------
    base : int or SeedBicluster
        The base seed, or its position in ``seeds``.
    seeds : list of SeedBicluster
        All seeds, sorted by decreasing size.
    params : ParameterSet
    index : SeedIndex, optional
        Prebuilt overlap index over ``seeds``.
    ignored : ndarray of bool, optional
        Updated in place: seeds overlapping the base by more than
        ``reuse_seed_sim * sim2seed * |base|`` are marked so they are not
        used as bases later. Untouched when ``reuse_all_seeds`` is true.

    Returns
    -------
    Bicluster or None
        None when no observation reaches ``obs_in_min_base`` matched seeds.
    """
    if index is None:
        index = SeedIndex(seeds, _seed_n_obs(seeds))
    if isinstance(base, SeedBicluster):
        base = next(r for r, s in enumerate(seeds) if s is base)
    base_size = index.sizes[base]
    common = index.overlaps(base)

    similar = common > params.sim2seed * base_size
    if not params.reuse_all_seeds and ignored is not None:
        ignored |= common > params.reuse_seed_sim * params.sim2seed * base_size

    features = index.triplets[base].copy()
    selected = np.zeros(len(seeds), dtype=bool)
    selected[base] = True
    candidates = np.flatnonzero(similar & ~selected)
    while candidates.size:
        joins = candidates[(index.triplets[candidates] & features).any(axis=1)]
        if joins.size == 0:
            break
        selected[joins] = True
        features |= index.triplets[joins].any(axis=0)
        candidates = np.flatnonzero(similar & ~selected)

    hits = np.asarray(index.matrix[selected].sum(axis=0)).ravel()
    obs = np.flatnonzero(hits >= params.obs_in_min_base)
    if obs.size == 0:
        return None
    return Bicluster(obs, np.flatnonzero(features))


def _seed_n_obs(seeds):
    return 1 + max((int(s.observations.max()) for s in seeds if len(s)), default=-1)


def cosine_similarity(a, b):
    """Product of the cosine overlaps of the observation and feature sets."""
    oa, ob = set(a.observations), set(b.observations)
    fa, fb = set(a.features), set(b.features)
    # the root of the integer product is correctly rounded, so identical sets
    # score exactly 1 and the score never exceeds 1
    obs = len(oa & ob) / math.sqrt(len(oa) * len(ob))
    feat = len(fa & fb) / math.sqrt(len(fa) * len(fb))
    return min(1.0, obs * feat)


def weed_similar(clusters, clus_sim):
    """Drop the smaller member of every pair more similar than ``clus_sim``.

    Pairs are visited in list order; a bicluster already dropped takes no
    further part. Ties in size drop the later one. Survivors keep their order.
    """
    clusters = list(clusters)
    alive = [True] * len(clusters)
    for a in range(len(clusters)):
        for b in range(a + 1, len(clusters)):
            if not (alive[a] and alive[b]):
                continue
            if cosine_similarity(clusters[a], clusters[b]) > clus_sim:
                if clusters[b].size > clusters[a].size:
                    alive[a] = False
                else:
                    alive[b] = False
    return [c for c, keep in zip(clusters, alive) if keep]


def rank_tie_key(values):
    """Order key for equal-sized seeds that is invariant to row/column
    relabelling and to monotone per-column transforms: the sum of the
    within-column ranks over the seed's cells."""
    ranks = rankdata(values, method="min", axis=0).astype(np.int64)

    def key(observations, triplet):
        return -int(ranks[np.ix_(observations, triplet)].sum())

    return key


def assemble(seeds, params, n_obs):
    """Grow every eligible base in order and weed near-duplicates."""
    index = SeedIndex(seeds, n_obs)
    ignored = np.zeros(len(seeds), dtype=bool)
    clusters = []
    for base in range(len(seeds)):
        if ignored[base]:
            continue
        found = grow_bicluster(base, seeds, params, index=index, ignored=ignored)
        if found is not None:
            clusters.append(found)
    return weed_similar(clusters, params.clus_sim)


# ---------------------------------------------------------------------------
# table-based assembly for large inputs
# ---------------------------------------------------------------------------


class SeedTable:
    """All seeds of a dataset held as (triplet, region combination, size) rows.

    The observation sets are never stored; they are recovered on demand from
    the per-pair region labels. This keeps memory proportional to the number
    of seeds rather than to the total seed size, which matters when seeds
    overlap heavily, as they do on large inputs.

    Parameters
    ----------
    regions : dict
        ``{(i, j): DenseRegionSet}`` covering all pairs ``i < j``.
    min_seed_size : int
    n_obs : int
    rank_values : ndarray of shape (n_obs, n_features), optional
        Data whose within-column ranks order seeds of equal size (see
        :func:`rank_tie_key`). Equal-sized seeds otherwise fall back to the
        triplet and region order.
    max_combinations : int, optional
        Skip a triplet when its number of region combinations exceeds this.
    """

    def __init__(self, regions, min_seed_size, n_obs, rank_values=None, max_combinations=None):
        features = sorted({f for pair in regions for f in pair})
        if len(features) < 3:
            raise TooFewFeaturesError("need at least 3 features to form triplets")
        self.n_obs = n_obs
        self.n_features = features[-1] + 1
        self.pairs = list(regions)
        n_regions = np.array([len(regions[p].regions) for p in self.pairs])
        self.base = int(n_regions.max(initial=0)) + 1
        dtype = np.int16 if self.base < np.iinfo(np.int16).max else np.int32
        self.labels = np.full((len(self.pairs), n_obs), -1, dtype=dtype)
        for k, p in enumerate(self.pairs):
            for r, idx in enumerate(regions[p].regions):
                self.labels[k, idx] = r
        self.pair_id = np.full((self.n_features, self.n_features), -1, dtype=np.intp)
        for k, (i, j) in enumerate(self.pairs):
            self.pair_id[i, j] = self.pair_id[j, i] = k

        ranks = rankdata(rank_values, method="min", axis=0).astype(np.int64) if rank_values is not None else None
        triplets, trip_of, combos, sizes, ties = [], [], [], [], []
        row_count = np.zeros(n_obs, dtype=np.int64)
        for i, j, k in combinations(features, 3):
            pa, pb, pc = self.pair_id[i, j], self.pair_id[j, k], self.pair_id[i, k]
            counts = (n_regions[pa], n_regions[pb], n_regions[pc])
            if 0 in counts:
                continue
            if max_combinations is not None and math.prod(counts) > max_combinations:
                logger.warning("triplet %s skipped: %d region combinations", (i, j, k), math.prod(counts))
                continue
            u, v, w = self.labels[pa], self.labels[pb], self.labels[pc]
            inside = np.flatnonzero((u >= 0) & (v >= 0) & (w >= 0))
            if inside.size < min_seed_size:
                continue
            key = self.encode(u[inside], v[inside], w[inside])
            uniq, inverse, size = np.unique(key, return_inverse=True, return_counts=True)
            keep = size >= min_seed_size
            if not keep.any():
                continue
            row_count[inside[keep[inverse]]] += 1
            t = len(triplets)
            triplets.append((i, j, k))
            trip_of.append(np.full(int(keep.sum()), t, dtype=np.intp))
            combos.append(uniq[keep])
            sizes.append(size[keep])
            if ranks is not None:
                cell = ranks[inside, i] + ranks[inside, j] + ranks[inside, k]
                ties.append(-np.bincount(inverse, weights=cell, minlength=len(uniq))[keep].astype(np.int64))

        self.triplets = np.array(triplets, dtype=np.intp).reshape(-1, 3)
        self.triplet_pairs = self.pair_id[self.triplets[:, [0, 1, 0]], self.triplets[:, [1, 2, 2]]]
        cat = lambda parts, dt: np.concatenate(parts) if parts else np.empty(0, dtype=dt)
        trip_of, combos = cat(trip_of, np.intp), cat(combos, np.int64)
        sizes = cat(sizes, np.int64)
        tie = cat(ties, np.int64) if ranks is not None else np.zeros_like(sizes)
        # size descending, then the tie key, then triplet and region order
        order = np.lexsort((combos, trip_of, tie, -sizes))
        self.trip_of, self.combos, self.sizes = trip_of[order], combos[order], sizes[order]
        gkey = self.trip_of * self.base ** 3 + self.combos
        self._key_order = np.argsort(gkey, kind="stable")
        self._keys = gkey[self._key_order]
        self._row_ptr = np.concatenate([[0], np.cumsum(row_count)])
        self._row_seeds = None
        self._rows_cache = {}
        self._cache_budget = 50_000_000

    def encode(self, u, v, w):
        b = self.base
        return (u.astype(np.int64) * b + v) * b + w

    def decode(self, combo):
        b = self.base
        return combo // (b * b), (combo // b) % b, combo % b

    def __len__(self):
        return len(self.sizes)

    def lookup(self, triplet_index, combo):
        """Seed positions for ``(triplet, combination)`` keys, -1 where absent."""
        if len(self) == 0:
            return np.full(np.shape(combo), -1, dtype=np.intp)
        key = np.asarray(triplet_index, dtype=np.int64) * self.base ** 3 + combo
        pos = np.minimum(np.searchsorted(self._keys, key), len(self._keys) - 1)
        return np.where(self._keys[pos] == key, self._key_order[pos], -1)

    def rows(self, s):
        """Observations of seed ``s``, sorted."""
        cached = self._rows_cache.get(s)
        if cached is not None:
            return cached
        pa, pb, pc = self.triplet_pairs[self.trip_of[s]]
        u, v, w = self.decode(int(self.combos[s]))
        out = np.flatnonzero((self.labels[pa] == u) & (self.labels[pb] == v) & (self.labels[pc] == w))
        if self._cache_budget >= out.size:
            self._cache_budget -= out.size
            self._rows_cache[s] = out
        return out

    def triplet(self, s):
        return tuple(int(f) for f in self.triplets[self.trip_of[s]])

    def __getitem__(self, s):
        if not -len(self) <= s < len(self):
            raise IndexError(s)
        s = s % len(self)
        return SeedBicluster(self.rows(s), self.triplet(s), self.decode(int(self.combos[s])))

    def to_list(self):
        return [self[s] for s in range(len(self))]

    def _build_index(self):
        """Row-to-seed incidence: the seeds containing row ``r`` are
        ``_row_seeds[_row_ptr[r]:_row_ptr[r + 1]]``."""
        dtype = np.int32 if len(self) < np.iinfo(np.int32).max else np.int64
        seeds = np.empty(self._row_ptr[-1], dtype=dtype)
        cursor = self._row_ptr[:-1].copy()
        for t, (pa, pb, pc) in enumerate(self.triplet_pairs):
            u, v, w = self.labels[pa], self.labels[pb], self.labels[pc]
            inside = np.flatnonzero((u >= 0) & (v >= 0) & (w >= 0))
            ids = self.lookup(np.full(inside.size, t), self.encode(u[inside], v[inside], w[inside]))
            hit = ids >= 0
            rows = inside[hit]
            seeds[cursor[rows]] = ids[hit]
            cursor[rows] += 1
        self._row_seeds = seeds

    def overlapping(self, rows, threshold):
        """Seeds sharing more than ``threshold`` observations with ``rows``.

        Returns
        -------
        seeds : ndarray of int
        overlap : ndarray of int
        """
        if self._row_seeds is None:
            self._build_index()
        ptr, flat = self._row_ptr, self._row_seeds
        counts = np.zeros(len(self), dtype=np.int64)
        rows = np.asarray(rows)
        lengths = ptr[rows + 1] - ptr[rows]
        # gather the incidence lists of the rows in bounded chunks
        bounds = np.searchsorted(np.cumsum(lengths), np.arange(4_000_000, lengths.sum() + 4_000_000, 4_000_000))
        lo = 0
        for hi in np.unique(np.minimum(bounds + 1, len(rows))):
            chunk_rows, chunk_len = rows[lo:hi], lengths[lo:hi]
            if chunk_len.sum():
                starts = np.repeat(ptr[chunk_rows] - np.cumsum(chunk_len) + chunk_len, chunk_len)
                idx = starts + np.arange(chunk_len.sum())
                counts += np.bincount(flat[idx], minlength=len(self))
            lo = hi
        found = np.flatnonzero(counts > threshold)
        return found, counts[found]


def _bicluster_cached(cache, obs, features):
    key = (obs.tobytes(), features.tobytes())
    found = cache.get(key)
    if found is None:
        found = cache[key] = Bicluster(obs, features)
    return found


def assemble_table(table, params):
    """Grow every eligible base of a :class:`SeedTable` in order and weed.

    Gives the same biclusters as :func:`assemble` on the materialised seed
    list, while only touching the seeds that can overlap each base.
    """
    n = len(table)
    ignored = np.zeros(n, dtype=bool)
    feature_mask = np.zeros((len(table.triplets), table.n_features), dtype=bool)
    np.put_along_axis(feature_mask, table.triplets, True, axis=1)
    bicluster_cache, clusters, grown = {}, [], 0
    low = min(params.sim2seed, params.sim2seed if params.reuse_all_seeds
              else params.reuse_seed_sim * params.sim2seed)
    for base in range(n):
        if ignored[base]:
            continue
        rows = table.rows(base)
        size = table.sizes[base]
        seeds, common = table.overlapping(rows, low * size)
        if not params.reuse_all_seeds:
            ignored[seeds[common > params.reuse_seed_sim * params.sim2seed * size]] = True
        similar = np.union1d(seeds[common > params.sim2seed * size], [base])

        features = feature_mask[table.trip_of[base]].copy()
        selected = np.zeros(len(similar), dtype=bool)
        selected[similar == base] = True
        while True:
            pending = np.flatnonzero(~selected)
            joins = pending[(feature_mask[table.trip_of[similar[pending]]] & features).any(axis=1)]
            if joins.size == 0:
                break
            selected[joins] = True
            features |= feature_mask[table.trip_of[similar[joins]]].any(axis=0)

        grown += 1
        if grown % 1000 == 0:
            logger.debug("base %d of %d, %d retired, %d biclusters", base, n, int(ignored.sum()), len(clusters))
        chosen = similar[selected]
        if len(chosen) < params.obs_in_min_base:
            continue
        hits = np.zeros(table.n_obs, dtype=np.int32)
        for s in chosen:
            hits[table.rows(s)] += 1
        obs = np.flatnonzero(hits >= params.obs_in_min_base)
        if obs.size:
            clusters.append(_bicluster_cached(bicluster_cache, obs, np.flatnonzero(features)))
    if params.clus_sim >= 1:
        # the score never exceeds 1, so nothing can be weeded
        return clusters
    return weed_similar(clusters, params.clus_sim)


def run_reldenclu(matrix, params=None, n_jobs=None, return_details=False):
    """Full pipeline: normalize, dense regions, seeds, growth, weeding.

    Parameters
    ----------
    matrix : DataMatrix or array-like of shape (n_obs, n_features)
    params : ParameterSet, optional
    n_jobs : int, optional
        Threads for the per-pair density search.
    return_details : bool, default=False
        Also return a dict with the normalized matrix, the dense regions,
        the seeds as a :class:`SeedTable` and the density path.

    Returns
    -------
    list of Bicluster
    """
    params = params or ParameterSet()
    if not isinstance(matrix, DataMatrix):
        matrix = DataMatrix(matrix)
    n, m = matrix.shape
    if m < 3:
        raise TooFewFeaturesError(f"need at least 3 features, got {m}")
    norm = normalize_matrix(matrix, params.normalization)
    regions = find_dense_regions(norm, params, n_jobs=n_jobs)
    seeds = SeedTable(regions, params.min_seed_size, n, rank_values=norm.values,
                      max_combinations=params.max_region_combinations)
    logger.info("%d seeds of size >= %d", len(seeds), params.min_seed_size)
    clusters = assemble_table(seeds, params) if len(seeds) else []
    if return_details:
        return clusters, {"normalized": norm, "regions": regions, "seeds": seeds,
                          "density_path": params.density_path(n)}
    return clusters
