"""Domain types shared by the density, assembly and evaluation code.

Indices are 0-based everywhere inside the library. Conversion to the
1-based ids written by the command line happens in :mod:`reldenclu.cli`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class ReldencluError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidBiclusterError(ReldencluError):
    pass


class DegenerateColumnError(ReldencluError):
    pass


class InsufficientDataError(ReldencluError):
    pass


class ZeroSeparationError(DegenerateColumnError):
    pass


class TooFewFeaturesError(ReldencluError):
    pass


class DegenerateTestError(ReldencluError):
    pass


class NoResultError(ReldencluError):
    pass


@dataclass(frozen=True)
class DataMatrix:
    """Raw observations-by-features table.

    Parameters
    ----------
    values : array-like of shape (n_obs, n_features)
        Real valued data. NaN and infinite entries are rejected.
    row_ids, col_ids : sequence of str, optional
        Labels carried through to reports.
    """

    values: np.ndarray
    row_ids: Optional[tuple] = None
    col_ids: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise ReldencluError(f"expected a 2-D matrix, got {values.ndim}-D")
        n, m = values.shape
        if n < 1:
            raise InsufficientDataError("matrix has no observations")
        if m < 2:
            raise TooFewFeaturesError(f"need at least 2 features, got {m}")
        bad = np.argwhere(~np.isfinite(values))
        if len(bad):
            r, c = bad[0]
            raise ReldencluError(
                f"non-finite value at row {r + 1}, column {c + 1}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        for name, size in (("row_ids", n), ("col_ids", m)):
            ids = getattr(self, name)
            if ids is not None:
                ids = tuple(ids)
                if len(ids) != size:
                    raise ReldencluError(f"{name} has {len(ids)} labels, expected {size}")
                object.__setattr__(self, name, ids)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class NormalizedMatrix:
    """Data mapped column-wise to [0, 1].

    ``transforms`` holds ``"bounded"`` or ``"unbounded"`` per column and
    ``ranges`` the (min, max) of the values fed to the final min-max step.
    ``degenerate`` flags constant columns, which are stored as zeros.
    """

    values: np.ndarray
    transforms: tuple
    ranges: tuple
    degenerate: tuple

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class DenseRegionSet:
    """Connected dense regions found in the plane of one feature pair."""

    feature_pair: tuple
    regions: tuple = ()
    n_obs: Optional[int] = None

    def __post_init__(self):
        i, j = self.feature_pair
        if not i < j:
            raise ReldencluError(f"feature pair must be ordered, got {self.feature_pair}")
        regions = tuple(np.unique(np.asarray(r, dtype=np.intp)) for r in self.regions)
        object.__setattr__(self, "regions", regions)

    def labels(self, n_obs=None):
        """Per-observation region index, -1 where the observation is in no region."""
        n = n_obs if n_obs is not None else self.n_obs
        if n is None:
            raise ReldencluError("number of observations unknown")
        out = np.full(n, -1, dtype=np.intp)
        for k, region in enumerate(self.regions):
            out[region] = k
        return out

    @property
    def mass(self):
        return int(sum(len(r) for r in self.regions))


@dataclass(frozen=True)
class SeedBicluster:
    """Observations shared by dense regions over all three pairs of a feature triplet."""

    observations: np.ndarray
    feature_triplet: tuple
    region_choice: tuple = ()

    def __len__(self):
        return len(self.observations)


def _index_tuple(values):
    arr = np.unique(np.asarray(values).ravel())
    if arr.size and arr.dtype.kind not in "iub":
        if arr.dtype.kind != "f" or not np.all(arr == np.round(arr)):
            raise InvalidBiclusterError("bicluster indices must be integers")
        arr = arr.astype(np.int64)
    return tuple(arr.tolist())


@dataclass(frozen=True)
class Bicluster:
    """Pair of observation and feature index sets."""

    observations: tuple
    features: tuple

    def __post_init__(self):
        obs, feat = _index_tuple(self.observations), _index_tuple(self.features)
        if not obs or not feat:
            raise InvalidBiclusterError("bicluster needs at least one observation and one feature")
        if obs[0] < 0 or feat[0] < 0:
            raise InvalidBiclusterError("negative index in bicluster")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "features", feat)

    @property
    def size(self):
        return len(self.observations) * len(self.features)

    @property
    def shape(self):
        return len(self.observations), len(self.features)


@dataclass(frozen=True)
class ParameterSet:
    """User parameters of the algorithm plus normalization and density switches.

    The defaults are the values used for the simulated benchmarks.
    """

    min_seed_size: int = 100
    sim2seed: float = 0.8
    reuse_all_seeds: bool = False
    reuse_seed_sim: Optional[float] = 0.5
    obs_in_min_base: int = 3
    clus_sim: float = 1.0
    normalization: str = "bounded"
    density_mode: str = "auto"
    small_c: float = 0.4999
    large_threshold: int = 750
    rng_seed: int = 0
    max_region_combinations: Optional[int] = None

    def __post_init__(self):
        if int(self.min_seed_size) != self.min_seed_size or self.min_seed_size < 1:
            raise ReldencluError("min_seed_size must be a positive integer")
        if int(self.obs_in_min_base) != self.obs_in_min_base or self.obs_in_min_base < 1:
            raise ReldencluError("obs_in_min_base must be a positive integer")
        for name in ("sim2seed", "clus_sim"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ReldencluError(f"{name} must lie in (0, 1], got {v}")
        if not self.reuse_all_seeds:
            if self.reuse_seed_sim is None:
                raise ReldencluError("reuse_seed_sim is required when reuse_all_seeds is false")
            if not 0 < self.reuse_seed_sim <= 1:
                raise ReldencluError(f"reuse_seed_sim must lie in (0, 1], got {self.reuse_seed_sim}")
        if self.normalization not in ("bounded", "unbounded"):
            raise ReldencluError(f"unknown normalization {self.normalization!r}")
        if self.density_mode not in ("auto", "small", "large"):
            raise ReldencluError(f"unknown density_mode {self.density_mode!r}")
        if not 0 < self.small_c < 0.5:
            raise ReldencluError(f"small_c must lie strictly inside (0, 0.5), got {self.small_c}")
        if int(self.large_threshold) != self.large_threshold or self.large_threshold < 1:
            raise ReldencluError("large_threshold must be a positive integer")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise ReldencluError("rng_seed must be an unsigned integer")
        if self.max_region_combinations is not None and self.max_region_combinations < 1:
            raise ReldencluError("max_region_combinations must be positive or None")

    def density_path(self, n_obs):
        """Return ``"small"`` or ``"large"`` for a dataset of ``n_obs`` rows."""
        if self.density_mode != "auto":
            return self.density_mode
        return "small" if n_obs < self.large_threshold else "large"


@dataclass(frozen=True)
class MembershipMatrix:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ReldencluError("membership matrix must be 2-D")
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ReldencluError("membership entries must be 0 or 1")
        bits = bits.astype(np.uint8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def shape(self):
        return self.bits.shape

    def to_bicluster(self):
        rows = np.flatnonzero(self.bits.any(axis=1))
        cols = np.flatnonzero(self.bits.any(axis=0))
        return Bicluster(rows, cols)


def membership_matrix(b: Bicluster, n: int, m: int) -> MembershipMatrix:
    """Binary N x M matrix with ones exactly on the cells of ``b``."""
    validate_indices(b, n, m)
    bits = np.zeros((n, m), dtype=np.uint8)
    bits[np.ix_(b.observations, b.features)] = 1
    return MembershipMatrix(bits)


def as_bicluster(obj) -> Bicluster:
    """Coerce ``(rows, cols)`` pairs and mappings to :class:`Bicluster`."""
    if isinstance(obj, Bicluster):
        return obj
    if isinstance(obj, dict):
        return Bicluster(obj["observations"], obj["features"])
    rows, cols = obj
    return Bicluster(rows, cols)


def validate_indices(b: Bicluster, n: int, m: int) -> None:
    if b.observations[-1] >= n or b.features[-1] >= m:
        raise InvalidBiclusterError(f"bicluster indices out of range for a {n} x {m} matrix")


__all__ = [
    "Bicluster",
    "DataMatrix",
    "DegenerateColumnError",
    "DegenerateTestError",
    "DenseRegionSet",
    "InsufficientDataError",
    "InvalidBiclusterError",
    "MembershipMatrix",
    "NoResultError",
    "NormalizedMatrix",
    "ParameterSet",
    "ReldencluError",
    "SeedBicluster",
    "TooFewFeaturesError",
    "ZeroSeparationError",
    "as_bicluster",
    "membership_matrix",
]
