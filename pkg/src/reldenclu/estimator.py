"""Scikit-learn style front-end for the biclustering pipeline."""

import numpy as np
from sklearn.base import BaseEstimator, BiclusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .assembly import run_reldenclu
from .core import DataMatrix, ParameterSet
from .evaluate import export_membership_features


class RelDenClu(BiclusterMixin, BaseEstimator):
    """Relative-density biclustering.

    Finds subsets of observations over which subsets of features are
    related, possibly non-linearly. Each pair of features is searched for
    regions where the joint density exceeds the product of its marginals;
    regions agreeing over feature triplets seed the biclusters, which are
    then grown by absorbing overlapping seeds.

    Parameters
    ----------
    min_seed_size : int, default=100
        Smallest number of observations a seed may have.
    sim2seed : float, default=0.8
        Fraction of the base seed's observations another seed must share to
        join the growing bicluster.
    reuse_all_seeds : bool, default=False
        If false, seeds that overlap an earlier base strongly are not used as
        bases themselves.
    reuse_seed_sim : float, default=0.5
        Overlap fraction (relative to ``sim2seed``) above which a seed is
        retired as a base. Ignored when ``reuse_all_seeds`` is true.
    obs_in_min_base : int, default=3
        An observation is kept when it occurs in at least this many matched
        seeds.
    clus_sim : float, default=1.0
        Cosine-overlap threshold above which the smaller of two biclusters is
        dropped. The default keeps everything.
    normalization : {"bounded", "unbounded"}, default="bounded"
        Column map onto the unit interval; use ``"unbounded"`` for data with
        unbounded support such as Gaussian columns.
    density_mode : {"auto", "small", "large"}, default="auto"
        Rolling-window search for small data, grid histogram for large data.
    small_c : float, default=0.4999
        Exponent of the rolling-window cell length.
    large_threshold : int, default=750
        Smallest number of rows handled by the grid path in ``"auto"`` mode.
    max_region_combinations : int or None, default=None
        Skip feature triplets with more region combinations than this.
    n_jobs : int or None, default=None
        Threads for the per-pair density search.

    Attributes
    ----------
    biclusters_list_ : list of Bicluster
        Recovered biclusters, in discovery order.
    rows_ : ndarray of shape (n_biclusters, n_samples)
        Boolean row membership of each bicluster.
    columns_ : ndarray of shape (n_biclusters, n_features)
        Boolean column membership of each bicluster.
    n_features_in_ : int

    Examples
    --------
    >>> from reldenclu.datagen import gen_base
    >>> ds = gen_base(seed=0)
    >>> model = RelDenClu().fit(ds.values)
    >>> model.rows_.shape[1]
    1000
    """

    def __init__(
        self,
        min_seed_size=100,
        sim2seed=0.8,
        reuse_all_seeds=False,
        reuse_seed_sim=0.5,
        obs_in_min_base=3,
        clus_sim=1.0,
        normalization="bounded",
        density_mode="auto",
        small_c=0.4999,
        large_threshold=750,
        max_region_combinations=None,
        n_jobs=None,
    ):
        self.min_seed_size = min_seed_size
        self.sim2seed = sim2seed
        self.reuse_all_seeds = reuse_all_seeds
        self.reuse_seed_sim = reuse_seed_sim
        self.obs_in_min_base = obs_in_min_base
        self.clus_sim = clus_sim
        self.normalization = normalization
        self.density_mode = density_mode
        self.small_c = small_c
        self.large_threshold = large_threshold
        self.max_region_combinations = max_region_combinations
        self.n_jobs = n_jobs

    def _parameter_set(self):
        params = self.get_params()
        params.pop("n_jobs")
        return ParameterSet(**params)

    def fit(self, X, y=None):
        """Find biclusters in ``X``.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
        y : ignored

        Returns
        -------
        self
        """
        X = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=3)
        params = self._parameter_set()
        self.biclusters_list_ = run_reldenclu(DataMatrix(X), params, n_jobs=self.n_jobs)
        n, m = X.shape
        k = len(self.biclusters_list_)
        self.rows_ = np.zeros((k, n), dtype=bool)
        self.columns_ = np.zeros((k, m), dtype=bool)
        for i, b in enumerate(self.biclusters_list_):
            self.rows_[i, list(b.observations)] = True
            self.columns_[i, list(b.features)] = True
        self.n_features_in_ = m
        return self

    def membership_features(self):
        """Binary matrix whose column ``k`` flags the rows of bicluster ``k``.

        The columns can be appended to a feature table for a downstream
        classifier.
        """
        check_is_fitted(self, "biclusters_list_")
        return export_membership_features(self.biclusters_list_, self.rows_.shape[1])
