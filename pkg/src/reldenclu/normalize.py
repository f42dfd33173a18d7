"""Column-wise maps of raw data onto the unit interval."""

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import DataMatrix, DegenerateColumnError, NormalizedMatrix, ReldencluError


def norm_bounded(column):
    """Min-max scale ``column`` so that its minimum is 0 and maximum is 1.

    Raises
    ------
    DegenerateColumnError
        If the column is constant.
    """
    x = np.asarray(column, dtype=np.float64)
    if np.isnan(x).any():
        raise ReldencluError("column contains NaN")
    lo, hi = x.min(), x.max()
    if hi == lo:
        raise DegenerateColumnError("constant column cannot be normalized")
    out = (x - lo) / (hi - lo)
    # guard against the last-ulp overshoot of the division
    return np.clip(out, 0.0, 1.0)


def arctan_squash(column):
    """Map the real line into (0, 1) with ``arctan(x) / pi + 0.5``."""
    return np.arctan(np.asarray(column, dtype=np.float64)) / np.pi + 0.5


def norm_unbounded(column):
    """Squash with :func:`arctan_squash`, then apply :func:`norm_bounded`."""
    return norm_bounded(arctan_squash(column))


_TRANSFORMS = {"bounded": norm_bounded, "unbounded": norm_unbounded}


def normalize_matrix(matrix, normalization="bounded"):
    """Normalize every column of ``matrix`` with one global transform.

    Constant columns become all-zero columns and are flagged as degenerate
    with a warning; the density search skips them.
    """
    if normalization not in _TRANSFORMS:
        raise ReldencluError(f"unknown normalization {normalization!r}")
    values = matrix.values if isinstance(matrix, DataMatrix) else np.asarray(matrix, dtype=np.float64)
    n, m = values.shape
    out = np.zeros((n, m), dtype=np.float64)
    ranges, degenerate = [], []
    for j in range(m):
        col = values[:, j]
        pre = arctan_squash(col) if normalization == "unbounded" else col
        ranges.append((float(pre.min()), float(pre.max())))
        if pre.max() == pre.min():
            degenerate.append(True)
            warnings.warn(f"column {j} is constant and is excluded from pair analysis", stacklevel=2)
            continue
        degenerate.append(False)
        out[:, j] = norm_bounded(pre)
    out.setflags(write=False)
    return NormalizedMatrix(
        values=out,
        transforms=(normalization,) * m,
        ranges=tuple(ranges),
        degenerate=tuple(degenerate),
    )


class UnitIntervalScaler(TransformerMixin, BaseEstimator):
    """Scikit-learn transformer wrapping the two unit-interval maps.

    Parameters
    ----------
    normalization : {"bounded", "unbounded"}, default="bounded"
        ``"bounded"`` is plain min-max scaling; ``"unbounded"`` squashes the
        real line with arctan first, for data with unbounded support.

    Attributes
    ----------
    data_min_, data_max_ : ndarray of shape (n_features,)
        Per-column range of the (possibly squashed) training data.
    """

    def __init__(self, normalization="bounded"):
        self.normalization = normalization

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.normalization not in _TRANSFORMS:
            raise ReldencluError(f"unknown normalization {self.normalization!r}")
        pre = arctan_squash(X) if self.normalization == "unbounded" else X
        self.data_min_ = pre.min(axis=0)
        self.data_max_ = pre.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X, dtype=np.float64)
        pre = arctan_squash(X) if self.normalization == "unbounded" else X
        span = self.data_max_ - self.data_min_
        safe = np.where(span > 0, span, 1.0)
        out = (pre - self.data_min_) / safe
        out[:, span == 0] = 0.0
        return out
