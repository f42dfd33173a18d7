"""Scores for recovered biclusters against planted truth or class labels."""

import json
import math

import numpy as np
from scipy import special

from .core import DegenerateTestError, MembershipMatrix, NoResultError, ReldencluError, as_bicluster


def _bits(m):
    return m.bits if isinstance(m, MembershipMatrix) else np.asarray(m)


def accuracy(truth, estimate):
    """Fraction of matrix cells on which two membership matrices agree."""
    t, e = _bits(truth), _bits(estimate)
    if t.shape != e.shape:
        raise ReldencluError(f"dimension mismatch: {t.shape} vs {e.shape}")
    return float(np.mean(t.astype(bool) == e.astype(bool)))


def bicluster_accuracy(bicluster, truth):
    """:func:`accuracy` of one bicluster against a truth matrix, without
    materialising the estimate (counts only the disagreeing cells)."""
    t = _bits(truth).astype(bool)
    n, m = t.shape
    b = as_bicluster(bicluster)
    rows, cols = list(b.observations), list(b.features)
    if rows[-1] >= n or cols[-1] >= m:
        raise ReldencluError("bicluster indices out of range for the truth matrix")
    inside = int(t[np.ix_(rows, cols)].sum())
    wrong = (int(t.sum()) - inside) + (len(rows) * len(cols) - inside)
    return 1.0 - wrong / (n * m)


def best_match(biclusters, truth):
    """Bicluster with the highest accuracy against ``truth`` and that accuracy.

    Ties keep the first candidate.
    """
    biclusters = list(biclusters)
    if not biclusters:
        raise NoResultError("no biclusters to match")
    scores = [bicluster_accuracy(b, truth) for b in biclusters]
    k = int(np.argmax(scores))
    return as_bicluster(biclusters[k]), scores[k]


def _binary(v, name):
    v = np.asarray(v)
    if v.ndim != 1:
        raise ReldencluError(f"{name} must be a vector")
    if v.size and not np.isin(v, (0, 1, True, False)).all():
        raise ReldencluError(f"{name} must be binary")
    return v.astype(bool)


def class_match_accuracy(membership, labels):
    """Polarity-free agreement: ``max(#agree, #disagree) / n``."""
    mem, lab = _binary(membership, "membership"), _binary(labels, "labels")
    if mem.shape != lab.shape:
        raise ReldencluError(f"length mismatch: {mem.size} vs {lab.size}")
    agree = int(np.sum(mem == lab))
    return max(agree, mem.size - agree) / mem.size


def _ratio(num, den):
    return num / den if den else None


def precision_recall_gscore(membership, labels):
    """Per-class precision, recall and G-score (geometric mean of the two).

    The membership polarity is first flipped if that increases agreement.
    Values with a zero denominator are returned as ``None``.

    Returns
    -------
    dict
        ``{1: (precision, recall, gscore), 0: (...)}``
    """
    mem, lab = _binary(membership, "membership"), _binary(labels, "labels")
    if mem.shape != lab.shape:
        raise ReldencluError(f"length mismatch: {mem.size} vs {lab.size}")
    if np.sum(mem != lab) > np.sum(mem == lab):
        mem = ~mem
    out = {}
    for cls, pred, act in ((1, mem, lab), (0, ~mem, ~lab)):
        hit = int(np.sum(pred & act))
        p, r = _ratio(hit, int(pred.sum())), _ratio(hit, int(act.sum()))
        g = math.sqrt(p * r) if p is not None and r is not None else None
        out[cls] = (p, r, g)
    return out


def student_t_sf(t, df):
    """Right tail ``P(T > t)`` of Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ReldencluError("degrees of freedom must be positive")
    x = df / (df + t * t)
    half = 0.5 * special.betainc(df / 2.0, 0.5, x)
    return half if t >= 0 else 1.0 - half


def paired_t_test(a, b):
    """Right-tailed paired t-test of ``mean(a - b) > 0``.

    Returns
    -------
    t : float
    p : float
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ReldencluError("paired samples must be vectors of equal length")
    n = a.size
    if n < 2:
        raise ReldencluError("need at least two pairs")
    d = a - b
    sd = np.std(d, ddof=1)
    if not sd > 0:
        raise DegenerateTestError("differences have zero variance")
    t = float(np.mean(d) / (sd / math.sqrt(n)))
    return t, float(student_t_sf(t, n - 1))


def observation_membership(bicluster, n):
    b = as_bicluster(bicluster)
    v = np.zeros(n, dtype=np.uint8)
    v[list(b.observations)] = 1
    return v


def top_set(indicator, percentile=90.0):
    """Binary vector marking values strictly above the given percentile."""
    if not 0 < percentile < 100:
        raise ReldencluError("percentile must lie in (0, 100)")
    x = np.asarray(indicator, dtype=np.float64)
    return (x > np.percentile(x, percentile)).astype(np.uint8)


def percentile_match(biclusters, indicator, percentile=90.0):
    """Bicluster whose observation membership best matches the top-percentile set.

    Returns
    -------
    (Bicluster, float)
        The best bicluster and its class-match accuracy.
    """
    biclusters = [as_bicluster(b) for b in biclusters]
    if not biclusters:
        raise NoResultError("no biclusters to match")
    top = top_set(indicator, percentile)
    scores = [class_match_accuracy(observation_membership(b, top.size), top) for b in biclusters]
    k = int(np.argmax(scores))
    return biclusters[k], scores[k]


def export_membership_features(biclusters, n):
    """N x K binary matrix whose k-th column flags the rows of bicluster k."""
    biclusters = list(biclusters)
    out = np.zeros((n, len(biclusters)), dtype=np.uint8)
    for k, b in enumerate(biclusters):
        out[:, k] = observation_membership(b, n)
    return out


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def summarize(scores):
    """Mean and sample standard deviation of a list of scores."""
    x = np.asarray(scores, dtype=np.float64)
    dev = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return {"mean": float(np.mean(x)), "deviation": dev, "n": int(x.size)}


def report_json(results):
    """``results`` maps a family name to its list of accuracies."""
    return json.dumps({k: dict(summarize(v), scores=list(map(float, v))) for k, v in results.items()}, indent=2)


def report_table(results, precision=3):
    """Plain-text table with one mean row and one deviation row per family."""
    width = max([len("Dataset")] + [len(k) for k in results])
    lines = [f"{'Dataset':<{width}}  {'Accuracy':<9}  Value", "-" * (width + 24)]
    for family, scores in results.items():
        s = summarize(scores)
        lines.append(f"{family:<{width}}  {'Mean':<9}  {s['mean']:.{precision}f}")
        lines.append(f"{'':<{width}}  {'Deviation':<9}  {s['deviation']:.{precision}f}")
    return "\n".join(lines)
