"""Simulated benchmark datasets with planted biclusters.

Every generator is a pure function of its seed. Randomness comes from
numpy's PCG64 bit generator so that instances are reproducible across
platforms.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .core import Bicluster, DataMatrix, ReldencluError, membership_matrix

N_ROWS, N_COLS = 1000, 20
BLOCK_ROWS, BLOCK_COLS = 500, 10

NONLINEAR_1 = (
    lambda x: x,
    np.sin,
    lambda x: x ** 2,
    lambda x: x ** 10,
    lambda x: np.sin(np.pi * x),
    lambda x: np.sin(2 * np.pi * x),
    lambda x: x ** 3,
    lambda x: 4 * x ** 2,
    lambda x: np.sin(4 * np.pi * x),
    lambda x: 4 * x ** 3,
)

# same structure, values kept inside the background range; h3 == h8 and
# h7 == h10 on purpose
NONLINEAR_2 = (
    lambda x: x,
    np.sin,
    lambda x: x ** 2,
    lambda x: x ** 10,
    lambda x: 0.5 * np.sin(np.pi * x),
    lambda x: 0.5 * np.sin(2 * np.pi * x) + 0.5,
    lambda x: x ** 3,
    lambda x: x ** 2,
    lambda x: 0.5 * np.sin(4 * np.pi * x) + 0.5,
    lambda x: x ** 3,
)

TRANSFORMS = (
    "scale",
    "translate",
    "linear",
    "square",
    "exp",
    "point_proportion",
    "cluster_proportion",
    "uniform_noise",
    "permute",
)


@dataclass(frozen=True)
class GeneratedDataset:
    """A data matrix, its planted biclusters and the recipe that made it.

    ``truth`` holds the planted biclusters as index sets; use
    :meth:`truth_matrices` for the membership-matrix view.
    """

    matrix: DataMatrix
    truth: tuple
    recipe: dict = field(default_factory=dict)

    @property
    def values(self):
        return self.matrix.values

    def truth_matrices(self):
        n, m = self.matrix.shape
        return [membership_matrix(b, n, m) for b in self.truth]


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _place_block(rng, n_rows=N_ROWS, n_cols=N_COLS, block_rows=BLOCK_ROWS, block_cols=BLOCK_COLS):
    rows = np.sort(rng.choice(n_rows, block_rows, replace=False))
    cols = rng.permutation(rng.choice(n_cols, block_cols, replace=False))
    return rows, cols


def _functional_block(X, rows, cols, funcs):
    x = X[rows, cols[0]].copy()
    for h, c in zip(funcs, cols):
        X[rows, c] = h(x)
    return X


def gen_nonlinear(variant=1, seed=0):
    """1000 x 20 uniform matrix with a 500 x 10 block whose columns are
    fixed functions of its first column."""
    if variant not in (1, 2):
        raise ReldencluError(f"variant must be 1 or 2, got {variant}")
    rng = _rng(seed)
    X = rng.uniform(size=(N_ROWS, N_COLS))
    rows, cols = _place_block(rng)
    _functional_block(X, rows, cols, NONLINEAR_1 if variant == 1 else NONLINEAR_2)
    recipe = {"family": f"nonlinear{variant}", "seed": seed, "block_columns": cols.tolist()}
    return GeneratedDataset(DataMatrix(X), (Bicluster(rows, cols),), recipe)


def _proportional_block(rng, X, rows, cols):
    a = np.concatenate([[1.0], rng.uniform(size=len(cols) - 1)])
    return _functional_block(X, rows, cols, [lambda x, ai=ai: ai * x for ai in a]), a


def gen_base(seed=0):
    """1000 x 20 uniform matrix with a 500 x 10 block of proportional columns."""
    rng = _rng(seed)
    X = rng.uniform(size=(N_ROWS, N_COLS))
    rows, cols = _place_block(rng)
    X, a = _proportional_block(rng, X, rows, cols)
    recipe = {"family": "base", "seed": seed, "block_columns": cols.tolist(), "slopes": a.tolist()}
    return GeneratedDataset(DataMatrix(X), (Bicluster(rows, cols),), recipe)


def gen_normal(noisy=False, seed=0):
    """Standard normal background with a proportional 500 x 10 block.

    The noisy variant adds N(0, 0.1^2) to every entry.
    """
    rng = _rng(seed)
    X = rng.standard_normal(size=(N_ROWS, N_COLS))
    rows, cols = _place_block(rng)
    X, a = _proportional_block(rng, X, rows, cols)
    if noisy:
        X = X + rng.normal(0.0, 0.1, size=X.shape)
    recipe = {"family": "noisy_normal" if noisy else "normal", "seed": seed,
              "block_columns": cols.tolist(), "slopes": a.tolist()}
    return GeneratedDataset(DataMatrix(X), (Bicluster(rows, cols),), recipe)


def gen_overlap(seed=0):
    """Uniform background with two additively shifted biclusters.

    The 500 x 10 and 300 x 8 blocks share 300 rows and 3 columns. Each
    block adds its own shift, drawn from U(1, 2), to its cells; the shared
    cells carry both shifts.
    """
    rng = _rng(seed)
    X = rng.uniform(size=(N_ROWS, N_COLS))
    rows1 = np.sort(rng.choice(N_ROWS, 500, replace=False))
    rows2 = np.sort(rng.choice(rows1, 300, replace=False))
    cols = rng.permutation(N_COLS)
    cols1 = np.sort(cols[:10])
    cols2 = np.sort(np.concatenate([rng.choice(cols1, 3, replace=False), cols[10:15]]))
    shifts = rng.uniform(1.0, 2.0, size=2)
    X[np.ix_(rows1, cols1)] += shifts[0]
    X[np.ix_(rows2, cols2)] += shifts[1]
    recipe = {"family": "overlap", "seed": seed, "shifts": shifts.tolist()}
    truth = (Bicluster(rows1, cols1), Bicluster(rows2, cols2))
    return GeneratedDataset(DataMatrix(X), truth, recipe)


def gen_large(seed=0):
    """20000 x 100 uniform matrix with a proportional 10000 x 30 block."""
    rng = _rng(seed)
    X = rng.uniform(size=(20000, 100))
    rows, cols = _place_block(rng, 20000, 100, 10000, 30)
    X, a = _proportional_block(rng, X, rows, cols)
    recipe = {"family": "large", "seed": seed, "block_columns": cols.tolist(), "slopes": a.tolist()}
    return GeneratedDataset(DataMatrix(X), (Bicluster(rows, cols),), recipe)


def _with_rows(ds, X, row_map, recipe):
    """Rebuild ``ds`` on new rows; ``row_map[k]`` is the source row of new row ``k``."""
    inverse = {}
    for new, old in enumerate(row_map):
        inverse.setdefault(int(old), []).append(new)
    truth = tuple(
        Bicluster([r for o in b.observations for r in inverse.get(o, ())], b.features) for b in ds.truth
    )
    return GeneratedDataset(DataMatrix(X), truth, recipe)


def apply_transform(ds, kind, seed=0):
    """Derive a transformed dataset from ``ds``.

    ``kind`` is one of ``scale``, ``translate``, ``linear`` (per-column
    random maps with coefficients in (0, 1)), ``square``, ``exp``
    (elementwise), ``point_proportion`` (every row twice),
    ``cluster_proportion`` (planted rows twice), ``uniform_noise`` (adds
    U(0, 0.1)) or ``permute`` (random row and column shuffle; the recipe
    records both permutations).
    """
    if kind not in TRANSFORMS:
        raise ReldencluError(f"unknown transform {kind!r}")
    rng = _rng(seed)
    X = ds.values.copy()
    n, m = X.shape
    recipe = dict(ds.recipe, transform=kind, transform_seed=seed)

    if kind == "scale":
        X = X * rng.uniform(size=m)
    elif kind == "translate":
        X = X + rng.uniform(size=m)
    elif kind == "linear":
        r1, r2 = rng.uniform(size=m), rng.uniform(size=m)
        X = r1 * X + r2
    elif kind == "square":
        X = X ** 2
    elif kind == "exp":
        X = np.exp(X)
    elif kind == "uniform_noise":
        X = X + rng.uniform(0.0, 0.1, size=X.shape)
    elif kind == "point_proportion":
        row_map = np.repeat(np.arange(n), 2)
        return _with_rows(ds, X[row_map], row_map, recipe)
    elif kind == "cluster_proportion":
        planted = np.zeros(n, dtype=np.intp)
        for b in ds.truth:
            planted[list(b.observations)] = 1
        row_map = np.repeat(np.arange(n), 1 + planted)
        return _with_rows(ds, X[row_map], row_map, recipe)
    elif kind == "permute":
        row_perm, col_perm = rng.permutation(n), rng.permutation(m)
        col_inv = np.argsort(col_perm)
        recipe["row_permutation"] = row_perm.tolist()
        recipe["column_permutation"] = col_perm.tolist()
        out = _with_rows(ds, X[row_perm][:, col_perm], row_perm, recipe)
        truth = tuple(Bicluster(b.observations, col_inv[list(b.features)]) for b in out.truth)
        return replace(out, truth=truth)
    return GeneratedDataset(DataMatrix(X), ds.truth, recipe)


def invert_permutation(ds):
    """Undo a ``permute`` transform using the permutations in its recipe."""
    row_perm = np.asarray(ds.recipe["row_permutation"])
    col_perm = np.asarray(ds.recipe["column_permutation"])
    X = np.empty_like(ds.values)
    X[np.ix_(row_perm, col_perm)] = ds.values
    truth = tuple(Bicluster(row_perm[list(b.observations)], col_perm[list(b.features)]) for b in ds.truth)
    recipe = {k: v for k, v in ds.recipe.items()
              if k not in ("transform", "transform_seed", "row_permutation", "column_permutation")}
    return GeneratedDataset(DataMatrix(X), truth, recipe)


_DERIVED = {
    "scaled": "scale",
    "translated": "translate",
    "linear": "linear",
    "square": "square",
    "exponential": "exp",
    "point_proportion": "point_proportion",
    "cluster_proportion": "cluster_proportion",
    "noisy_uniform": "uniform_noise",
    "permutations": "permute",
}

FAMILIES = (
    "nonlinear1",
    "nonlinear2",
    "base",
    *_DERIVED,
    "normal",
    "noisy_normal",
    "overlap",
)

# normalization used for each family in the benchmark runs
FAMILY_NORMALIZATION = {f: ("unbounded" if f in ("normal", "noisy_normal") else "bounded") for f in FAMILIES}
FAMILY_NORMALIZATION["large"] = "bounded"


def generate(family, seed=0):
    """Generate one instance of a named family.

    Derived families apply their transform to the ``base`` instance with
    the same seed, so that paired comparisons share the planted block.
    """
    if family == "nonlinear1":
        return gen_nonlinear(1, seed)
    if family == "nonlinear2":
        return gen_nonlinear(2, seed)
    if family == "base":
        return gen_base(seed)
    if family in _DERIVED:
        ds = apply_transform(gen_base(seed), _DERIVED[family], seed=seed + 1)
        return replace(ds, recipe=dict(ds.recipe, family=family))
    if family == "normal":
        return gen_normal(False, seed)
    if family == "noisy_normal":
        return gen_normal(True, seed)
    if family == "overlap":
        return gen_overlap(seed)
    if family == "large":
        return gen_large(seed)
    raise ReldencluError(f"unknown family {family!r}; choose from {', '.join(FAMILIES + ('large',))}")
