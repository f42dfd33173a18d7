"""Command-line front-end.

Subcommands::

    reldenclu run data.csv --config params.cfg --out results/
    reldenclu generate base --seed 7 --out data/
    reldenclu evaluate results/biclusters.json data/truth.json --mode truth
    reldenclu plot-data data.csv results/biclusters.json --pair 1 2 --out xy.csv
    reldenclu bench --family base --seed 0

Ids in every file written or read here are 1-based.
"""

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import run_reldenclu
from .core import Bicluster, DataMatrix, ParameterSet, ReldencluError, TooFewFeaturesError, membership_matrix
from .datagen import FAMILIES, FAMILY_NORMALIZATION, generate
from .evaluate import (
    best_match,
    class_match_accuracy,
    export_membership_features,
    observation_membership,
    percentile_match,
    precision_recall_gscore,
    top_set,
)

logger = logging.getLogger("reldenclu")

PARAM_FIELDS = {f.name: f for f in dataclasses.fields(ParameterSet)}


class CLIError(ReldencluError):
    pass


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix_csv(path):
    """Read a numeric CSV, auto-detecting a single header row.

    Returns
    -------
    values : ndarray of shape (n, m)
    header : list of str or None
    """
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise CLIError(f"{path} is empty")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise CLIError(f"{path} has a header but no data rows")
    width = len(header) if header else len(rows[0])
    values = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise CLIError(f"row {i + 1} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise CLIError(f"non-numeric cell {cell!r} at row {i + 1}, column {j + 1}") from None
    return values, header


def write_matrix_csv(path, values, header=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in values:
            w.writerow([repr(float(v)) for v in row])


def _parse_value(text):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_config(path):
    """Load a ParameterSet from a flat JSON object or ``key = value`` lines.

    Keys must be ParameterSet field names; anything else is an error.
    Blank lines and ``#`` comments are skipped in the ``key = value`` form.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CLIError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CLIError(f"config line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key] = _parse_value(value)
    if not isinstance(raw, dict):
        raise CLIError("config must be a flat key-value mapping")
    unknown = sorted(set(raw) - set(PARAM_FIELDS))
    if unknown:
        raise CLIError(f"unknown config key(s): {', '.join(unknown)}")
    return ParameterSet(**raw)


def biclusters_to_json(biclusters, shape, feature_names=None):
    out = {
        "shape": list(shape),
        "biclusters": [
            {"observations": [i + 1 for i in b.observations], "features": [j + 1 for j in b.features]}
            for b in biclusters
        ],
    }
    if feature_names:
        out["feature_names"] = list(feature_names)
    return out


def read_biclusters(path):
    """Read a bicluster or truth JSON file written by this tool.

    Returns
    -------
    biclusters : list of Bicluster
        With 0-based indices.
    shape : tuple or None
    feature_names : list or None
    """
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CLIError(f"{path} is not valid JSON: {exc.msg}") from exc
    items = data["biclusters"] if isinstance(data, dict) else data
    shape = tuple(data["shape"]) if isinstance(data, dict) and "shape" in data else None
    names = data.get("feature_names") if isinstance(data, dict) else None
    out = []
    for k, item in enumerate(items):
        rows, cols = item["observations"], item["features"]
        if min(rows, default=1) < 1 or min(cols, default=1) < 1:
            raise CLIError(f"bicluster {k + 1} in {path}: ids are 1-based")
        out.append(Bicluster([r - 1 for r in rows], [c - 1 for c in cols]))
    return out, shape, names


def read_vector(path):
    values, _ = read_matrix_csv(path)
    if values.shape[1] != 1:
        raise CLIError(f"{path} must have a single column, found {values.shape[1]}")
    return values[:, 0]


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _membership_csv(path, bits, id_name):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([id_name] + [f"bicluster_{k + 1}" for k in range(bits.shape[1])])
        for i, row in enumerate(bits):
            w.writerow([i + 1] + row.tolist())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _params(args):
    params = read_config(args.config) if args.config else ParameterSet()
    return dataclasses.replace(params, rng_seed=args.seed)


def cmd_run(args):
    values, header = read_matrix_csv(args.input)
    if values.shape[1] < 3:
        raise TooFewFeaturesError(f"need at least 3 features, got {values.shape[1]}")
    matrix = DataMatrix(values, col_ids=header)
    params = _params(args)
    start = time.perf_counter()
    clusters, details = run_reldenclu(matrix, params, return_details=True)
    elapsed = time.perf_counter() - start

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n, m = matrix.shape
    _write_json(out / "biclusters.json", biclusters_to_json(clusters, (n, m), header))
    _membership_csv(out / "observation_membership.csv", export_membership_features(clusters, n), "observation")
    feat = np.zeros((m, len(clusters)), dtype=np.uint8)
    for k, b in enumerate(clusters):
        feat[list(b.features), k] = 1
    _membership_csv(out / "feature_membership.csv", feat, "feature")
    _write_json(out / "manifest.json", {
        "version": __version__,
        "command": "run",
        "input": str(args.input),
        "input_sha256": _sha256(args.input),
        "shape": [n, m],
        "parameters": dataclasses.asdict(params),
        "seed": args.seed,
        "density_path": details["density_path"],
        "n_seeds": len(details["seeds"]),
        "n_biclusters": len(clusters),
        "seconds": round(elapsed, 3),
    })
    print(f"{len(clusters)} bicluster(s) written to {out}")
    return 0


def cmd_generate(args):
    ds = generate(args.family, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "matrix.csv", ds.values)
    _write_json(out / "truth.json", biclusters_to_json(ds.truth, ds.matrix.shape))
    _write_json(out / "recipe.json", ds.recipe)
    n, m = ds.matrix.shape
    print(f"{args.family} seed {args.seed}: {n} x {m} matrix, {len(ds.truth)} planted bicluster(s) in {out}")
    return 0


def _check_shape(shape, other, what):
    if shape is not None and other is not None and tuple(shape) != tuple(other):
        raise CLIError(f"dimension mismatch: biclusters are over {tuple(shape)}, {what} over {tuple(other)}")


def _feature_label(j, names):
    return names[j] if names else str(j + 1)


def cmd_evaluate(args):
    clusters, shape, names = read_biclusters(args.biclusters)
    if not clusters:
        raise CLIError("no biclusters to evaluate")
    if args.mode == "truth":
        truth, tshape, _ = read_biclusters(args.reference)
        _check_shape(shape, tshape, "truth")
        shape = shape or tshape
        if shape is None:
            raise CLIError("matrix shape unknown: neither file records it")
        for k, t in enumerate(truth):
            b, acc = best_match(clusters, membership_matrix(t, *shape))
            print(f"truth {k + 1}: accuracy {acc:.4f} (bicluster {clusters.index(b) + 1})")
        return 0

    vector = read_vector(args.reference)
    n = len(vector)
    _check_shape(shape and shape[:1], (n,), "reference rows")
    if args.mode == "classes":
        labels = vector.astype(int)
        scores = [class_match_accuracy(observation_membership(b, n), labels) for b in clusters]
        k = int(np.argmax(scores))
        print(f"best bicluster {k + 1}: class-match accuracy {scores[k]:.4f}")
        for cls, (p, r, g) in precision_recall_gscore(observation_membership(clusters[k], n), labels).items():
            fmt = lambda v: "*" if v is None else f"{v:.4f}"
            print(f"class {cls}: precision {fmt(p)}  recall {fmt(r)}  gscore {fmt(g)}")
        return 0

    b, score = percentile_match(clusters, vector, args.percentile)
    top = int(top_set(vector, args.percentile).sum())
    print(f"top set above the {args.percentile:g} percentile: {top} observation(s)")
    print(f"best bicluster {clusters.index(b) + 1}: match {score:.4f}")
    print("features: " + ", ".join(_feature_label(j, names) for j in b.features))
    return 0


def cmd_plotdata(args):
    values, _ = read_matrix_csv(args.input)
    clusters, shape, _ = read_biclusters(args.biclusters)
    _check_shape(shape, values.shape, "input")
    n, m = values.shape
    i, j = args.pair
    if not (1 <= i <= m and 1 <= j <= m) or i == j:
        raise CLIError(f"invalid pair ({i}, {j}) for {m} features")
    i, j = i - 1, j - 1
    flag = np.zeros(n, dtype=np.uint8)
    if args.bicluster is not None:
        if not 1 <= args.bicluster <= len(clusters):
            raise CLIError(f"bicluster {args.bicluster} does not exist")
        flag |= observation_membership(clusters[args.bicluster - 1], n)
    else:
        for b in clusters:
            if i in b.features and j in b.features:
                flag |= observation_membership(b, n)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "flag"])
        for x, y, f in zip(values[:, i], values[:, j], flag):
            w.writerow([repr(float(x)), repr(float(y)), int(f)])
    print(f"{int(flag.sum())} of {n} points flagged; written to {args.out}")
    return 0


def cmd_bench(args):
    if args.input:
        values, _ = read_matrix_csv(args.input)
        matrix, label = DataMatrix(values), str(args.input)
        params = _params(args)
    else:
        ds = generate(args.family, args.seed)
        matrix, label = ds.matrix, f"{args.family} seed {args.seed}"
        params = dataclasses.replace(_params(args), normalization=FAMILY_NORMALIZATION[args.family])
    start = time.perf_counter()
    clusters = run_reldenclu(matrix, params)
    elapsed = time.perf_counter() - start
    n, m = matrix.shape
    print(f"{label}: {n} x {m}, {len(clusters)} bicluster(s), {elapsed:.2f} s")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="reldenclu", description="Relative-density biclustering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="find biclusters in a CSV matrix")
    p.add_argument("input", help="numeric CSV, optional header row")
    p.add_argument("--config", help="JSON object or key = value file of parameters")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="write a simulated dataset")
    p.add_argument("family", choices=FAMILIES + ("large",))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score biclusters against truth, labels or an indicator")
    p.add_argument("biclusters", help="biclusters.json from the run command")
    p.add_argument("reference", help="truth JSON (mode truth) or one-column CSV (other modes)")
    p.add_argument("--mode", choices=("truth", "classes", "percentile"), default="truth")
    p.add_argument("--percentile", type=float, default=90.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot-data", help="emit x, y, flag columns for one feature pair")
    p.add_argument("input")
    p.add_argument("biclusters")
    p.add_argument("--pair", type=int, nargs=2, required=True, metavar=("I", "J"))
    p.add_argument("--bicluster", type=int, help="flag only this bicluster's rows")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("bench", help="time one run")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("input", nargs="?")
    src.add_argument("--family", choices=FAMILIES + ("large",))
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ReldencluError, KeyError, TypeError) as exc:
        print(f"reldenclu {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
