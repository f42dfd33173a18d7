import csv
import json

import numpy as np
import pytest

from reldenclu.cli import main, read_config, read_matrix_csv
from reldenclu.core import ParameterSet, ReldencluError
from reldenclu.datagen import gen_nonlinear


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    return path


class TestReaders:
    def test_header_detection(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [["a", "b"], [1, 2], [3, 4]])
        values, header = read_matrix_csv(p)
        assert header == ["a", "b"] and values.tolist() == [[1, 2], [3, 4]]
        p = write_csv(tmp_path / "b.csv", [[1, 2], [3, 4]])
        assert read_matrix_csv(p)[1] is None

    def test_non_numeric_cell(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [[1, 2], [3, "x"]])
        with pytest.raises(ReldencluError, match="row 2, column 2"):
            read_matrix_csv(p)

    def test_ragged(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [[1, 2], [3]])
        with pytest.raises(ReldencluError, match="row 2"):
            read_matrix_csv(p)

    def test_config_forms(self, tmp_path):
        (tmp_path / "a.json").write_text(json.dumps({"sim2seed": 0.7, "reuse_all_seeds": True}))
        (tmp_path / "a.cfg").write_text("# paper values\nsim2seed = 0.7\nreuse_all_seeds = true\n")
        expected = ParameterSet(sim2seed=0.7, reuse_all_seeds=True)
        assert read_config(tmp_path / "a.json") == expected
        assert read_config(tmp_path / "a.cfg") == expected

    def test_config_unknown_key(self, tmp_path):
        (tmp_path / "a.cfg").write_text("sim2sed = 0.7\n")
        with pytest.raises(ReldencluError, match="sim2sed"):
            read_config(tmp_path / "a.cfg")


class TestGenerate:
    def test_deterministic(self, tmp_path, capsys):
        for d in ("a", "b"):
            assert run(["generate", "base", "--seed", 7, "--out", tmp_path / d], capsys)[0] == 0
        for name in ("matrix.csv", "truth.json", "recipe.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        values, _ = read_matrix_csv(tmp_path / "a" / "matrix.csv")
        assert values.shape == (1000, 20)

    def test_overlap_two_truths(self, tmp_path, capsys):
        run(["generate", "overlap", "--out", tmp_path], capsys)
        truth = json.loads((tmp_path / "truth.json").read_text())
        assert len(truth["biclusters"]) == 2

    def test_unknown_family(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            main(["generate", "sparse", "--out", str(tmp_path)])

    @pytest.mark.slow
    def test_large(self, tmp_path, capsys):
        run(["generate", "large", "--out", tmp_path], capsys)
        assert read_matrix_csv(tmp_path / "matrix.csv")[0].shape == (20000, 100)


class TestRunEvaluate:
    def test_round_trip(self, tmp_path, capsys):
        run(["generate", "base", "--seed", 7, "--out", tmp_path / "data"], capsys)
        code, out, _ = run(["run", tmp_path / "data" / "matrix.csv", "--out", tmp_path / "res"], capsys)
        assert code == 0
        manifest = json.loads((tmp_path / "res" / "manifest.json").read_text())
        assert manifest["density_path"] == "large" and manifest["shape"] == [1000, 20]
        assert manifest["parameters"] == json.loads(json.dumps(ParameterSet().__dict__))
        for name in ("observation_membership.csv", "feature_membership.csv"):
            assert (tmp_path / "res" / name).exists()
        code, out, _ = run(["evaluate", tmp_path / "res" / "biclusters.json", tmp_path / "data" / "truth.json"], capsys)
        assert code == 0
        accuracy = float(out.split("accuracy ")[1].split()[0])
        assert accuracy >= 0.95

    def test_run_is_replayable(self, tmp_path, capsys):
        X = gen_nonlinear(2, seed=1).values[:, :6]
        write_csv(tmp_path / "x.csv", X.tolist())
        for d in ("a", "b"):
            run(["run", tmp_path / "x.csv", "--out", tmp_path / d], capsys)
        assert (tmp_path / "a" / "biclusters.json").read_bytes() == (tmp_path / "b" / "biclusters.json").read_bytes()

    def test_nan_cell(self, tmp_path, capsys):
        rows = np.random.default_rng(0).uniform(size=(10, 4)).tolist()
        rows[4][2] = "nan"
        write_csv(tmp_path / "x.csv", rows)
        code, _, err = run(["run", tmp_path / "x.csv", "--out", tmp_path / "o"], capsys)
        assert code != 0 and "row 5, column 3" in err

    def test_two_features(self, tmp_path, capsys):
        write_csv(tmp_path / "x.csv", np.random.default_rng(0).uniform(size=(10, 2)).tolist())
        code, _, err = run(["run", tmp_path / "x.csv", "--out", tmp_path / "o"], capsys)
        assert code != 0 and "at least 3 features" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(["run", tmp_path / "nope.csv", "--out", tmp_path / "o"], capsys)
        assert code != 0 and "cannot read" in err

    def test_estimate_equals_truth(self, tmp_path, capsys):
        run(["generate", "base", "--out", tmp_path], capsys)
        code, out, _ = run(["evaluate", tmp_path / "truth.json", tmp_path / "truth.json"], capsys)
        assert "accuracy 1.0000" in out

    def test_dimension_mismatch(self, tmp_path, capsys):
        (tmp_path / "b.json").write_text(json.dumps({"shape": [10, 3], "biclusters": [
            {"observations": [1, 2], "features": [1]}]}))
        (tmp_path / "t.json").write_text(json.dumps({"shape": [12, 3], "biclusters": [
            {"observations": [1], "features": [1]}]}))
        code, _, err = run(["evaluate", tmp_path / "b.json", tmp_path / "t.json"], capsys)
        assert code != 0 and "dimension mismatch" in err

    def test_classes_polarity(self, tmp_path, capsys):
        (tmp_path / "b.json").write_text(json.dumps({"shape": [6, 3], "biclusters": [
            {"observations": [1, 2, 3], "features": [1, 2, 3]}]}))
        write_csv(tmp_path / "l.csv", [[1], [1], [0], [0], [0], [0]])
        write_csv(tmp_path / "n.csv", [[0], [0], [1], [1], [1], [1]])
        outs = [run(["evaluate", tmp_path / "b.json", tmp_path / f, "--mode", "classes"], capsys)[1]
                for f in ("l.csv", "n.csv")]
        assert outs[0].splitlines()[0] == outs[1].splitlines()[0]
        assert "0.8333" in outs[0]

    def test_percentile_features(self, tmp_path, capsys):
        (tmp_path / "b.json").write_text(json.dumps({"shape": [10, 3], "feature_names": ["gdp", "age", "beds"],
                                                     "biclusters": [{"observations": [1, 2], "features": [1]},
                                                                    {"observations": [9, 10], "features": [2, 3]}]}))
        write_csv(tmp_path / "v.csv", [[v] for v in range(10)])
        code, out, _ = run(["evaluate", tmp_path / "b.json", tmp_path / "v.csv", "--mode", "percentile",
                            "--percentile", 80], capsys)
        assert code == 0
        assert "best bicluster 2: match 1.0000" in out and "features: age, beds" in out


class TestPlotData:
    def _files(self, tmp_path, clusters, n=5):
        X = np.arange(n * 3, dtype=float).reshape(n, 3)
        write_csv(tmp_path / "x.csv", X.tolist())
        (tmp_path / "b.json").write_text(json.dumps({"shape": [n, 3], "biclusters": clusters}))

    def _flags(self, path):
        with open(path) as fh:
            return [int(r["flag"]) for r in csv.DictReader(fh)]

    def test_all_rows(self, tmp_path, capsys):
        self._files(tmp_path, [{"observations": [1, 2, 3, 4, 5], "features": [1, 2]}])
        run(["plot-data", tmp_path / "x.csv", tmp_path / "b.json", "--pair", 1, 2, "--out", tmp_path / "p.csv"], capsys)
        assert self._flags(tmp_path / "p.csv") == [1] * 5

    def test_empty_list(self, tmp_path, capsys):
        self._files(tmp_path, [])
        run(["plot-data", tmp_path / "x.csv", tmp_path / "b.json", "--pair", 1, 2, "--out", tmp_path / "p.csv"], capsys)
        assert self._flags(tmp_path / "p.csv") == [0] * 5

    def test_invalid_pair(self, tmp_path, capsys):
        self._files(tmp_path, [])
        code, _, err = run(["plot-data", tmp_path / "x.csv", tmp_path / "b.json", "--pair", 1, 4,
                            "--out", tmp_path / "p.csv"], capsys)
        assert code != 0 and "invalid pair" in err

    def test_quadratic_toy(self, tmp_path, capsys):
        ds = gen_nonlinear(1, seed=0)
        write_csv(tmp_path / "x.csv", ds.values.tolist())
        run(["run", tmp_path / "x.csv", "--out", tmp_path / "res"], capsys)
        cols = ds.recipe["block_columns"]
        # the identity column against the 4x^2 column
        run(["plot-data", tmp_path / "x.csv", tmp_path / "res" / "biclusters.json", "--pair", cols[0] + 1,
             cols[7] + 1, "--out", tmp_path / "p.csv"], capsys)
        flags = np.array(self._flags(tmp_path / "p.csv"))
        planted = list(ds.truth[0].observations)
        assert flags[planted].mean() >= 0.85


class TestBench:
    def test_family(self, capsys):
        code, out, _ = run(["bench", "--family", "base"], capsys)
        assert code == 0 and out.strip().endswith(" s")
