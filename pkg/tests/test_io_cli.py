import json
import os

import numpy as np
import pytest

from conftest import random_sample
from lcdd.classifier import DDClassifier
from lcdd.cli import main
from lcdd.io import (
    RECIPES,
    DatasetRecipe,
    IngestError,
    ingest,
    load_model,
    read_csv,
    save_model,
    write_sample,
)
from lcdd.sampling import VmfParams, derive_rng, sample_vmf

WHOLESALE_HEADER = "Channel,Region,Fresh,Milk,Grocery,Frozen,Detergents_Paper,Delicassen\n"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def labeled_csv(tmp_path):
    r = derive_rng(0)
    X = np.vstack([sample_vmf(VmfParams(np.eye(3)[0], 8.0), 40, r), sample_vmf(VmfParams(np.eye(3)[1], 8.0), 40, r)])
    y = np.repeat([1, 2], 40)
    path = str(tmp_path / "data.csv")
    write_sample(path, X, y)
    return path, X, y


class TestIngest:
    def test_wholesale_uniform_row(self, tmp_path):
        p = write(tmp_path / "w.csv", WHOLESALE_HEADER + "2,3,10,10,10,10,10,10\n1,3,1,0,0,0,0,0\n")
        s = ingest(p, "wholesale")
        np.testing.assert_allclose(s.X[0], np.sqrt(1 / 6), atol=1e-15)
        assert s.y.tolist() == [2, 1]
        assert s.feature_names == list(RECIPES["wholesale"].columns)

    def test_wholesale_negative_rejected_with_row(self, tmp_path):
        p = write(tmp_path / "w.csv", WHOLESALE_HEADER + "2,3,10,10,10,10,10,10\n1,3,1,-5,0,0,0,0\n")
        with pytest.raises(IngestError) as exc:
            ingest(p, "wholesale")
        assert exc.value.errors[0][0] == 2
        assert "row 2" in str(exc.value)

    def test_missing_column(self, tmp_path):
        p = write(tmp_path / "w.csv", "Channel,Fresh\n1,2\n")
        with pytest.raises(IngestError.__mro__[1], match="missing column"):
            ingest(p, "wholesale")

    def test_spam_all_zero_row(self, tmp_path):
        row = ",".join(["0"] * 57) + ",1\n"
        p = write(tmp_path / "s.data", row + ",".join(["1"] * 48 + ["0"] * 9) + ",0\n")
        s = ingest(p, "spambase")
        assert s.X.shape == (2, 49)
        np.testing.assert_array_equal(s.X[0], np.eye(49)[48])
        assert s.y.tolist() == [2, 1]

    def test_spam_complement_below_tolerance_rejected(self, tmp_path):
        p = write(tmp_path / "s.data", ",".join(["3"] * 48 + ["0"] * 9) + ",1\n")
        with pytest.raises(IngestError, match="complement"):
            ingest(p, "spambase")

    def test_header_required(self, tmp_path):
        p = write(tmp_path / "x.csv", "1,2\n3,4\n")
        with pytest.raises(IngestError.__mro__[1], match="header"):
            ingest(p, "sphere")

    def test_ragged_and_non_numeric_rows(self, tmp_path):
        p = write(tmp_path / "x.csv", "a,b\n1,0\n1\nx,1\n")
        with pytest.raises(IngestError) as exc:
            ingest(p, "sphere")
        assert [r for r, _ in exc.value.errors] == [2, 3]

    def test_round_trip_bitwise(self, tmp_path):
        p = write(tmp_path / "w.csv", WHOLESALE_HEADER + "2,3,12669,9656,7561,214,2674,1338\n1,3,7057,9810,9568,1762,3293,1776\n")
        s = ingest(p, "wholesale")
        out = str(tmp_path / "sample.csv")
        write_sample(out, s.X, s.y)
        back = ingest(out, "sphere-labeled")
        np.testing.assert_array_equal(back.X, s.X)
        np.testing.assert_array_equal(back.y, s.y)

    def test_recipe_json(self, tmp_path):
        recipe = DatasetRecipe("mine", columns=("a", "b", "c"), label="cls", preprocessing="sqrt_compositional")
        rp = tmp_path / "recipe.json"
        rp.write_text(json.dumps(recipe.to_dict()))
        p = write(tmp_path / "d.csv", "cls,a,b,c\nx,1,1,2\n")
        s = ingest(p, str(rp))
        np.testing.assert_allclose(s.X[0], [0.5, 0.5, np.sqrt(0.5)], atol=1e-15)
        assert s.y.tolist() == ["x"]

    def test_unknown_recipe(self, tmp_path):
        with pytest.raises(ValueError):
            ingest(write(tmp_path / "d.csv", "a,b\n1,0\n"), "nope")


class TestModelPersistence:
    def test_round_trip_predictions(self, tmp_path, labeled_csv):
        _, X, y = labeled_csv
        clf = DDClassifier(beta=0.25, priors=(0.3, 0.7)).fit(X, y)
        path = str(tmp_path / "m.json")
        save_model(clf, path)
        back = load_model(path)
        assert back.separator_ == clf.separator_ and back.priors_ == clf.priors_
        np.testing.assert_array_equal(back.train1_, clf.train1_)
        Q = random_sample(np.random.default_rng(0), 50, 3)
        np.testing.assert_array_equal(back.predict(Q), clf.predict(Q))
        np.testing.assert_array_equal(back.predict(X), clf.predict(X))

    def test_schema_checked(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"schema": "lcdd.dd-model", "schema_version": 99}))
        with pytest.raises(ValueError, match="version"):
            load_model(str(p))


class TestCli:
    def test_depth_beta_one(self, tmp_path, labeled_csv):
        path, X, _ = labeled_csv
        out = tmp_path / "d.csv"
        assert main(["depth", path, "--recipe", "sphere-labeled", "--beta", "1", "--out", str(out)]) == 0
        header, rows = read_csv(str(out))
        assert header == ["row", "cdd", "lcdd"]
        assert all(r[1] == r[2] for r in rows)

    def test_depth_two_points(self, tmp_path):
        p = write(tmp_path / "two.csv", "x1,x2\n1,0\n0.6,0.8\n")
        out = tmp_path / "d.csv"
        assert main(["depth", p, "--beta", "0.3", "--out", str(out)]) == 0
        _, rows = read_csv(str(out))
        for r in rows:
            assert float(r[1]) == pytest.approx(1.6) and float(r[2]) == pytest.approx(1.6)

    def test_depth_profile_non_increasing(self, tmp_path, labeled_csv):
        path, _, _ = labeled_csv
        out = tmp_path / "p.csv"
        assert main(["depth", path, "--recipe", "sphere-labeled", "--beta-grid", "0.05,0.25,0.5,1", "--out", str(out)]) == 0
        _, rows = read_csv(str(out))
        vals = np.array([[float(v) for v in r[1:]] for r in rows])
        assert np.all(np.diff(vals, axis=1) <= 1e-12)

    def test_train_predict_closure(self, tmp_path, labeled_csv, capsys):
        path, X, y = labeled_csv
        model = str(tmp_path / "m.json")
        assert main(["train", path, "--beta", "0.25", "--out", model]) == 0
        preds = str(tmp_path / "p.csv")
        assert main(["predict", path, "--model", model, "--out", preds]) == 0
        _, rows = read_csv(preds)
        acc = np.mean([r[1] == r[2] for r in rows])
        risk = json.load(open(model))["training_risk"]
        assert acc == pytest.approx(1 - risk, abs=1e-12)

    def test_cv_beta(self, tmp_path, labeled_csv):
        path, _, _ = labeled_csv
        prefix = str(tmp_path / "cv")
        assert main(["cv-beta", path, "--beta-grid", "0.1,1", "--folds", "3", "--repeats", "1", "--out", prefix]) == 0
        svg = open(prefix + ".svg").read()
        assert 'stroke="red"' in svg and "stroke-dasharray" in svg
        header, rows = read_csv(prefix + ".csv")
        assert header == ["beta", "mean_mr", "selected"] and sum(int(r[2]) for r in rows) == 1

    def test_ddplot(self, tmp_path, labeled_csv):
        path, X, _ = labeled_csv
        prefix = str(tmp_path / "dd")
        assert main(["ddplot", path, "--beta", "0.25", "--out", prefix]) == 0
        assert open(prefix + ".svg").read().count("<circle") == len(X)
        header, rows = read_csv(prefix + ".csv")
        assert header == ["d1", "d2", "label"] and len(rows) == len(X)

    def test_simulate_manifest(self, tmp_path):
        out = tmp_path / "sim"
        argv = ["simulate", "--family", "vmf", "--setup", "3", "--q", "3", "--noise", "low", "--replications", "1", "--out", str(out)]
        assert main(argv) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["schema"] == "lcdd.simulation-manifest"
        cell = manifest["cells"][0]
        assert (cell["family"], cell["setup"], cell["q"], cell["noise"]) == ("vmf", 3, 3, "low")
        header, rows = read_csv(str(out / "results.csv"))
        assert header == manifest["columns"] and len(rows) == 4
        assert (out / "boxplot.svg").exists() and (out / "boxplot.csv").exists()

    def test_ingest_check(self, tmp_path, capsys):
        p = write(tmp_path / "w.csv", WHOLESALE_HEADER + "2,3,10,10,10,10,10,10\n1,3,1,2,0,0,0,0\n")
        assert main(["ingest-check", p, "--recipe", "wholesale"]) == 0
        assert "2 rows, dimension 6" in capsys.readouterr().out

    def test_exit_codes(self, tmp_path, capsys):
        bad = write(tmp_path / "w.csv", WHOLESALE_HEADER + "2,3,-1,10,10,10,10,10\n")
        assert main(["ingest-check", bad, "--recipe", "wholesale"]) == 3
        assert "row 1" in capsys.readouterr().err
        assert main(["ingest-check", str(tmp_path / "missing.csv")]) == 3
        assert main(["nonsense"]) == 2
        assert main(["depth"]) == 2
        good = write(tmp_path / "x.csv", "a,b\n1,0\n0,1\n")
        assert main(["depth", good, "--beta", "1.5", "--out", str(tmp_path / "o.csv")]) == 2
        assert not (tmp_path / "o.csv").exists()

    def test_numeric_failure_exit(self, tmp_path, monkeypatch):
        import lcdd.cli as cli

        def boom(args):
            raise cli.SeriesError("no convergence")

        monkeypatch.setattr(cli, "cmd_ingest_check", boom)
        good = write(tmp_path / "x.csv", "a,b\n1,0\n0,1\n")
        assert main(["ingest-check", good]) == 4

    def test_config_file_flags_win(self, tmp_path, labeled_csv):
        path, _, _ = labeled_csv
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"beta": 1.0, "recipe": "sphere-labeled", "out": str(tmp_path / "from_cfg.csv")}))
        assert main(["--config", str(cfg), "depth", path]) == 0
        _, rows = read_csv(str(tmp_path / "from_cfg.csv"))
        assert all(r[1] == r[2] for r in rows)
        out = tmp_path / "flag.csv"
        assert main(["--config", str(cfg), "depth", path, "--beta", "0.05", "--out", str(out)]) == 0
        _, rows = read_csv(str(out))
        assert any(r[1] != r[2] for r in rows)

    def test_config_unknown_key(self, tmp_path, labeled_csv):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"colour": "red"}))
        assert main(["--config", str(cfg), "depth", labeled_csv[0], "--out", str(tmp_path / "o.csv")]) == 2

    def test_console_script_help(self):
        with pytest.raises(SystemExit) as exc:
            from lcdd.cli import build_parser

            build_parser().parse_args(["--help"])
        assert exc.value.code == 0
