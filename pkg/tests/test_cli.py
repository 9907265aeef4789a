import json

import pytest

from treesense.cli import main

from conftest import leaf, split


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def subsetsum_model(tmp_path, capsys):
    path = tmp_path / "ss.json"
    code, _, _ = run(capsys, "gen-subsetsum", "--set", "1,2", "--target", "3",
                     "--output", str(path))
    assert code == 0
    return path


@pytest.fixture
def grid_model_path(tmp_path):
    trees = []
    for f in range(2):
        for c in (1.0, 2.0):
            trees.append({"class_id": 1, "root": split(f, c, leaf(0.0), leaf(1.0))})
    doc = {"num_features": 2, "num_classes": 2, "base_score": 0.0, "trees": trees}
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def fig3_csv(tmp_path):
    rows = [(0.5, 0.5), (0.5, 1.5), (0.5, 2.5), (1.5, 0.5), (1.5, 2.5),
            (2.5, 0.5), (2.5, 1.5), (2.5, 2.5), (0.2, 0.8), (2.9, 1.4), (1.7, 2.2)]
    path = tmp_path / "fig3.csv"
    path.write_text("f0,f1\n" + "\n".join("%s,%s" % r for r in rows) + "\n")
    return path


class TestVerify:
    def test_subsetsum_sensitive_exit0(self, capsys, subsetsum_model):
        code, out, _ = run(capsys, "verify", "--model", str(subsetsum_model),
                           "--features", "f_prime", "--gap-raw", "0")
        assert code == 0
        assert "verdict: sensitive" in out

    def test_not_sensitive_exit1(self, capsys, tmp_path):
        path = tmp_path / "ss2.json"
        run(capsys, "gen-subsetsum", "--set", "2,4", "--target", "3", "--output", str(path))
        code, out, _ = run(capsys, "verify", "--model", str(path),
                           "--features", "f_prime", "--gap-raw", "0")
        assert code == 1

    def test_gap_prob_out_of_range_usage_error(self, capsys, subsetsum_model):
        code, _, err = run(capsys, "verify", "--model", str(subsetsum_model),
                           "--features", "f_prime", "--gap-prob", "0.6")
        assert code == 3
        assert "error" in err

    def test_classes_on_binary_usage_error(self, capsys, subsetsum_model):
        code, _, err = run(capsys, "verify", "--model", str(subsetsum_model),
                           "--features", "f_prime", "--gap-raw", "0",
                           "--classes", "0,2")
        assert code == 3

    def test_missing_gap_flag(self, capsys, subsetsum_model):
        code, _, err = run(capsys, "verify", "--model", str(subsetsum_model),
                           "--features", "f_prime")
        assert code == 3

    def test_node_limit_timeout_exit2(self, capsys, subsetsum_model):
        code, out, _ = run(capsys, "verify", "--model", str(subsetsum_model),
                           "--features", "f_prime", "--gap-raw", "0",
                           "--node-limit", "1")
        assert code == 2

    def test_json_report(self, capsys, subsetsum_model, tmp_path):
        report_path = tmp_path / "report.json"
        code, out, _ = run(capsys, "verify", "--model", str(subsetsum_model),
                           "--features", "f_prime", "--gap-raw", "0", "--json",
                           "--output", str(report_path))
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["verdict"] == "sensitive"
        assert report["certificate_ok"] is True
        assert report["pair"]["x1"][2] == 1.0
        assert "runtime_ms" in report["stats"]

    def test_feature_index_selector(self, capsys, subsetsum_model):
        code, _, _ = run(capsys, "verify", "--model", str(subsetsum_model),
                         "--features", "2", "--gap-raw", "0")
        assert code == 0

    def test_feature_file_selector(self, capsys, subsetsum_model, tmp_path):
        sel = tmp_path / "features.txt"
        sel.write_text("f_prime\n")
        code, _, _ = run(capsys, "verify", "--model", str(subsetsum_model),
                         "--features", "@" + str(sel), "--gap-raw", "0")
        assert code == 0

    def test_oracle_flag_agrees(self, capsys, subsetsum_model):
        code, _, _ = run(capsys, "verify", "--model", str(subsetsum_model),
                         "--features", "f_prime", "--gap-raw", "0", "--oracle")
        assert code == 0

    def test_distance_with_data(self, capsys, subsetsum_model, tmp_path):
        csv = tmp_path / "data.csv"
        csv.write_text("f0,f1,f_prime\n1,1,0\n0,1,1\n")
        code, out, _ = run(capsys, "verify", "--model", str(subsetsum_model),
                           "--features", "f_prime", "--gap-raw", "0",
                           "--data", str(csv))
        assert code == 0
        assert "distance to data" in out

    def test_strict_zero_breaks_degenerate_flip(self, capsys, tmp_path):
        # raw scores {0, 1}: the non-strict zero-gap query is satisfiable via
        # an exact raw == 0 copy, the strict variant is not
        doc = {"num_features": 1, "num_classes": 2, "trees": [
            {"class_id": 1, "root": split(0, 0.5, leaf(0.0), leaf(1.0))}]}
        path = tmp_path / "deg.json"
        path.write_text(json.dumps(doc))
        code, _, _ = run(capsys, "verify", "--model", str(path), "--features", "0",
                         "--gap-raw", "0")
        assert code == 0
        code, _, _ = run(capsys, "verify", "--model", str(path), "--features", "0",
                         "--gap-raw", "0", "--strict-zero")
        assert code == 1

    def test_verify_level_flag(self, capsys, subsetsum_model):
        for level in ("base", "+unaff", "+aff", "full"):
            code, _, _ = run(capsys, "verify", "--model", str(subsetsum_model),
                             "--features", "f_prime", "--gap-raw", "0",
                             "--level", level)
            assert code == 0

    def test_multiclass_query(self, capsys, tmp_path):
        doc = {"num_features": 2, "num_classes": 3, "trees": [
            {"class_id": 0, "root": split(0, 0.0, leaf(2.0), leaf(-2.0))},
            {"class_id": 1, "root": split(0, 0.0, leaf(-2.0), leaf(2.0))},
            {"class_id": 2, "root": leaf(0.0)},
        ]}
        path = tmp_path / "mc.json"
        path.write_text(json.dumps(doc))
        code, out, _ = run(capsys, "verify", "--model", str(path), "--features", "0",
                           "--gap-ratio", "2", "--classes", "0,1")
        assert code == 0

    def test_empty_feature_set_trivial(self, capsys, subsetsum_model, tmp_path):
        sel = tmp_path / "empty.txt"
        sel.write_text("\n")
        code, _, err = run(capsys, "verify", "--model", str(subsetsum_model),
                           "--features", "@" + str(sel), "--gap-raw", "0.5")
        assert code == 3  # empty selector is a usage error


class TestExportLp:
    def test_deterministic_bytes(self, capsys, subsetsum_model, tmp_path):
        out1 = tmp_path / "a.lp"
        out2 = tmp_path / "b.lp"
        for out in (out1, out2):
            code, _, _ = run(capsys, "export-lp", "--model", str(subsetsum_model),
                             "--features", "f_prime", "--gap-raw", "0",
                             "--output", str(out))
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_level_base_drops_opt_rows(self, capsys, subsetsum_model, tmp_path):
        out = tmp_path / "base.lp"
        code, _, _ = run(capsys, "export-lp", "--model", str(subsetsum_model),
                         "--features", "f_prime", "--gap-raw", "0",
                         "--level", "base", "--output", str(out))
        assert code == 0
        text = out.read_text()
        assert "unaff_" not in text and "\n aff:" not in text
        full = tmp_path / "full.lp"
        run(capsys, "export-lp", "--model", str(subsetsum_model),
            "--features", "f_prime", "--gap-raw", "0",
            "--level", "full", "--output", str(full))
        assert "unaff_" in full.read_text()


class TestMineClauses:
    def test_fig3(self, capsys, grid_model_path, fig3_csv, tmp_path):
        out = tmp_path / "clauses.json"
        code, text, _ = run(capsys, "mine-clauses", "--model", str(grid_model_path),
                            "--data", str(fig3_csv), "--max-width", "2",
                            "--output", str(out))
        assert code == 0
        assert "1 clauses" in text
        payload = json.loads(out.read_text())
        assert len(payload) == 1
        assert len(payload[0]["literals"]) == 2

    def test_dense_dataset_empty_file(self, capsys, grid_model_path, tmp_path):
        csv = tmp_path / "dense.csv"
        rows = ["%s,%s" % (a, b) for a in (0.5, 1.5, 2.5) for b in (0.5, 1.5, 2.5)]
        csv.write_text("f0,f1\n" + "\n".join(rows) + "\n")
        out = tmp_path / "clauses.json"
        code, text, _ = run(capsys, "mine-clauses", "--model", str(grid_model_path),
                            "--data", str(csv), "--max-width", "2",
                            "--output", str(out))
        assert code == 0
        assert "0 clauses" in text
        assert json.loads(out.read_text()) == []

    def test_cap(self, capsys, grid_model_path, tmp_path):
        csv = tmp_path / "sparse.csv"
        csv.write_text("f0,f1\n0.5,0.5\n2.5,2.5\n")
        uncapped = tmp_path / "all.json"
        run(capsys, "mine-clauses", "--model", str(grid_model_path),
            "--data", str(csv), "--max-width", "2", "--output", str(uncapped))
        total = len(json.loads(uncapped.read_text()))
        assert total > 3
        out = tmp_path / "clauses.json"
        code, text, _ = run(capsys, "mine-clauses", "--model", str(grid_model_path),
                            "--data", str(csv), "--max-width", "2",
                            "--max-clauses", "3", "--output", str(out))
        assert code == 0
        assert len(json.loads(out.read_text())) == 3


class TestClauseModeEndToEnd:
    def test_verify_with_mined_clauses(self, capsys, grid_model_path, fig3_csv, tmp_path):
        clause_file = tmp_path / "clauses.json"
        run(capsys, "mine-clauses", "--model", str(grid_model_path),
            "--data", str(fig3_csv), "--max-width", "2", "--output", str(clause_file))
        code, out, _ = run(capsys, "verify", "--model", str(grid_model_path),
                           "--features", "0", "--gap-raw", "0.5",
                           "--mode", "clause", "--clauses", str(clause_file))
        assert code in (0, 1)

    def test_prob_mode_needs_data(self, capsys, grid_model_path):
        code, _, err = run(capsys, "verify", "--model", str(grid_model_path),
                           "--features", "0", "--gap-raw", "0.5", "--mode", "prob")
        assert code == 3

    def test_probclause_end_to_end(self, capsys, grid_model_path, fig3_csv, tmp_path):
        clause_file = tmp_path / "clauses.json"
        run(capsys, "mine-clauses", "--model", str(grid_model_path),
            "--data", str(fig3_csv), "--max-width", "2", "--output", str(clause_file))
        code, out, _ = run(capsys, "verify", "--model", str(grid_model_path),
                           "--features", "0", "--gap-raw", "0.1",
                           "--mode", "probclause", "--clauses", str(clause_file),
                           "--data", str(fig3_csv), "--json")
        assert code in (0, 1)


class TestDistanceAndCompare:
    def test_distance_round_trip(self, capsys, subsetsum_model, tmp_path):
        report = tmp_path / "report.json"
        csv = tmp_path / "data.csv"
        csv.write_text("f0,f1,f_prime\n1,1,0\n0,1,1\n")
        run(capsys, "verify", "--model", str(subsetsum_model), "--features", "f_prime",
            "--gap-raw", "0", "--json", "--output", str(report))
        code, out, _ = run(capsys, "distance", "--model", str(subsetsum_model),
                           "--pair", str(report), "--data", str(csv),
                           "--features", "f_prime")
        assert code == 0
        assert "distance" in json.loads(out)

    def test_compare_table5_shape(self, capsys, tmp_path):
        modes = {"none": [0.5, 0.4, None], "prob": [0.2, 0.4, 0.1],
                 "clause": [0.3, 0.5, 0.2], "probclause": [0.1, 0.3, 0.1]}
        paths = []
        for mode, dists in modes.items():
            records = [{"mode": mode,
                        "verdict": "sensitive" if v is not None else "not_sensitive",
                        "distance": v} for v in dists]
            p = tmp_path / ("%s.json" % mode)
            p.write_text(json.dumps(records))
            paths.append(str(p))
        code, out, _ = run(capsys, "compare", *paths)
        assert code == 0
        table = json.loads(out)
        assert set(table["means"]) == set(modes)
        assert "prob_vs_none" in table["pairwise"]
        cell = table["pairwise"]["prob_vs_none"]
        assert cell["instances"] == 2
        assert cell["win"] == 1 and cell["draw"] == 1

    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 3
