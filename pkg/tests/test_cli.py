"""Dataset formats and the command-line surface: parsing, determinism,
exit codes, and output artifacts."""
from __future__ import annotations

import json

import numpy as np
import pytest

from rankkernel import partial as pr
from rankkernel.cli import main
from rankkernel.datasets import (
    RankingDataset,
    parse_csv_permutations,
    parse_dataset,
    parse_rankings_text,
    serialize_csv_permutations,
    serialize_rankings_text,
    write_dataset,
)
from rankkernel.sampling import censor_topk, sample_uniform_permutations


class TestRankingsText:
    def test_basic_parse(self):
        data = parse_rankings_text("n=4\n2>1\n3>1,2>4\n")
        assert data.degree == 4
        assert data.records[0][0] == pr.from_string("2>1", 4)
        assert data.records[1][0].blocks == ((3,), (1, 2), (4,))

    def test_labels_and_rest_marker(self):
        data = parse_rankings_text("n=3\n2>1|rest,west\n2>1,east\n1,2,3\n")
        assert data.records[0] == (pr.from_string("2>1|rest", 3), "west")
        assert data.records[1] == (pr.from_string("2>1", 3), "east")
        assert data.records[2] == (pr.PartialRanking(3, ((1, 2, 3),)), None)

    def test_errors_name_the_line(self):
        with pytest.raises(ValueError, match="line 3"):
            parse_rankings_text("n=3\n2>1\n2>2\n")
        with pytest.raises(ValueError, match="line 2"):
            parse_rankings_text("n=3\n5>1\n")
        with pytest.raises(ValueError, match="header"):
            parse_rankings_text("2>1\n")

    def test_round_trip(self):
        rng = np.random.default_rng(80)
        records = []
        for _ in range(30):
            word = tuple(int(x) for x in rng.permutation(6) + 1)
            k = int(rng.integers(1, 7))
            label = None if rng.random() < 0.5 else f"u{rng.integers(10)}"
            records.append((censor_topk(word, k), label))
        data = RankingDataset(6, tuple(records))
        assert parse_rankings_text(serialize_rankings_text(data)) == data


class TestCsvPermutations:
    def test_parse_with_labels(self):
        data = parse_csv_permutations("3,2,1,WestJapan\n1,2,3\n")
        assert data.degree == 3
        assert data.records[0][0] == pr.top_k_ranking((3, 2, 1), 3)
        assert data.records[0][1] == "WestJapan"
        assert data.records[1][1] is None

    def test_full_row_preferred_over_label_reading(self):
        data = parse_csv_permutations("3,2,1,4\n")
        assert data.degree == 4
        assert data.records[0][1] is None

    def test_errors(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_csv_permutations("1,1,2\n")
        with pytest.raises(ValueError, match="line 2"):
            parse_csv_permutations("1,2,3\n1,2\n")

    def test_round_trip(self):
        rng = np.random.default_rng(81)
        words = sample_uniform_permutations(5, 20, rng)
        records = tuple(
            (censor_topk(w, 5), None if i % 3 else "east") for i, w in enumerate(words)
        )
        data = RankingDataset(5, records)
        assert parse_csv_permutations(serialize_csv_permutations(data)) == data

    def test_partial_rankings_not_serialisable_as_csv(self):
        data = RankingDataset(4, ((pr.from_string("2>1", 4), None),))
        with pytest.raises(ValueError, match="full rankings"):
            serialize_csv_permutations(data)


@pytest.fixture()
def small_dataset(tmp_path):
    path = tmp_path / "data.txt"
    rng = np.random.default_rng(82)
    words = sample_uniform_permutations(5, 8, rng)
    records = tuple((censor_topk(w, 2), "g1" if i < 4 else "g2") for i, w in enumerate(words))
    write_dataset(RankingDataset(5, records), path, "rankings-text")
    return path


class TestCommands:
    def test_sample_then_gram_round_trip(self, tmp_path):
        out = tmp_path / "data.txt"
        code = main([
            "sample", "--model", "p-mixture", "--n", "5", "--count", "6",
            "--topk", "2", "--seed", "3", "--output", str(out),
        ])
        assert code == 0
        dataset = parse_dataset(out, "rankings-text")
        assert len(dataset) == 6 and dataset.degree == 5

        prefix = tmp_path / "gram"
        code = main([
            "gram", "--input", str(out), "--seed", "4", "--samples", "10",
            "--bandwidth", "1.0", "--estimator", "antithetic", "--check-psd",
            "--output", str(prefix),
        ])
        assert code == 0
        matrix = np.loadtxt(prefix.with_suffix(".csv"), delimiter=",")
        assert matrix.shape == (6, 6)
        sidecar = json.loads(prefix.with_suffix(".json").read_text())
        assert sidecar["estimator"] == "antithetic"
        assert sidecar["seed"] == 4
        assert sidecar["kernel"]["bandwidth"] == 1.0
        assert prefix.with_suffix(".png").exists()

    def test_gram_deterministic_across_runs_and_threads(self, small_dataset, tmp_path, monkeypatch):
        outputs = []
        for run, threads in enumerate(("1", "4")):
            monkeypatch.setenv("RANKKERNEL_THREADS", threads)
            prefix = tmp_path / f"run{run}"
            code = main([
                "gram", "--input", str(small_dataset), "--seed", "11",
                "--samples", "8", "--bandwidth", "median", "--output", str(prefix),
                "--no-figure",
            ])
            assert code == 0
            outputs.append(
                (prefix.with_suffix(".csv").read_bytes(), prefix.with_suffix(".json").read_bytes())
            )
        assert outputs[0] == outputs[1]

    def test_gram_exact_infeasible_exits_2(self, tmp_path, capsys):
        path = tmp_path / "big.txt"
        path.write_text("n=12\n1>2\n2>3\n")
        code = main([
            "gram", "--input", str(path), "--estimator", "exact", "--exact-limit", "1000",
            "--seed", "0", "--bandwidth", "1.0", "--output", str(tmp_path / "g"),
        ])
        assert code == 2
        err = capsys.readouterr().err
        assert "infeasible" in err and "exceeds limit" in err

    def test_missing_seed_exits_1(self, small_dataset, tmp_path, capsys):
        code = main([
            "gram", "--input", str(small_dataset), "--bandwidth", "1.0",
            "--output", str(tmp_path / "g"),
        ])
        assert code == 1
        assert "--seed is required" in capsys.readouterr().err

    def test_bad_flag_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gram", "--no-such-flag"])
        assert exc.value.code == 1

    def test_mmd_command(self, tmp_path):
        x, y = tmp_path / "x.txt", tmp_path / "y.txt"
        main(["sample", "--model", "p-mixture", "--n", "5", "--count", "8", "--topk", "2",
              "--seed", "1", "--output", str(x)])
        main(["sample", "--model", "uniform", "--n", "5", "--count", "8", "--topk", "2",
              "--seed", "2", "--output", str(y)])
        prefix = tmp_path / "report"
        code = main([
            "mmd", "--input-x", str(x), "--input-y", str(y), "--seed", "5",
            "--samples", "8", "--bandwidth", "1.0", "--num-shuffles", "120",
            "--output", str(prefix),
        ])
        assert code == 0
        report = json.loads(prefix.with_suffix(".json").read_text())
        assert report["sample_sizes"] == [8, 8]
        assert report["num_shuffles"] == 120
        assert 1 / 121 <= report["p_value"] <= 1.0
        assert prefix.with_suffix(".png").exists()

    def test_cluster_command_with_labels(self, small_dataset, tmp_path):
        prefix = tmp_path / "clus"
        code = main([
            "cluster", "--input", str(small_dataset), "--seed", "6", "--samples", "8",
            "--bandwidth", "1.0", "--clusters", "3", "--output", str(prefix),
        ])
        assert code == 0
        summary = json.loads(prefix.with_suffix(".json").read_text())
        assert summary["clusters"] == 3
        assert 0.0 <= summary["dendrogram_purity"] <= 1.0
        lines = (tmp_path / "clus_assignments.csv").read_text().splitlines()
        assert lines[0] == "index,cluster,label"
        assert len(lines) == 9
        assert (tmp_path / "clus_dendrogram.json").exists()
        assert (tmp_path / "clus_dendrogram.png").exists()

    def test_config_file_defaults_and_flag_priority(self, small_dataset, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"samples": 4, "bandwidth": "1.0", "no-figure": True}))
        prefix = tmp_path / "out"
        code = main([
            "gram", "--input", str(small_dataset), "--seed", "7", "--samples", "6",
            "--config", str(config), "--output", str(prefix),
        ])
        assert code == 0
        sidecar = json.loads(prefix.with_suffix(".json").read_text())
        assert sidecar["samples_per_ranking"] == [6] * 8  # flag beat the file
        assert not prefix.with_suffix(".png").exists()  # file supplied no-figure

    def test_selfcheck_passes(self, capsys):
        assert main(["selfcheck", "--quiet"]) == 0
        assert "all checks passed" in capsys.readouterr().out

    def test_selfcheck_failure_exits_3(self, capsys, monkeypatch):
        monkeypatch.setattr("rankkernel.cli.run_selfcheck", lambda seed, verbose: 2)
        assert main(["selfcheck"]) == 3
        assert "2 check(s) failed" in capsys.readouterr().out

    def test_gram_accepts_csv_permutations(self, tmp_path):
        path = tmp_path / "perms.csv"
        path.write_text("3,2,1,west\n1,2,3,east\n2,3,1\n")
        prefix = tmp_path / "g"
        code = main([
            "gram", "--input", str(path), "--format", "csv-permutations",
            "--estimator", "exact", "--bandwidth", "1.0", "--seed", "0",
            "--output", str(prefix), "--no-figure",
        ])
        assert code == 0
        matrix = np.loadtxt(prefix.with_suffix(".csv"), delimiter=",")
        # full rankings: exact Gram equals pointwise kernel values
        assert matrix[0, 0] == pytest.approx(1.0)
        assert matrix[0, 1] == pytest.approx(np.exp(-3.0))  # reversal of 3 items
