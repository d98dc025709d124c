import hashlib
import json

from msaw.cli import main

SMALL_GEN = [
    "gen", "--sources", "3", "--per-season", "1500", "--prevalence", "0.02",
    "--features", "8", "--seed", "11",
]


def gen_small(base, subdir="data"):
    data_dir = base / subdir
    assert main(SMALL_GEN + ["-o", str(data_dir)]) == 0
    return data_dir


def write_config(base, data_dir, **overrides):
    cfg = {
        "data_dir": str(data_dir),
        "schema_path": str(data_dir / "schema.json"),
        "target_season": "2014-2015",
        "methods": [
            "pretrained_pooled", "online", "online_pretrained",
            "equal", "volume", "time", "msaw",
        ],
        "msaw": {},
        "smoothing": 1.0,
        "output_dir": str(base / "results"),
        "seed": 11,
        "snapshot_stride": 500,
    }
    cfg.update(overrides)
    path = base / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def file_hashes(paths):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in paths}


class TestGen:
    def test_writes_schema_and_one_csv_per_season(self, tmp_path):
        data_dir = gen_small(tmp_path)
        csvs = sorted(p.name for p in data_dir.glob("*.csv"))
        assert csvs == [
            "2011-2012.csv", "2012-2013.csv", "2013-2014.csv", "2014-2015.csv",
        ]
        assert (data_dir / "schema.json").exists()
        manifest = json.loads((data_dir / "gen_manifest.json").read_text())
        assert manifest["seed"] == 11
        assert manifest["target_season"] == "2014-2015"

    def test_identical_invocations_identical_files(self, tmp_path):
        first = gen_small(tmp_path, "a")
        second = gen_small(tmp_path, "b")
        assert file_hashes(sorted(first.iterdir())) == file_hashes(sorted(second.iterdir()))

    def test_invalid_prevalence_fails(self, tmp_path, capsys):
        code = main(["gen", "--prevalence", "1.5", "-o", str(tmp_path / "x")])
        assert code != 0
        assert "prevalence" in capsys.readouterr().err


class TestRun:
    def test_full_method_set(self, tmp_path):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir)
        assert main(["run", "--config", str(cfg)]) == 0
        out = tmp_path / "results"

        payload = json.loads((out / "metrics.json").read_text())
        assert len(payload) == 7
        assert sum(1 for entry in payload if entry["delong_vs"]) == 6
        assert payload[-1]["method"] == "msaw"

        target_rows = 1500
        for entry in payload:
            records = (out / f"records_{entry['method']}.csv").read_text().strip().splitlines()
            assert len(records) == target_rows + 1

        weights = (out / "weights_msaw.csv").read_text().strip().splitlines()
        assert weights[0].startswith("step,w_S_1")
        assert weights[0].endswith("w_T")
        assert len(weights) == 1 + 4  # snapshots at steps 1, 500, 1000, 1500

    def test_only_msaw(self, tmp_path):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir, methods=["msaw"])
        assert main(["run", "--config", str(cfg), "--no-plots"]) == 0
        payload = json.loads((tmp_path / "results" / "metrics.json").read_text())
        assert len(payload) == 1
        assert payload[0]["delong_vs"] == {}

    def test_figures_written_by_default_and_skippable(self, tmp_path):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir, output_dir=str(tmp_path / "with_plots"))
        assert main(["run", "--config", str(cfg)]) == 0
        assert (tmp_path / "with_plots" / "metrics.png").exists()
        assert (tmp_path / "with_plots" / "weights_msaw.png").exists()

        cfg = write_config(tmp_path, data_dir, output_dir=str(tmp_path / "no_plots"))
        assert main(["run", "--config", str(cfg), "--no-plots"]) == 0
        assert not (tmp_path / "no_plots" / "metrics.png").exists()

    def test_missing_season_file_names_it(self, tmp_path, capsys):
        data_dir = gen_small(tmp_path)
        cfg = write_config(
            tmp_path,
            data_dir,
            seasons=["2011-2012", "2012-2013", "2013-2014", "2014-2015"],
        )
        (data_dir / "2012-2013.csv").unlink()
        assert main(["run", "--config", str(cfg)]) != 0
        assert "2012-2013" in capsys.readouterr().err

    def test_unknown_method_kind(self, tmp_path, capsys):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir, methods=["msaw", "bogus"])
        assert main(["run", "--config", str(cfg)]) != 0
        assert "bogus" in capsys.readouterr().err

    def test_single_class_target_rejected(self, tmp_path, capsys):
        data_dir = gen_small(tmp_path)
        (data_dir / "1990-1991.csv").write_text(
            "f000,label\nP,0\nN,0\nM,0\n", encoding="utf-8"
        )
        cfg = write_config(tmp_path, data_dir, target_season="1990-1991")
        assert main(["run", "--config", str(cfg)]) != 0
        assert "single class" in capsys.readouterr().err

    def test_manifest_carries_seed(self, tmp_path):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir, methods=["msaw"])
        assert main(["run", "--config", str(cfg), "--no-plots"]) == 0
        manifest = json.loads((tmp_path / "results" / "manifest.json").read_text())
        assert manifest["seed"] == 11
        assert "metrics.json" in manifest["outputs"]


class TestSeasons:
    def test_one_row_per_source(self, tmp_path, capsys):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir)
        assert main(["seasons", "--config", str(cfg), "--no-plots"]) == 0
        lines = (tmp_path / "results" / "seasons.csv").read_text().strip().splitlines()
        assert lines[0] == "season,auroc,n_pos,n_neg"
        assert [line.split(",")[0] for line in lines[1:]] == [
            "2011-2012", "2012-2013", "2013-2014",
        ]

    def test_single_source(self, tmp_path):
        data_dir = tmp_path / "data"
        assert main([
            "gen", "--sources", "1", "--per-season", "800", "--prevalence", "0.05",
            "--features", "5", "--seed", "3", "-o", str(data_dir),
        ]) == 0
        cfg = write_config(tmp_path, data_dir, target_season="2012-2013", methods=["msaw"])
        assert main(["seasons", "--config", str(cfg), "--no-plots"]) == 0
        lines = (tmp_path / "results" / "seasons.csv").read_text().strip().splitlines()
        assert len(lines) == 2


class TestFeatures:
    def test_top_k_and_filter(self, tmp_path):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir)
        assert main([
            "features", "--config", str(cfg), "--season", "2012-2013",
            "--top-k", "5", "--category", "P", "--min-p-pos", "0.01", "--no-plots",
        ]) == 0
        lines = (tmp_path / "results" / "features_2012-2013.csv").read_text().strip().splitlines()
        assert lines[0] == "feature,category,p_given_pos,p_given_neg,log10_lr"
        rows = [line.split(",") for line in lines[1:]]
        assert 1 <= len(rows) <= 5
        assert all(row[1] == "P" for row in rows)
        assert all(float(row[2]) >= 0.01 for row in rows)

    def test_unknown_season(self, tmp_path, capsys):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir)
        assert main([
            "features", "--config", str(cfg), "--season", "2099-2100", "--no-plots",
        ]) != 0
        assert "2099-2100" in capsys.readouterr().err

    def test_zero_positive_season_rejected(self, tmp_path, capsys):
        data_dir = gen_small(tmp_path)
        (data_dir / "1990-1991.csv").write_text(
            "f000,label\nP,0\nN,0\n", encoding="utf-8"
        )
        cfg = write_config(tmp_path, data_dir)
        assert main([
            "features", "--config", str(cfg), "--season", "1990-1991", "--no-plots",
        ]) != 0
        assert "each class" in capsys.readouterr().err

    def test_top_k_must_be_positive(self, tmp_path, capsys):
        data_dir = gen_small(tmp_path)
        cfg = write_config(tmp_path, data_dir)
        assert main([
            "features", "--config", str(cfg), "--season", "2012-2013",
            "--top-k", "0", "--no-plots",
        ]) != 0
        assert "top-k" in capsys.readouterr().err
