import json
from pathlib import Path

import pytest

from xlner.cli import build_parser, main
from xlner.config import CONFIG_ENV, PipelineConfig, load_config
from xlner.errors import ConfigError

FIXTURES = Path(__file__).parent / "fixtures"
CONFIG = FIXTURES / "pipeline" / "config.toml"
OVERFIT = FIXTURES / "overfit20.jsonl"


class TestConfig:
    def test_defaults_without_file(self, monkeypatch):
        monkeypatch.delenv(CONFIG_ENV, raising=False)
        cfg = load_config()
        assert cfg == PipelineConfig()
        assert cfg.threshold == 1.8
        assert cfg.exclude_labels == ("Reason", "ADE")

    def test_env_variable(self, monkeypatch):
        monkeypatch.setenv(CONFIG_ENV, str(CONFIG))
        assert load_config().seed == 2021

    def test_relative_paths_resolve_against_file(self):
        cfg = load_config(CONFIG)
        assert cfg.input == CONFIG.parent / "source.jsonl"
        assert cfg.lexicon == CONFIG.parent / "lexicon.tsv"
        cfg.validate()

    def test_seed_propagates_to_training(self):
        assert load_config(CONFIG).train.seed == 2021

    def test_train_table(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("[train]\nlr = 0.01\nsplit = [0.5, 0.25, 0.25]\nlr_decay = true\n")
        tc = load_config(path).train
        assert (tc.lr, tc.split, tc.lr_decay) == (0.01, (0.5, 0.25, 0.25), True)

    @pytest.mark.parametrize("body", [
        "[train]\nlearning_rate = 0.1\n",
        "[train]\nsplit = [0.5, 0.5, 0.5]\n",
        "seed = \n",
    ])
    def test_bad_files(self, tmp_path, body):
        path = tmp_path / "c.toml"
        path.write_text(body)
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml")

    @pytest.mark.parametrize("change, message", [
        (dict(threshold=0.0), "threshold"),
        (dict(p_null=1.0), "p_null"),
        (dict(tension=-1.0), "tension"),
        (dict(exclude_labels=("Banana",)), "unknown labels"),
        (dict(pool_files={"Date": Path("x")}), "no surrogate list"),
    ])
    def test_validation(self, change, message):
        cfg = PipelineConfig(input=CONFIG, **change)
        with pytest.raises(ConfigError, match=message):
            cfg.validate()

    def test_resolved_is_json(self):
        json.dumps(load_config(CONFIG).resolved())


class TestParser:
    def test_config_accepted_after_subcommand(self):
        args = build_parser().parse_args(["stats", "--config", "x.toml", "--input", "y"])
        assert args.config == "x.toml"

    def test_config_before_subcommand(self):
        args = build_parser().parse_args(["--config", "x.toml", "stats", "--input", "y"])
        assert args.config == "x.toml"

    def test_subcommands(self):
        sub = next(a for a in build_parser()._actions if a.dest == "command")
        assert set(sub.choices) == {"infill", "split", "align", "filter", "project", "stats",
                                    "train", "eval", "pipeline"}

    def test_bad_split_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train", "--data", "d", "--model", "m", "--split", "0.5,0.5"])


class TestCommands:
    def test_stats_reference(self, capsys):
        assert main(["stats", "--input", str(OVERFIT), "--reference"]) == 0
        out = capsys.readouterr().out
        assert "Drug: 8305" in out
        assert "20 sentences" in out

    def test_flag_overrides_config(self, tmp_path):
        out = tmp_path / "o"
        assert main(["pipeline", "--config", str(CONFIG), "--output-dir", str(out), "--seed", "5"]) == 0
        assert json.loads((out / "config.resolved.json").read_text())["seed"] == 5

    def test_align_requires_translations(self, tmp_path):
        code = main(["align", "--source", str(OVERFIT), "--alignments", str(tmp_path / "a"),
                     "--pharaoh", str(tmp_path / "p")])
        assert code == 1

    def test_missing_input_file(self, tmp_path, capsys):
        assert main(["stats", "--input", str(tmp_path / "absent.jsonl")]) == 1
        assert "absent.jsonl" in capsys.readouterr().err

    def test_train_then_eval(self, tmp_path, capsys):
        model = tmp_path / "model.npz"
        log = tmp_path / "log.csv"
        assert main(["train", "--data", str(OVERFIT), "--model", str(model), "--log", str(log),
                     "--max-iter", "20", "--eval-every", "10", "--split", "0.6,0.2,0.2",
                     "--report-dir", str(tmp_path / "report")]) == 0
        assert model.is_file()
        assert log.read_text().splitlines()[0] == "iteration,precision,recall,f1"
        assert [line.split(",")[0] for line in log.read_text().splitlines()[1:]] == ["10", "20"]
        assert (tmp_path / "report" / "test_scores.tsv").is_file()
        capsys.readouterr()
        tsv = tmp_path / "scores.tsv"
        assert main(["eval", "--model", str(model), "--data", str(OVERFIT), "--tsv", str(tsv)]) == 0
        out = capsys.readouterr().out
        assert "Drug" in out
        assert tsv.read_text().splitlines()[-1].startswith("total")
