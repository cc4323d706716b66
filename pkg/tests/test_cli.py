import json

import pytest

from mcsa.cli import TRAIN_OPTIONS, build_parser, main
from mcsa.datakit.features import HEADER_SIZE


@pytest.fixture(scope="module")
def separable(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert main(["gen-synth", "--out", str(data), "--k", "2", "--videos-per-class", "8",
                 "--s", "4", "--t", "4", "--G", "4", "--snr", "6", "--seed", "1"]) == 0
    model = root / "lower.json"
    report = root / "report.json"
    assert main(["train-trimmed", "--manifest", str(data / "manifest.json"), "--model-out", str(model),
                 "--report-out", str(report), "--learning-rate", "0.1", "--max-iterations", "300",
                 "--a", "4", "--b", "4", "--seed", "2"]) == 0
    return root, data, model, report


def test_gradcheck(capsys):
    assert main(["gradcheck", "--seed", "7"]) == 0
    out = capsys.readouterr().out
    worst = float(out.strip().splitlines()[-1].split(":")[1])
    assert worst <= 1e-4


def test_split_plan(capsys):
    assert main(["split-plan", "--mode", "td+g", "--per-class", "10"]) == 0
    doc = json.loads(capsys.readouterr().out)
    b = doc["buckets"]
    assert (b["untrimmed_train_seen"]["per_class"], b["untrimmed_test_seen"]["per_class"]) == (8, 2)
    assert (b["untrimmed_train_unseen"]["per_class"], b["untrimmed_test_unseen"]["per_class"]) == (2, 8)
    assert b["untrimmed_train_unseen"]["classes"] == 51


def test_train_and_eval(separable, capsys):
    _, data, model, report = separable
    assert json.loads(report.read_text())["final_train_acc"] == 1.0
    capsys.readouterr()
    assert main(["eval", "--model", str(model), "--manifest", str(data / "manifest.json")]) == 0
    assert float(capsys.readouterr().out) == 1.0


def test_predict(separable, capsys):
    _, data, model, _ = separable
    capsys.readouterr()
    assert main(["predict", "--model", str(model),
                 "--feature", str(data / "features" / "trim_c001_v0003.mcsf")]) == 0
    assert capsys.readouterr().out.strip() == "class_001"


def test_train_untrimmed(separable, tmp_path):
    _, _, lower, _ = separable
    data = tmp_path / "u"
    assert main(["gen-synth", "--out", str(data), "--k", "2", "--videos-per-class", "4", "--s", "4",
                 "--t", "4", "--G", "4", "--rho", "0.5", "--seed", "3", "--prototype-seed", "1"]) == 0
    report = tmp_path / "r.json"
    assert main(["train-untrimmed", "--manifest", str(data / "manifest.json"),
                 "--val-manifest", str(data / "manifest.json"), "--lower-model", str(lower),
                 "--model-out", str(tmp_path / "upper.json"), "--report-out", str(report),
                 "--max-iterations", "5", "--a", "4", "--b", "4"]) == 0
    doc = json.loads(report.read_text())
    assert len(doc["loss_mmd"]) == 5 and doc["signal_attention"] is not None


def test_deterministic_model_files(separable, tmp_path):
    _, data, model, _ = separable
    out = tmp_path / "again.json"
    main(["train-trimmed", "--manifest", str(data / "manifest.json"), "--model-out", str(out),
          "--learning-rate", "0.1", "--max-iterations", "300", "--a", "4", "--b", "4", "--seed", "2"])
    assert out.read_bytes() == model.read_bytes()


def test_config_precedence(separable, tmp_path):
    _, data, _, _ = separable
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_iterations": 2, "a": 4, "b": 4, "batch_size": 3}))
    args = ["train-trimmed", "--manifest", str(data / "manifest.json"), "--model-out",
            str(tmp_path / "m.json"), "--report-out", str(tmp_path / "r.json"), "--config", str(cfg)]
    assert main(args) == 0
    assert len(json.loads((tmp_path / "r.json").read_text())["loss_total"]) == 2
    assert main(args + ["--max-iterations", "4"]) == 0
    assert len(json.loads((tmp_path / "r.json").read_text())["loss_total"]) == 4


def test_help_lists_defaults():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices["train-trimmed"]
    text = sub.format_help()
    for key, (_, default, _) in TRAIN_OPTIONS.items():
        assert "--" + key.replace("_", "-") in text
    assert "(default: 0.0001)" in text and "(default: 5000)" in text


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["eval", "--model", str(tmp_path / "none.json"), "--manifest", "x.json"]) == 2
    assert "error" in capsys.readouterr().err


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["split-plan", "--mode", "nope"])
    assert info.value.code == 2


def test_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("[1, 2]")
    assert main(["gradcheck", "--config", str(cfg)]) == 2


def test_format_error_exit_3(separable, tmp_path, capsys):
    _, data, model, _ = separable
    bad = tmp_path / "bad.mcsf"
    bad.write_bytes((data / "features" / "trim_c000_v0000.mcsf").read_bytes()[:HEADER_SIZE + 3])
    assert main(["predict", "--model", str(model), "--feature", str(bad)]) == 3
    assert "offset" in capsys.readouterr().err


def test_numeric_error_exit_4(monkeypatch):
    import mcsa.cli as cli
    monkeypatch.setattr(cli, "run_gradcheck", lambda seed: {"loss1": 1.0})
    assert main(["gradcheck"]) == 4
