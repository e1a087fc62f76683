import numpy as np

from semuep.cli import main
from semuep.embedding_store import load_kb
from semuep.experiment import load_results_csv
from semuep.rl import load_checkpoint


def test_export_synthetic_and_load(tmp_path, capsys):
    out = tmp_path / "kb.semb"
    code = main(["export-synthetic", "--dim", "32", "--count", "200", "--seed", "7",
                 "--out", str(out)])
    assert code == 0
    kb = load_kb(out)
    assert len(kb) == 200 and kb.dimension == 32


def test_export_synthetic_planted(tmp_path):
    out = tmp_path / "planted.semb"
    code = main(["export-synthetic", "--dim", "32", "--count", "200", "--seed", "0",
                 "--planted-dims", "4", "--out", str(out)])
    assert code == 0
    kb = load_kb(out)
    assert np.var(kb.matrix()[:, 10]) < 1e-3  # non-planted dims near constant


def test_full_train_then_eval_flow(tmp_path, capsys):
    kb_path = tmp_path / "kb.semb"
    assert main(["export-synthetic", "--dim", "16", "--count", "60", "--seed", "1",
                 "--out", str(kb_path)]) == 0

    cfg_path = tmp_path / "train.cfg"
    cfg_path.write_text(
        "epochs = 1\n"
        "episodes_per_epoch = 8\n"
        "hidden = 8, 8\n"
        "ecc_rate = 0.25\n"
        "seed = 3\n"
    )
    ckpt = tmp_path / "policy.npz"
    assert main(["train", "--kb", str(kb_path), "--config", str(cfg_path),
                 "--out", str(ckpt), "--holdout", "20"]) == 0
    loaded = load_checkpoint(ckpt)
    assert loaded.dim == 16

    results = tmp_path / "results.csv"
    code = main(["eval", "--kb", str(kb_path), "--checkpoint", str(ckpt),
                 "--strategies", "uniform,random,importance,no_uep,learned",
                 "--snr", "1,3", "--channel", "awgn", "--ecc", "repetition",
                 "--bits", "8", "--ecc-rate", "0.25", "--eval-messages", "10",
                 "--out", str(results)])
    assert code == 0
    rows = load_results_csv(results)
    assert len(rows) == 10 * 2 * 5
    out = capsys.readouterr().out
    assert "vs uniform" in out


def test_eval_learned_without_checkpoint_is_config_error(tmp_path):
    kb_path = tmp_path / "kb.semb"
    main(["export-synthetic", "--dim", "8", "--count", "30", "--seed", "1", "--out", str(kb_path)])
    code = main(["eval", "--kb", str(kb_path), "--strategies", "learned",
                 "--eval-messages", "5", "--out", str(tmp_path / "r.csv")])
    assert code == 1


def test_missing_kb_is_config_error(tmp_path):
    code = main(["eval", "--kb", str(tmp_path / "nope.semb"),
                 "--out", str(tmp_path / "r.csv")])
    assert code == 1


def test_bad_flag_is_config_error(tmp_path):
    assert main(["eval", "--nonsense"]) == 1


def test_unknown_train_config_key_is_config_error(tmp_path):
    kb_path = tmp_path / "kb.semb"
    main(["export-synthetic", "--dim", "8", "--count", "30", "--seed", "1", "--out", str(kb_path)])
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("not_a_field = 1\n")
    assert main(["train", "--kb", str(kb_path), "--config", str(cfg_path),
                 "--out", str(tmp_path / "x.npz")]) == 1


def test_train_divergence_exits_2_with_last_good_checkpoint(tmp_path, capsys):
    kb_path = tmp_path / "kb.semb"
    main(["export-synthetic", "--dim", "8", "--count", "30", "--seed", "1", "--out", str(kb_path)])
    cfg_path = tmp_path / "hot.cfg"
    cfg_path.write_text("epochs = 2\nepisodes_per_epoch = 8\nhidden = 8, 8\nactor_lr = 1e30\n")
    ckpt = tmp_path / "diverged.npz"
    code = main(["train", "--kb", str(kb_path), "--config", str(cfg_path),
                 "--out", str(ckpt), "--holdout", "5"])
    assert code == 2
    assert ckpt.exists()
    loaded = load_checkpoint(ckpt)
    assert all(np.all(np.isfinite(t)) for t in loaded.policy.tensors())


def test_checkpoint_dimension_mismatch_is_config_error(tmp_path):
    kb16 = tmp_path / "kb16.semb"
    kb8 = tmp_path / "kb8.semb"
    main(["export-synthetic", "--dim", "16", "--count", "40", "--seed", "1", "--out", str(kb16)])
    main(["export-synthetic", "--dim", "8", "--count", "40", "--seed", "1", "--out", str(kb8)])
    cfg_path = tmp_path / "train.cfg"
    cfg_path.write_text("epochs = 1\nepisodes_per_epoch = 4\nhidden = 8, 8\n")
    ckpt = tmp_path / "p16.npz"
    assert main(["train", "--kb", str(kb16), "--config", str(cfg_path),
                 "--out", str(ckpt), "--holdout", "10"]) == 0
    code = main(["eval", "--kb", str(kb8), "--checkpoint", str(ckpt),
                 "--strategies", "learned", "--eval-messages", "5",
                 "--out", str(tmp_path / "r.csv")])
    assert code == 1
