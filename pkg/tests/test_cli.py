import json

from profile_rec.data_access import load_cf
from profile_rec.main import main
from profile_rec.services.losses import dot_bpr_loss
from profile_rec.services.training import Trainer

SYNTH_ARGS = [
    "--topics", "2",
    "--users-per-topic", "4",
    "--items-per-topic", "6",
    "--words-per-topic", "8",
    "--interactions-per-user", "4",
    "--diversified", "1",
]


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def synth(capsys, tmp_path):
    data = tmp_path / "data"
    code, out, _ = run(capsys, "synth", "--out", str(data), *SYNTH_ARGS)
    assert code == 0
    return data, json.loads(out)


def test_unknown_command_is_a_usage_error(capsys) -> None:
    code, out, err = run(capsys, "nope")

    assert code == 1
    assert out == ""
    assert "error:" in err


def test_unknown_flag_is_a_usage_error(capsys, tmp_path) -> None:
    code, _, err = run(capsys, "synth", "--out", str(tmp_path), "--colour", "blue")

    assert code == 1
    assert "--colour" in err


def test_missing_store_is_a_data_error(capsys, tmp_path) -> None:
    code, _, err = run(
        capsys, "evaluate", "--data", str(tmp_path), "--users", "u.ezem", "--items", "i.ezem"
    )

    assert code == 2
    assert "No interaction split files" in err


def test_invalid_config_key_is_a_usage_error(capsys, tmp_path) -> None:
    config = tmp_path / "spec.json"
    config.write_text(json.dumps({"topics": 2, "colour": "blue"}), encoding="utf-8")

    code, _, err = run(capsys, "synth", "--out", str(tmp_path / "data"), "--config", str(config))

    assert code == 1
    assert "Invalid synthetic spec: colour" in err


def test_flags_override_config(capsys, tmp_path) -> None:
    config = tmp_path / "spec.json"
    config.write_text(json.dumps({"topics": 5, "users_per_topic": 2}), encoding="utf-8")

    code, out, _ = run(
        capsys, "synth", "--out", str(tmp_path / "data"), "--config", str(config), "--topics", "3"
    )

    assert code == 0
    assert json.loads(out)["users"] == 6


def test_synth_writes_a_loadable_store(capsys, tmp_path) -> None:
    data, summary = synth(capsys, tmp_path)

    assert summary == {"users": 8, "items": 12, "interactions": 32}
    for name in ("items.jsonl", "users.jsonl", "train.tsv", "val.tsv", "test.tsv", "topics.json", "manifest.json"):
        assert (data / name).exists()


def test_end_to_end_pipeline(capsys, tmp_path) -> None:
    data, _ = synth(capsys, tmp_path)
    run_dir = tmp_path / "run"

    code, out, _ = run(
        capsys,
        "--quiet",
        "train",
        "--data", str(data),
        "--out", str(run_dir),
        "--preset", "tiny",
        "--max-steps", "2",
        "--batch-size", "4",
        "--eval-interval", "1",
        "--seed", "0",
    )
    assert code == 0
    trained = json.loads(out)
    assert set(trained["test"]) == {"recall@10", "ndcg@10", "recall@20", "ndcg@20"}
    for name in ("best.ezrc", "vocab.txt", "summary.json", "config.json", "manifest.json"):
        assert (run_dir / name).exists()

    checkpoint, vocab = str(run_dir / "best.ezrc"), str(run_dir / "vocab.txt")
    stores = {}
    for kind, count in (("user", 8), ("item", 12)):
        stores[kind] = str(tmp_path / f"{kind}s.ezem")
        code, out, _ = run(
            capsys,
            "embed",
            "--checkpoint", checkpoint,
            "--vocab", vocab,
            "--data", str(data),
            "--kind", kind,
            "--out", stores[kind],
        )
        assert code == 0
        assert json.loads(out)["count"] == count

    code, out, _ = run(
        capsys, "evaluate", "--data", str(data), "--users", stores["user"], "--items", stores["item"], "--k", "5,10"
    )
    assert code == 0
    report = json.loads(out)
    assert len(report["rounds"]) == 1
    assert set(report["mean"]) == {"recall@5", "ndcg@5", "recall@10", "ndcg@10"}
    assert all(0.0 <= value <= 1.0 for value in report["mean"].values())

    code, out, _ = run(
        capsys, "evaluate", "--data", str(data), "--checkpoint", checkpoint, "--vocab", vocab, "--rounds", "1"
    )
    assert code == 0
    assert len(json.loads(out)["rounds"]) == 1

    code, out, _ = run(
        capsys, "recommend", "--users", stores["user"], "--items", stores["item"], "--data", str(data), "--k", "3"
    )
    assert code == 0
    recommendations = json.loads(out)
    assert len(recommendations) == 8
    assert all(len(entry["items"]) == 3 for entry in recommendations)

    before, after = tmp_path / "before.txt", tmp_path / "after.txt"
    before.write_text("t0w0 t0w1 t0w2", encoding="utf-8")
    after.write_text("t1w0 t1w1 t1w2", encoding="utf-8")
    code, out, _ = run(
        capsys,
        "demo-shift",
        "--checkpoint", checkpoint,
        "--vocab", vocab,
        "--user-profile-before", str(before),
        "--after", str(after),
        "--items", stores["item"],
        "--k", "3",
        "--topics", str(data / "topics.json"),
    )
    assert code == 0
    shift = json.loads(out)
    assert len(shift["before"]) == len(shift["after"]) == 3
    assert shift["before_majority_topic"] in {"0", "1"}

    code, out, _ = run(capsys, "report-scaling", str(run_dir))
    assert code == 0
    header, row = out.splitlines()
    assert header == "preset\taugmentation_count\trecall@10\tndcg@10"
    assert row.startswith("tiny\t1\t")


def test_demo_shift_needs_data_to_exclude(capsys, tmp_path) -> None:
    profile = tmp_path / "profile.txt"
    profile.write_text("likes tea", encoding="utf-8")

    code, _, err = run(
        capsys,
        "demo-shift",
        "--checkpoint", str(tmp_path / "best.ezrc"),
        "--vocab", str(tmp_path / "vocab.txt"),
        "--user-profile-before", str(profile),
        "--after", str(profile),
        "--items", str(tmp_path / "items.ezem"),
        "--exclude-user", "u1",
    )

    assert code == 2
    assert "error:" in err


def test_diversify_offline_with_echo(capsys, tmp_path) -> None:
    data, summary = synth(capsys, tmp_path)
    transcript = tmp_path / "transcript.jsonl"
    transcript.write_text("", encoding="utf-8")

    code, out, _ = run(
        capsys,
        "diversify",
        "--data", str(data),
        "--kind", "user",
        "--t", "2",
        "--mock-transcript", str(transcript),
        "--mock-fallback", "echo",
    )

    assert code == 0
    result = json.loads(out)
    assert result["user"] == {"calls": summary["users"], "failed": []}
    assert result["network_calls"] == 0
    assert (data / "progress-user.jsonl").exists()


def test_train_abort_keeps_the_last_good_checkpoint(capsys, tmp_path, monkeypatch) -> None:
    data, _ = synth(capsys, tmp_path)
    run_dir = tmp_path / "run"
    compute_losses = Trainer.compute_losses

    def poisoned(self, encoder, batch, rng):
        total, loss_con, loss_mlm = compute_losses(self, encoder, batch, rng)
        return total * float("nan"), loss_con, loss_mlm

    monkeypatch.setattr(Trainer, "compute_losses", poisoned)

    code, out, err = run(
        capsys, "--quiet", "train", "--data", str(data), "--out", str(run_dir), "--max-steps", "2", "--batch-size", "4"
    )

    assert code == 3
    assert out == ""
    assert "Non-finite loss at step 1." in err
    for name in ("best.ezrc", "vocab.txt", "config.json", "manifest.json"):
        assert (run_dir / name).exists()
    assert not (run_dir / "summary.json").exists()


def test_train_cf_abort_keeps_the_last_good_checkpoint(capsys, tmp_path, monkeypatch) -> None:
    data, _ = synth(capsys, tmp_path)
    out_dir = tmp_path / "cf"
    monkeypatch.setattr(
        "profile_rec.services.graph_cf.dot_bpr_loss", lambda *tensors: dot_bpr_loss(*tensors) * float("nan")
    )

    code, out, err = run(
        capsys, "--quiet", "train-cf", "--data", str(data), "--out", str(out_dir), "--dim", "4", "--epochs", "2"
    )

    assert code == 3
    assert json.loads(out)["aborted"] is True
    assert "Non-finite loss in epoch 1." in err
    for name in ("cf.ezrc", "metrics.json", "manifest.json"):
        assert (out_dir / name).exists()
    model, users, _ = load_cf(out_dir / "cf.ezrc")
    assert len(users) == model.num_users == 8


def test_objective_accepts_the_documented_name(capsys, tmp_path) -> None:
    data, _ = synth(capsys, tmp_path)
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"train": {"objective": "contrastive-paper"}}), encoding="utf-8")
    run_dir = tmp_path / "run"

    code, _, _ = run(
        capsys,
        "--quiet",
        "train",
        "--config", str(config),
        "--data", str(data),
        "--out", str(run_dir),
        "--max-steps", "1",
        "--batch-size", "4",
    )

    assert code == 0
    resolved = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
    assert resolved["train"]["objective"] == "contrastive-paper"

    code, _, _ = run(
        capsys,
        "--quiet",
        "train",
        "--data", str(data),
        "--out", str(tmp_path / "alias"),
        "--max-steps", "1",
        "--batch-size", "4",
        "--objective", "contrastive-exclusive",
    )

    assert code == 0
    resolved = json.loads((tmp_path / "alias" / "config.json").read_text(encoding="utf-8"))
    assert resolved["train"]["objective"] == "contrastive-paper"


def test_invalid_utf8_profile_is_a_data_error(capsys, tmp_path) -> None:
    data, _ = synth(capsys, tmp_path)
    items = data / "items.jsonl"
    items.write_bytes(items.read_bytes() + b'{"item_id": "bad\xff"}\n')

    code, _, err = run(capsys, "vocab", "--data", str(data), "--out", str(tmp_path / "vocab.txt"))

    assert code == 2
    assert "items.jsonl:13: invalid UTF-8." in err


def test_run_config_has_no_cf_section(capsys, tmp_path) -> None:
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"cf": {"dim": 8}}), encoding="utf-8")

    code, _, err = run(capsys, "train", "--config", str(config), "--data", str(tmp_path), "--out", str(tmp_path / "run"))

    assert code == 1
    assert "Invalid run config: cf:" in err
