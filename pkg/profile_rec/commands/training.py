from __future__ import annotations

import argparse
import logging
from pathlib import Path

import torch

from profile_rec.commands.utils import (
    apply_updates,
    emit_json,
    explicit_flags,
    load_corpora,
    parse_seed,
    read_json,
    show_progress,
    validate_model,
    write_json,
)
from profile_rec.data_access import (
    CorpusStore,
    TrainingLog,
    read_store,
    read_vocab,
    save_cf,
    save_encoder,
    write_manifest,
    write_vocab,
)
from profile_rec.errors import TrainingAborted, UsageError
from profile_rec.models import CFConfig, Corpus, MetricsReport, RunConfig, RunSummary, SplitName
from profile_rec.networks.encoder import TextEncoder
from profile_rec.services.evaluation import evaluate_multi_profile
from profile_rec.services.graph_cf import train_cf
from profile_rec.services.tokenizer import ProfileTokenizer, build_vocab
from profile_rec.services.training import Trainer, restrict_augmentation

logger = logging.getLogger(__name__)

BEST_CHECKPOINT = "best.ezrc"
VOCAB_FILE = "vocab.txt"
SUMMARY_FILE = "summary.json"
RESOLVED_CONFIG_FILE = "config.json"
EVAL_CUTOFFS = (10, 20)

TRAIN_FLAGS = {
    "temperature": "temperature",
    "mlm_weight": "mlm_weight",
    "mask_ratio": "mask_ratio",
    "learning_rate": "learning_rate",
    "epochs": "epochs",
    "max_steps": "max_steps",
    "batch_size": "batch_size",
    "eval_interval": "eval_interval",
    "objective": "objective",
    "augmentation_count": "augmentation_count",
}
ENCODER_FLAGS = {"preset": "preset", "max_len": "max_len", "norm_style": "norm_style"}
CF_FLAGS = {
    "backbone": "backbone",
    "dim": "dim",
    "layers": "layers",
    "learning_rate": "learning_rate",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "alignment_weight": "alignment_weight",
    "alignment_temperature": "alignment_temperature",
    "seed": "seed",
}


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    config = validate_model(RunConfig, read_json(args.config) if args.config else {}, what="run config")
    updates: dict[str, object] = {}
    if args.data:
        updates["data"] = args.data
    if args.out is not None:
        updates["output_dir"] = args.out
    for dest in ("seed", "vocab_size"):
        if dest in vars(args):
            updates[dest] = getattr(args, dest)
    config = apply_updates(config, updates, what="run config")
    config = config.model_copy(
        update={
            "train": apply_updates(config.train, explicit_flags(args, TRAIN_FLAGS), what="train config"),
            "encoder": apply_updates(config.encoder, explicit_flags(args, ENCODER_FLAGS), what="encoder config"),
        }
    )
    if not config.data:
        raise UsageError("At least one data directory is required (--data or config 'data').")
    return config.seeded()


def available_augmentation(corpora: list[Corpus]) -> int:
    counts = [
        profile_set.diversified_count
        for corpus in corpora
        for profiles in (corpus.user_profiles, corpus.item_profiles)
        for profile_set in profiles.values()
    ]
    return min(counts, default=0)


def final_evaluation(
    encoder: TextEncoder, tokenizer: ProfileTokenizer, corpora: list[Corpus]
) -> MetricsReport | None:
    """Test-split rounds over profile pairs, averaged across corpora round by round."""
    tested = [corpus for corpus in corpora if corpus.dataset.test]
    if not tested:
        return None
    t = available_augmentation(tested)
    reports = [
        evaluate_multi_profile(
            encoder,
            tokenizer,
            corpus.user_profiles,
            corpus.item_profiles,
            corpus.dataset,
            SplitName.test,
            EVAL_CUTOFFS,
            t,
        )
        for corpus in tested
    ]
    rounds = [
        {key: sum(report.rounds[index][key] for report in reports) / len(reports) for key in first}
        for index, first in enumerate(reports[0].rounds)
    ]
    return MetricsReport.from_rounds(rounds)


def run_train(args: argparse.Namespace) -> int:
    config = resolve_run_config(args)
    if args.workers is None:
        torch.set_num_threads(config.workers)
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    corpora = load_corpora(config.data)

    if args.vocab is not None:
        vocab = read_vocab(args.vocab)
    else:
        texts = (
            profile
            for corpus in corpora
            for profiles in (corpus.item_profiles, corpus.user_profiles)
            for profile_set in profiles.values()
            for profile in profile_set.profiles
        )
        vocab = build_vocab(texts, config.vocab_size)
    encoder_config = config.encoder.resolve(vocab.size)
    log = TrainingLog(out)
    trainer = Trainer(
        config.train,
        encoder_config,
        vocab,
        dtype=torch.float64 if args.float64 else torch.float32,
        show_progress=show_progress(args),
        on_report=log.report,
        on_validation=log.validation,
    )

    exit_code = 0
    try:
        result = trainer.train(corpora)
    except TrainingAborted as exc:
        logger.error("%s Keeping the last good checkpoint.", exc.detail)
        result = exc.result
        exit_code = exc.exit_code

    vocab_path = out / VOCAB_FILE
    write_vocab(vocab_path, vocab)
    checkpoint_path = out / BEST_CHECKPOINT
    save_encoder(checkpoint_path, result.encoder, best_step=result.best_step)
    written = [vocab_path, checkpoint_path, log.reports_path, log.validations_path]
    resolved = config.model_dump(mode="json")
    written.append(write_json(out / RESOLVED_CONFIG_FILE, resolved))

    if exit_code == 0:
        restricted = [restrict_augmentation(corpus, config.train.augmentation_count) for corpus in corpora]
        report = final_evaluation(result.encoder, trainer.tokenizer, restricted)
        if report is None:
            logger.warning("No test split; skipping %s", SUMMARY_FILE)
        else:
            summary = RunSummary(
                preset=config.encoder.preset.value if config.encoder.preset else "custom",
                augmentation_count=available_augmentation(restricted),
                objective=config.train.objective,
                metrics=report,
            )
            written.append(write_json(out / SUMMARY_FILE, summary.model_dump(mode="json")))
        emit_json(
            {
                "best_step": result.best_step,
                "val": result.best_metrics,
                "test": report.mean if report is not None else None,
            }
        )
    write_manifest(out, resolved, written)
    return exit_code


def run_train_cf(args: argparse.Namespace) -> int:
    base = validate_model(CFConfig, read_json(args.config) if args.config else {}, what="CF config")
    config = apply_updates(base, explicit_flags(args, CF_FLAGS), what="CF config")
    corpus = CorpusStore(args.data).load()
    if (args.user_text is None) != (args.item_text is None):
        raise UsageError("--user-text and --item-text must be given together.")
    user_text = read_store(args.user_text) if args.user_text is not None else None
    item_text = read_store(args.item_text) if args.item_text is not None else None

    exit_code = 0
    try:
        result = train_cf(
            corpus.dataset,
            config,
            user_text,
            item_text,
            dtype=torch.float64 if args.float64 else torch.float32,
            show_progress=show_progress(args),
        )
    except TrainingAborted as exc:
        logger.error("%s Keeping the last good checkpoint.", exc.detail)
        result = exc.result
        exit_code = exc.exit_code

    args.out.mkdir(parents=True, exist_ok=True)
    checkpoint_path = args.out / "cf.ezrc"
    save_cf(checkpoint_path, result.model, result.adjacency.user_ids, result.adjacency.item_ids)
    metrics = {
        "backbone": config.backbone.value,
        "enhanced": result.model.enhanced,
        "best_epoch": result.best_epoch,
        "val": result.val_metrics,
        "test": result.test_metrics,
        "aborted": exit_code != 0,
    }
    written = [checkpoint_path, write_json(args.out / "metrics.json", metrics)]
    write_manifest(args.out, config.model_dump(mode="json"), written)
    emit_json(metrics)
    return exit_code


def register(subparsers: argparse._SubParsersAction) -> None:
    train = subparsers.add_parser("train", help="train the text encoder")
    train.add_argument("--config", type=Path, help="JSON run config")
    train.add_argument("--data", type=Path, nargs="+", help="one or more prepared data directories")
    train.add_argument("--out", type=Path, help="run directory")
    train.add_argument("--vocab", type=Path, help="existing vocabulary file")
    train.add_argument("--vocab-size", type=int, default=argparse.SUPPRESS)
    train.add_argument("--seed", type=parse_seed, default=argparse.SUPPRESS)
    train.add_argument("--preset", choices=("tiny", "small", "base", "large"), default=argparse.SUPPRESS)
    train.add_argument("--max-len", type=int, default=argparse.SUPPRESS)
    train.add_argument("--norm-style", choices=("pre", "post"), default=argparse.SUPPRESS)
    train.add_argument("--temperature", type=float, default=argparse.SUPPRESS)
    train.add_argument("--mlm-weight", type=float, default=argparse.SUPPRESS)
    train.add_argument("--mask-ratio", type=float, default=argparse.SUPPRESS)
    train.add_argument("--lr", dest="learning_rate", type=float, default=argparse.SUPPRESS)
    train.add_argument("--epochs", type=int, default=argparse.SUPPRESS)
    train.add_argument("--max-steps", type=int, default=argparse.SUPPRESS)
    train.add_argument("--batch-size", type=int, default=argparse.SUPPRESS)
    train.add_argument("--eval-interval", type=int, default=argparse.SUPPRESS)
    train.add_argument(
        "--objective",
        choices=("contrastive-paper", "contrastive-exclusive", "contrastive-standard", "bpr"),
        default=argparse.SUPPRESS,
        help="contrastive-exclusive is an alias of contrastive-paper",
    )
    train.add_argument("--augmentation-count", type=int, default=argparse.SUPPRESS)
    train.add_argument("--float64", action="store_true", help="train in 64-bit precision")
    train.set_defaults(handler=run_train)

    train_cf_parser = subparsers.add_parser("train-cf", help="train a graph CF backbone, optionally text-enhanced")
    train_cf_parser.add_argument("--data", type=Path, required=True)
    train_cf_parser.add_argument("--out", type=Path, required=True)
    train_cf_parser.add_argument("--config", type=Path, help="JSON CF config")
    train_cf_parser.add_argument("--user-text", type=Path, help="user EZEM store for alignment")
    train_cf_parser.add_argument("--item-text", type=Path, help="item EZEM store for alignment")
    train_cf_parser.add_argument("--backbone", choices=("lightgcn", "gccf"), default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--dim", type=int, default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--layers", type=int, default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--lr", dest="learning_rate", type=float, default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--epochs", type=int, default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--batch-size", type=int, default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--alignment-weight", type=float, default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--alignment-temperature", type=float, default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--seed", type=parse_seed, default=argparse.SUPPRESS)
    train_cf_parser.add_argument("--float64", action="store_true")
    train_cf_parser.set_defaults(handler=run_train_cf)
