from __future__ import annotations

import argparse
import sys
from pathlib import Path

from profile_rec.commands.utils import read_json, validate_model
from profile_rec.data_access import CorpusStore, load_encoder, read_store, read_vocab
from profile_rec.errors import UsageError
from profile_rec.models import MetricsReport, RunSummary, SplitName
from profile_rec.services.evaluation import evaluate_all_rank, evaluate_multi_profile, parse_cutoffs
from profile_rec.services.reports import format_table, report_scaling
from profile_rec.services.tokenizer import ProfileTokenizer

SUMMARY_FILE = "summary.json"


def run_evaluate(args: argparse.Namespace) -> int:
    cutoffs = parse_cutoffs(args.k)
    corpus = CorpusStore(args.data).load()
    split = SplitName(args.split)
    if args.checkpoint is not None:
        if args.vocab is None:
            raise UsageError("--checkpoint needs --vocab.")
        encoder = load_encoder(args.checkpoint)
        report = evaluate_multi_profile(
            encoder,
            ProfileTokenizer(read_vocab(args.vocab), encoder.config.max_len),
            corpus.user_profiles,
            corpus.item_profiles,
            corpus.dataset,
            split,
            cutoffs,
            args.rounds,
            include_original=args.include_original,
        )
    else:
        if args.users is None or args.items is None:
            raise UsageError("Give --users and --items stores, or --checkpoint and --vocab.")
        metrics = evaluate_all_rank(
            read_store(args.users), read_store(args.items), corpus.dataset, split, cutoffs
        )
        report = MetricsReport.from_rounds([metrics])
    sys.stdout.write(report.model_dump_json(indent=2) + "\n")
    return 0


def run_report_scaling(args: argparse.Namespace) -> int:
    summaries = []
    for run_dir in args.runs:
        path = run_dir / SUMMARY_FILE if run_dir.is_dir() else run_dir
        summaries.append(validate_model(RunSummary, read_json(path), what=f"run summary {path}"))
    sys.stdout.write(format_table(report_scaling(summaries)))
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    evaluate = subparsers.add_parser("evaluate", help="all-rank Recall@N / NDCG@N")
    evaluate.add_argument("--data", type=Path, required=True)
    evaluate.add_argument("--split", choices=("val", "test"), default="test")
    evaluate.add_argument("--k", default="10,20", help="comma-separated cutoffs")
    evaluate.add_argument("--users", type=Path, help="user EZEM store")
    evaluate.add_argument("--items", type=Path, help="item EZEM store")
    evaluate.add_argument("--checkpoint", type=Path, help="encoder checkpoint for multi-profile rounds")
    evaluate.add_argument("--vocab", type=Path)
    evaluate.add_argument("--rounds", type=int, default=3, help="diversified profile rounds t")
    evaluate.add_argument("--include-original", action="store_true", help="also average the original-profile round")
    evaluate.set_defaults(handler=run_evaluate)

    scaling = subparsers.add_parser("report-scaling", help="tab-separated scaling table from run directories")
    scaling.add_argument("runs", type=Path, nargs="+", help="run directories or summary.json files")
    scaling.set_defaults(handler=run_report_scaling)
