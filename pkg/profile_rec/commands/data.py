from __future__ import annotations

import argparse
import logging
import shutil
from pathlib import Path

from profile_rec.commands.utils import (
    apply_updates,
    emit_json,
    explicit_flags,
    load_corpora,
    parse_seed,
    read_json,
    validate_model,
    write_json,
)
from profile_rec.data_access import (
    ITEMS_FILE,
    USERS_FILE,
    CorpusStore,
    write_interactions,
    write_manifest,
    write_vocab,
)
from profile_rec.models import SplitName, SyntheticSpec
from profile_rec.services.preprocessing import (
    dedupe_interactions,
    filter_ratings,
    kcore_filter,
    parse_ratios,
    split_interactions,
)
from profile_rec.services.synthetic import generate
from profile_rec.services.tokenizer import build_vocab

logger = logging.getLogger(__name__)

TOPICS_FILE = "topics.json"


def run_prepare(args: argparse.Namespace) -> int:
    store = CorpusStore(args.data)
    out = CorpusStore(args.out or args.data)
    interactions = store.load_all_interactions()
    if args.min_rating is not None:
        interactions = filter_ratings(interactions, args.min_rating)
    interactions = kcore_filter(dedupe_interactions(interactions), args.kcore)
    train, val, test = split_interactions(interactions, parse_ratios(args.ratios), args.seed)

    written = []
    for name in (ITEMS_FILE, USERS_FILE):
        if out.root != store.root:
            out.root.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(store.path(name), out.path(name))
        written.append(out.path(name))
    for split, pairs in ((SplitName.train, train), (SplitName.val, val), (SplitName.test, test)):
        target = out.path(f"{split.value}.tsv")
        write_interactions(target, pairs)
        written.append(target)
    config = {
        "command": "prepare",
        "min_rating": args.min_rating,
        "kcore": args.kcore,
        "ratios": args.ratios,
        "seed": args.seed,
    }
    write_manifest(out.root, config, written)
    emit_json({"train": len(train), "val": len(val), "test": len(test)})
    return 0


def run_vocab(args: argparse.Namespace) -> int:
    corpora = load_corpora(args.data)
    texts = (
        profile
        for corpus in corpora
        for profiles in (corpus.item_profiles, corpus.user_profiles)
        for profile_set in profiles.values()
        for profile in profile_set.profiles
    )
    vocab = build_vocab(texts, args.size)
    write_vocab(args.out, vocab)
    logger.info("Wrote %d tokens to %s", vocab.size, args.out)
    emit_json({"size": vocab.size})
    return 0


SYNTH_FLAGS = {
    "topics": "topics",
    "users_per_topic": "users_per_topic",
    "items_per_topic": "items_per_topic",
    "words_per_topic": "words_per_topic",
    "interactions_per_user": "interactions_per_user",
    "noise_rate": "noise_rate",
    "diversified": "diversified",
    "popularity": "popularity",
    "seed": "seed",
}


def run_synth(args: argparse.Namespace) -> int:
    base = validate_model(SyntheticSpec, read_json(args.config) if args.config else {}, what="synthetic spec")
    spec = apply_updates(base, explicit_flags(args, SYNTH_FLAGS), what="synthetic spec")
    corpus = generate(spec)
    store = CorpusStore(args.out)
    written = store.save(
        records=corpus.records,
        item_profiles=corpus.item_profiles,
        user_ids=corpus.user_ids,
        user_profiles=corpus.user_profiles,
        splits=corpus.splits,
    )
    all_path = store.path("all.tsv")
    write_interactions(all_path, corpus.interactions)
    written.append(all_path)
    written.append(write_json(store.path(TOPICS_FILE), corpus.topics))
    write_manifest(store.root, spec.model_dump(mode="json"), written)
    emit_json({"users": len(corpus.user_ids), "items": len(corpus.records), "interactions": len(corpus.interactions)})
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    prepare = subparsers.add_parser("prepare", help="filter all.tsv and write train/val/test splits")
    prepare.add_argument("--data", type=Path, required=True, help="directory with items.jsonl, users.jsonl, all.tsv")
    prepare.add_argument("--out", type=Path, help="output directory (default: --data)")
    prepare.add_argument("--min-rating", type=float, default=None, help="keep ratings strictly above this")
    prepare.add_argument("--kcore", type=int, default=10)
    prepare.add_argument("--ratios", default="8:1:1")
    prepare.add_argument("--seed", type=parse_seed, default=0)
    prepare.set_defaults(handler=run_prepare)

    vocab = subparsers.add_parser("vocab", help="build a word vocabulary from profile texts")
    vocab.add_argument("--data", type=Path, nargs="+", required=True)
    vocab.add_argument("--out", type=Path, required=True)
    vocab.add_argument("--size", type=int, default=30000)
    vocab.set_defaults(handler=run_vocab)

    synth = subparsers.add_parser("synth", help="write a planted-topic synthetic corpus")
    synth.add_argument("--out", type=Path, required=True)
    synth.add_argument("--config", type=Path, help="JSON synthetic spec")
    synth.add_argument("--topics", type=int, default=argparse.SUPPRESS)
    synth.add_argument("--users-per-topic", type=int, default=argparse.SUPPRESS)
    synth.add_argument("--items-per-topic", type=int, default=argparse.SUPPRESS)
    synth.add_argument("--words-per-topic", type=int, default=argparse.SUPPRESS)
    synth.add_argument("--interactions-per-user", type=int, default=argparse.SUPPRESS)
    synth.add_argument("--noise-rate", type=float, default=argparse.SUPPRESS)
    synth.add_argument("--diversified", type=int, default=argparse.SUPPRESS)
    synth.add_argument("--popularity", choices=("uniform", "power-law"), default=argparse.SUPPRESS)
    synth.add_argument("--seed", type=parse_seed, default=argparse.SUPPRESS)
    synth.set_defaults(handler=run_synth)
