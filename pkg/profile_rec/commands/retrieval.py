from __future__ import annotations

import argparse
from pathlib import Path

from profile_rec.commands.utils import emit_json, read_topics
from profile_rec.data_access import CorpusStore, load_encoder, read_store, read_vocab, write_store
from profile_rec.errors import DataError
from profile_rec.models import EntityKind
from profile_rec.services.reports import demo_shift
from profile_rec.services.retrieval import ItemRanker, embed_entities, recommend
from profile_rec.services.tokenizer import ProfileTokenizer


def _tokenizer(args: argparse.Namespace):
    encoder = load_encoder(args.checkpoint)
    return encoder, ProfileTokenizer(read_vocab(args.vocab), encoder.config.max_len)


def run_embed(args: argparse.Namespace) -> int:
    encoder, tokenizer = _tokenizer(args)
    corpus = CorpusStore(args.data).load()
    kind = EntityKind(args.kind)
    if kind is EntityKind.user:
        profiles, ids = corpus.user_profiles, corpus.dataset.users
    else:
        profiles, ids = corpus.item_profiles, corpus.dataset.items
    store = embed_entities(encoder, tokenizer, profiles, args.profile_index, kind, entity_ids=ids)
    write_store(args.out, store)
    emit_json({"kind": kind.value, "count": len(store), "dim": store.dim})
    return 0


def run_recommend(args: argparse.Namespace) -> int:
    users = read_store(args.users)
    items = read_store(args.items)
    dataset = CorpusStore(args.data).load().dataset if args.data is not None else None
    ranker = ItemRanker(items)
    results = []
    for user_id in args.user or list(users.ids):
        exclusions = dataset.user_neighbors.get(user_id, frozenset()) if dataset is not None else ()
        ranked = recommend(user_id, args.k, users, items, exclusions, ranker=ranker)
        results.append(
            {"user_id": user_id, "items": [{"item_id": e.item_id, "score": e.score} for e in ranked.items]}
        )
    emit_json(results)
    return 0


def _read_text(path: Path) -> str:
    try:
        text = path.read_text(encoding="utf-8").strip()
    except FileNotFoundError:
        raise DataError(f"File not found: {path}.") from None
    except UnicodeDecodeError:
        raise DataError(f"{path.name}: invalid UTF-8.") from None
    if not text:
        raise DataError(f"Profile file {path.name} is empty.")
    return text


def run_demo_shift(args: argparse.Namespace) -> int:
    encoder, tokenizer = _tokenizer(args)
    items = read_store(args.items)
    exclusions: frozenset[str] = frozenset()
    if args.exclude_user is not None:
        if args.data is None:
            raise DataError("--exclude-user needs --data for the user's history.")
        exclusions = CorpusStore(args.data).load().dataset.user_neighbors.get(args.exclude_user, frozenset())
    report = demo_shift(
        encoder,
        tokenizer,
        _read_text(args.user_profile_before),
        _read_text(args.after),
        items,
        args.k,
        exclusions=exclusions,
        topics=read_topics(args.topics),
    )
    emit_json(report.as_dict())
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    embed = subparsers.add_parser("embed", help="encode one profile index of every user or item")
    embed.add_argument("--checkpoint", type=Path, required=True)
    embed.add_argument("--vocab", type=Path, required=True)
    embed.add_argument("--data", type=Path, required=True)
    embed.add_argument("--kind", choices=("user", "item"), required=True)
    embed.add_argument("--profile-index", type=int, default=0)
    embed.add_argument("--out", type=Path, required=True)
    embed.set_defaults(handler=run_embed)

    recommend_parser = subparsers.add_parser("recommend", help="top-k items by cosine similarity")
    recommend_parser.add_argument("--users", type=Path, required=True)
    recommend_parser.add_argument("--items", type=Path, required=True)
    recommend_parser.add_argument("--user", action="append", help="user id (repeatable; default: all)")
    recommend_parser.add_argument("--data", type=Path, help="data directory whose train split is excluded")
    recommend_parser.add_argument("--k", type=int, default=10)
    recommend_parser.set_defaults(handler=run_recommend)

    shift = subparsers.add_parser("demo-shift", help="compare top-k lists for two profiles of one user")
    shift.add_argument("--checkpoint", type=Path, required=True)
    shift.add_argument("--vocab", type=Path, required=True)
    shift.add_argument("--user-profile-before", type=Path, required=True)
    shift.add_argument("--after", type=Path, required=True)
    shift.add_argument("--items", type=Path, required=True)
    shift.add_argument("--k", type=int, default=5)
    shift.add_argument("--topics", type=Path, help="topics.json written by synth")
    shift.add_argument("--exclude-user", help="exclude this user's train items")
    shift.add_argument("--data", type=Path)
    shift.set_defaults(handler=run_demo_shift)
