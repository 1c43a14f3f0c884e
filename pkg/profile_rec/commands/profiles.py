from __future__ import annotations

import argparse
import asyncio
import logging
from pathlib import Path

from profile_rec.commands.utils import add_client_flags, client_config, emit_json, parse_seed
from profile_rec.data_access import CorpusStore, progress_file, write_manifest
from profile_rec.models import EntityKind, ProfileSet
from profile_rec.services.llm_client import ChatClient, build_client
from profile_rec.services.profiles import ProfileDiversifier, ProfileGenerator
from profile_rec.services.prompts import DEFAULT_HISTORY_ITEMS

logger = logging.getLogger(__name__)

KIND_CHOICES = ("user", "item", "both")


def _kinds(value: str) -> list[EntityKind]:
    if value == "both":
        return [EntityKind.item, EntityKind.user]
    return [EntityKind(value)]


async def _diversify(args: argparse.Namespace, client: ChatClient, concurrency: int) -> dict[str, object]:
    store = CorpusStore(args.data)
    corpus = store.load()
    progress_dir = args.progress_dir or store.root
    progress_dir.mkdir(parents=True, exist_ok=True)
    summary: dict[str, object] = {}
    written: list[Path] = []
    try:
        for kind in _kinds(args.kind):
            profiles = corpus.user_profiles if kind is EntityKind.user else corpus.item_profiles
            progress_path = progress_file(progress_dir, kind)
            diversifier = ProfileDiversifier(
                client, kind, concurrency=concurrency, progress_path=progress_path
            )
            outcome = await diversifier.diversify(profiles, args.t, seed=args.seed)
            written.append(store.save_profiles(kind, outcome.profiles))
            written.append(progress_path)
            summary[kind.value] = {"calls": outcome.calls, "failed": outcome.failed}
    finally:
        await client.aclose()
    summary["network_calls"] = getattr(client, "network_calls", 0)
    write_manifest(store.root, {"command": "diversify", "kind": args.kind, "t": args.t, "seed": args.seed}, written)
    return summary


def run_diversify(args: argparse.Namespace) -> int:
    config = client_config(args)
    client = build_client(config)
    emit_json(asyncio.run(_diversify(args, client, config.concurrency)))
    return 0


async def _generate(args: argparse.Namespace, client: ChatClient, concurrency: int) -> dict[str, object]:
    store = CorpusStore(args.data)
    corpus = store.load()
    generator = ProfileGenerator(client, concurrency=concurrency)
    summary: dict[str, object] = {}
    written: list[Path] = []
    item_profiles: dict[str, ProfileSet] = dict(corpus.item_profiles)
    try:
        for kind in _kinds(args.kind):
            if kind is EntityKind.item:
                outcome = await generator.generate_items(corpus.records)
                item_profiles.update(outcome.profiles)
            else:
                outcome = await generator.generate_users(
                    corpus.dataset,
                    corpus.records,
                    item_profiles,
                    seed=args.seed,
                    max_items=args.history_items,
                )
            written.append(store.save_profiles(kind, outcome.profiles))
            summary[kind.value] = {
                "generated": len(outcome.profiles),
                "calls": outcome.calls,
                "failed": outcome.failed,
            }
    finally:
        await client.aclose()
    write_manifest(store.root, {"command": "generate-profiles", "kind": args.kind, "seed": args.seed}, written)
    return summary


def run_generate_profiles(args: argparse.Namespace) -> int:
    config = client_config(args)
    client = build_client(config)
    emit_json(asyncio.run(_generate(args, client, config.concurrency)))
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    diversify = subparsers.add_parser("diversify", help="iteratively rephrase profiles with an LLM")
    diversify.add_argument("--data", type=Path, required=True)
    diversify.add_argument("--kind", choices=KIND_CHOICES, default="both")
    diversify.add_argument("--t", type=int, default=3, help="diversification iterations")
    diversify.add_argument("--progress-dir", type=Path, help="where progress-<kind>.jsonl lives (default: --data)")
    diversify.add_argument("--seed", type=parse_seed, default=None)
    add_client_flags(diversify)
    diversify.set_defaults(handler=run_diversify)

    generate = subparsers.add_parser("generate-profiles", help="write original profiles with an LLM")
    generate.add_argument("--data", type=Path, required=True)
    generate.add_argument("--kind", choices=KIND_CHOICES, default="both")
    generate.add_argument("--history-items", type=int, default=DEFAULT_HISTORY_ITEMS)
    generate.add_argument("--seed", type=parse_seed, default=0)
    add_client_flags(generate)
    generate.set_defaults(handler=run_generate_profiles)
