"""Command-line entry point: extract, report, fetch-articles."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from .celebrity import load_lexicon
from .config import ConfigError, PipelineConfig, load_config
from .culture import consensus_culture, load_atlas
from .fetch import ArticleClient, ClientConfig, FetchError, MissingPageError, OfflineError
from .indicators import DECADE, bucket_of, wikipedia_sitelinks
from .ingest import (
    DumpFormatError,
    HumanRecord,
    PlaceRecord,
    PropertyConfig,
    RecordsFileError,
    read_records,
    resolve_country,
    stream_entities,
    write_records,
)
from .models import Precision
from .reports import ReportInputError, ReportRunner

log = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 1
EXIT_PARSE_ABORT = 2
EXIT_INTERNAL = 3


class InputError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wigi",
        description="Biography gender-gap analytics over entity dumps",
    )
    parser.add_argument("--config", help="pipeline config file (key = value lines)")
    parser.add_argument("--threads", type=int, help="worker threads for parsing")
    parser.add_argument("--strict", action="store_true",
                        help="abort on the first malformed dump line")
    parser.add_argument("--offline", action="store_true", default=None,
                        help="never touch the network (default)")
    parser.add_argument("--online", dest="offline", action="store_false",
                        help="allow network fetches where a command supports them")
    parser.add_argument("--out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    extract = sub.add_parser("extract", help="stream a dump into the records CSV")
    extract.add_argument("--dump", help="dump path ('-' for standard input)")
    extract.add_argument("--records", help="records CSV to write")

    report = sub.add_parser("report", help="emit analysis CSVs (and figures)")
    report.add_argument("which", help="one of: %s, all" % ", ".join(
        ("tallies", "series", "wigi", "compare", "fit", "culture",
         "language", "uniqueness", "sizes", "celebrity")))
    report.add_argument("--records", help="records CSV to read")
    report.add_argument("--no-figures", dest="figures", action="store_false",
                        default=None, help="skip figure rendering")

    fetch = sub.add_parser("fetch-articles",
                           help="populate the article corpus for the celebrity probe")
    fetch.add_argument("--records", help="records CSV to read")
    fetch.add_argument("--user-agent", help="identifying user-agent string")
    return parser


def _merge_cli(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    if args.threads is not None:
        config.threads = args.threads
    if args.strict:
        config.strict = True
    if args.offline is not None:
        config.offline = args.offline
    if args.out:
        config.out_dir = args.out
    for name in ("dump", "records", "user_agent"):
        value = getattr(args, name, None)
        if value:
            setattr(config, name, value)
    figures = getattr(args, "figures", None)
    if figures is not None:
        config.figures = figures
    return config


def cmd_extract(config: PipelineConfig) -> int:
    if not config.dump:
        raise InputError("no dump path configured (use --dump or the config file)")
    properties = (PropertyConfig.load(config.property_config)
                  if config.property_config else PropertyConfig())

    humans: list[HumanRecord] = []
    places: dict[str, PlaceRecord] = {}

    def sink(record) -> None:
        if isinstance(record, HumanRecord):
            humans.append(record)
        else:
            places[record.id] = record

    if config.dump == "-":
        stats = stream_entities(sys.stdin.buffer, properties, sink,
                                strict=config.strict, threads=config.threads)
    else:
        path = Path(config.dump)
        if not path.is_file():
            raise InputError(f"dump not found: {path}")
        with open(path, "rb") as handle:
            stats = stream_entities(handle, properties, sink,
                                    strict=config.strict, threads=config.threads)

    resolved = 0
    unresolved = 0
    enriched: list[HumanRecord] = []
    from dataclasses import replace
    for record in humans:
        country = resolve_country(record, places)
        if country is not None:
            resolved += 1
        elif record.place_of_birth is not None:
            unresolved += 1
        enriched.append(replace(record, country=country))

    atlas = load_atlas(config.resolved_entity_atlas(), config.resolved_language_atlas())
    outcomes: Counter = Counter()
    for record in enriched:
        outcomes[consensus_culture(record, atlas)[1].value] += 1

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = Path(config.records)
    if not records_path.is_absolute() and records_path.parent == Path("."):
        records_path = out_dir / records_path
    count = write_records(enriched, records_path)

    report_path = out_dir / "extract_stats.jsonl"
    with open(report_path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({
            "stage": "ingest",
            "entities_seen": stats.entities_seen,
            "humans": stats.humans,
            "places": stats.places,
            "skipped": stats.skipped,
            "malformed": stats.malformed,
            "malformed_lines": stats.malformed_lines[:100],
            "gender_tie_flags": stats.gender_tie_flags,
        }, sort_keys=True) + "\n")
        handle.write(json.dumps({
            "stage": "country",
            "resolved": resolved,
            "unresolved_birthplaces": unresolved,
        }, sort_keys=True) + "\n")
        handle.write(json.dumps({
            "stage": "culture",
            "outcomes": dict(sorted(outcomes.items())),
        }, sort_keys=True) + "\n")

    log.info("wrote %d records to %s", count, records_path)
    return 0


def cmd_report(config: PipelineConfig, which: str) -> int:
    records_path = Path(config.records)
    if not records_path.is_file():
        alt = Path(config.out_dir) / records_path
        if alt.is_file():
            records_path = alt
        else:
            raise InputError(f"records file not found: {config.records}")
    records = read_records(records_path)
    config.records = str(records_path)
    runner = ReportRunner(records, config, config.out_dir)
    runner.run(which)
    return 0


def cmd_fetch_articles(config: PipelineConfig) -> int:
    if not config.corpus_dir:
        raise InputError("fetch-articles requires corpus_dir")
    records_path = Path(config.records)
    if not records_path.is_file():
        raise InputError(f"records file not found: {config.records}")
    lexicon = load_lexicon(config.resolved_lexicon(),
                           preferred_wiki=config.preferred_wiki)
    client = ArticleClient(ClientConfig(
        cache_dir=config.corpus_dir,
        user_agent=config.user_agent,
        offline=config.offline,
        suffix=".txt",
    ))
    fetched = missing = 0
    for record in read_records(records_path):
        if record.birth is None or record.birth.precision is not Precision.YEAR:
            continue
        decade = bucket_of(record.birth.year, DECADE)
        if not config.celebrity_start <= decade <= config.celebrity_end:
            continue
        links = wikipedia_sitelinks(record)
        for wiki in lexicon.terms:
            if wiki not in links:
                continue
            try:
                client.fetch_article(wiki, record.id)
                fetched += 1
            except MissingPageError:
                missing += 1
            break
    log.info("fetched %d articles (%d missing)", fetched, missing)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else load_config(None)
        config = _merge_cli(config, args)
        if args.command == "extract":
            return cmd_extract(config)
        if args.command == "report":
            return cmd_report(config, args.which)
        if args.command == "fetch-articles":
            return cmd_fetch_articles(config)
        parser.error(f"unknown command {args.command!r}")
    except DumpFormatError as exc:
        log.error("parse abort: %s", exc)
        return EXIT_PARSE_ABORT
    except (InputError, ConfigError, ReportInputError, RecordsFileError,
            OfflineError, FetchError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT_ERROR
    except Exception:  # pragma: no cover - defensive
        log.exception("internal error")
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
