"""Command-line pipeline: extract, count, correlate, growth, gen-fixture.

Every stage reads and writes plain files so long runs can be resumed
mid-pipeline, and every run drops a manifest.json recording input digests
and the exact configuration. Outputs are byte-identical across repeated
runs on identical inputs.

Exit codes: 0 success, 1 usage error, 2 input-format error,
3 data-insufficiency error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

from . import __version__
from .aggregate import (
    CountTable,
    RegistryMismatchError,
    growth_report,
    read_counts_json,
    tally,
    write_counts_csv,
    write_counts_json,
    write_unknown_csv,
)
from .bibliometrics import (
    SERIES_NAMES,
    DegenerateInputError,
    JcrFormatError,
    combined_top_overlap,
    join,
    read_jcr_csv,
    scatter_export,
    topn_sweep,
    write_correlations_csv,
    write_scatter_csv,
)
from .dump_reader import DumpParseError, DumpReader, WikiPage, filter_namespaces
from .extractor import PageScan, read_jsonl, scan_page, write_jsonl
from .fixtures import build_corpus, synthetic_jcr_rows, write_dump
from .registry import (
    JournalRegistry,
    RegistryLoadError,
    default_registry_text,
    load_default_registry,
    load_registry,
    near_misses,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_DATA = 3

DEFAULT_OVERLAP_K = 10
DEFAULT_OVERLAP_M = 19


class UsageError(Exception):
    pass


class InsufficientDataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# input plumbing -----------------------------------------------------


class _HashingReader:
    """Binary stream wrapper that digests bytes as they flow through, so
    large dumps are hashed in the same single pass that parses them."""

    def __init__(self, stream, path_label: str):
        self._stream = stream
        self._digest = hashlib.sha256()
        self.path_label = path_label
        self.bytes_read = 0

    def read(self, n: int = -1) -> bytes:
        chunk = self._stream.read(n)
        self._digest.update(chunk)
        self.bytes_read += len(chunk)
        return chunk

    def close(self) -> None:
        self._stream.close()

    def manifest_entry(self) -> dict:
        return {
            "path": self.path_label,
            "sha256": self._digest.hexdigest(),
            "bytes": self.bytes_read,
        }


def _open_dump_arg(dump_arg: str) -> tuple[DumpReader, _HashingReader]:
    if dump_arg == "-":
        stream = _HashingReader(sys.stdin.buffer, "-")
        return DumpReader(stream), stream
    stream = _HashingReader(open(dump_arg, "rb"), dump_arg)
    return DumpReader(stream, owns_stream=True), stream


def _file_manifest_entry(path_arg: str) -> dict:
    digest = hashlib.sha256()
    size = 0
    with open(path_arg, "rb") as fp:
        while True:
            chunk = fp.read(1 << 20)
            if not chunk:
                break
            digest.update(chunk)
            size += len(chunk)
    return {"path": path_arg, "sha256": digest.hexdigest(), "bytes": size}


def _load_registry_arg(registry_arg: str | None) -> tuple[JournalRegistry, dict]:
    if registry_arg is None:
        text = default_registry_text()
        return (
            load_default_registry(),
            {
                "path": "<builtin starter registry>",
                "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
                "bytes": len(text.encode("utf-8")),
            },
        )
    return load_registry(registry_arg), _file_manifest_entry(registry_arg)


def _parse_namespaces(spec: str) -> set[int] | None:
    if spec.strip().lower() == "all":
        return None
    try:
        return {int(part) for part in spec.split(",") if part.strip()}
    except ValueError:
        raise UsageError(f"bad --namespaces value {spec!r}") from None


def parse_sweep(spec: str) -> list[int]:
    """Sweep syntax: comma-separated sizes or inclusive ``lo..hi`` ranges,
    strictly increasing overall, each size at least 2."""
    values: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo_text, hi_text = part.split("..", 1)
                lo, hi = int(lo_text), int(hi_text)
                if hi < lo:
                    raise UsageError(f"empty sweep range {part!r}")
                values.extend(range(lo, hi + 1))
            else:
                values.append(int(part))
        except ValueError:
            raise UsageError(f"bad sweep entry {part!r}") from None
    if not values:
        raise UsageError("empty sweep specification")
    if values[0] < 2:
        raise UsageError("sweep sizes must be at least 2")
    for previous, current in zip(values, values[1:]):
        if current <= previous:
            raise UsageError("sweep sizes must be strictly increasing")
    return values


def _write_manifest(
    out_dir: Path, command: str, config: dict, inputs: dict, outputs: list[str]
) -> None:
    manifest = {
        "tool": "wikicite",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": sorted(outputs),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True, ensure_ascii=False)
        fp.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scan_stream(pages: Iterable[WikiPage], jobs: int) -> Iterator[PageScan]:
    """Per-page scans, optionally fanned out to worker processes. The
    submission window is bounded so memory stays streaming-sized, and
    results come back in page order."""
    if jobs <= 1:
        for page in pages:
            yield scan_page(page)
        return
    window: deque = deque()
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        for page in pages:
            if len(window) >= jobs * 4:
                yield window.popleft().result()
            window.append(executor.submit(scan_page, page))
        while window:
            yield window.popleft().result()


# subcommands --------------------------------------------------------


def cmd_extract(args) -> int:
    out_dir = _out_dir(args)
    namespaces = _parse_namespaces(args.namespaces)
    reader, dump_stream = _open_dump_arg(args.dump)
    pages = reader if namespaces is None else filter_namespaces(reader, namespaces)

    records_total = 0
    malformed_total = 0
    duplicate_params = 0
    pages_scanned = 0
    with open(out_dir / "citations.jsonl", "w", encoding="utf-8") as fp:
        for scan in _scan_stream(pages, args.jobs):
            pages_scanned += 1
            malformed_total += scan.malformed
            duplicate_params += scan.duplicate_params
            records_total += write_jsonl(scan.records, fp)

    summary = {
        "pages_seen": reader.pages_seen,
        "pages_skipped": reader.pages_skipped,
        "pages_scanned": pages_scanned,
        "records": records_total,
        "malformed_total": malformed_total,
        "duplicate_params": duplicate_params,
    }
    with open(out_dir / "extract_summary.json", "w", encoding="utf-8") as fp:
        json.dump(summary, fp, indent=2, sort_keys=True)
        fp.write("\n")
    _write_manifest(
        out_dir,
        "extract",
        {
            "dump": args.dump,
            "namespaces": args.namespaces,
            "jobs": args.jobs,
            "out": args.out,
        },
        {"dump": dump_stream.manifest_entry()},
        ["citations.jsonl", "extract_summary.json"],
    )
    print(
        f"extract: pages={pages_scanned} records={records_total} "
        f"malformed={malformed_total} skipped={reader.pages_skipped}",
        file=sys.stderr,
    )
    return EXIT_OK


def _count_table_from_args(args, registry: JournalRegistry) -> tuple[CountTable, dict]:
    """Build the count table from either a dump or an extract run."""
    inputs: dict = {}
    citations_path = getattr(args, "citations", None)
    if citations_path:
        malformed_total = 0
        summary_path = Path(citations_path).with_name("extract_summary.json")
        if summary_path.exists():
            with open(summary_path, "r", encoding="utf-8") as fp:
                malformed_total = int(json.load(fp).get("malformed_total", 0))
            inputs["extract_summary"] = _file_manifest_entry(str(summary_path))
        else:
            print(
                "count: no extract_summary.json next to the citations file; "
                "malformed_total set to 0",
                file=sys.stderr,
            )
        with open(citations_path, "r", encoding="utf-8") as fp:
            table = tally(read_jsonl(fp), registry, malformed_total=malformed_total)
        inputs["citations"] = _file_manifest_entry(citations_path)
        return table, inputs

    namespaces = _parse_namespaces(args.namespaces)
    reader, dump_stream = _open_dump_arg(args.dump)
    pages = reader if namespaces is None else filter_namespaces(reader, namespaces)
    malformed_total = 0

    def records():
        nonlocal malformed_total
        for scan in _scan_stream(pages, args.jobs):
            malformed_total += scan.malformed
            yield from scan.records

    table = replace(tally(records(), registry), malformed_total=malformed_total)
    inputs["dump"] = dump_stream.manifest_entry()
    return table, inputs


def _write_count_outputs(out_dir: Path, table: CountTable) -> list[str]:
    with open(out_dir / "counts.csv", "w", encoding="utf-8") as fp:
        write_counts_csv(table, fp)
    with open(out_dir / "counts.json", "w", encoding="utf-8") as fp:
        write_counts_json(table, fp)
    with open(out_dir / "unknown.csv", "w", encoding="utf-8") as fp:
        write_unknown_csv(table, fp)
    return ["counts.csv", "counts.json", "unknown.csv"]


def cmd_count(args) -> int:
    out_dir = _out_dir(args)
    registry, registry_entry = _load_registry_arg(args.registry)
    table, inputs = _count_table_from_args(args, registry)
    inputs["registry"] = registry_entry
    outputs = _write_count_outputs(out_dir, table)

    if args.near_miss:
        hits = near_misses(table.unknown, registry)
        with open(out_dir / "near_miss.csv", "w", encoding="utf-8") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(["unknown", "candidate"])
            writer.writerows(hits)
        outputs.append("near_miss.csv")

    _write_manifest(
        out_dir,
        "count",
        {
            "dump": args.dump,
            "citations": args.citations,
            "registry": args.registry,
            "namespaces": args.namespaces,
            "jobs": args.jobs,
            "near_miss": args.near_miss,
            "out": args.out,
        },
        inputs,
        outputs,
    )
    print(
        f"count: templates={table.template_total} journals={len(table.counts)} "
        f"excluded={table.excluded_count} unknown={len(table.unknown)} "
        f"malformed={table.malformed_total}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_correlate(args) -> int:
    out_dir = _out_dir(args)
    registry, registry_entry = _load_registry_arg(args.registry)

    inputs: dict = {"registry": registry_entry}
    outputs: list[str] = []
    if args.counts:
        with open(args.counts, "r", encoding="utf-8") as fp:
            table = read_counts_json(fp)
        inputs["counts"] = _file_manifest_entry(args.counts)
    else:
        table, dump_inputs = _count_table_from_args(args, registry)
        inputs.update(dump_inputs)
        outputs.extend(_write_count_outputs(out_dir, table))

    with open(args.jcr, "r", encoding="utf-8") as fp:
        jcr_rows = read_jcr_csv(fp)
    inputs["jcr"] = _file_manifest_entry(args.jcr)

    joined = join(table, jcr_rows, registry)
    n_joined = len(joined.metrics)
    if n_joined < 2:
        raise InsufficientDataError(
            f"join produced {n_joined} row(s); at least 2 journals must appear "
            "in both the count table and the journal-statistics file"
        )

    sweep = parse_sweep(args.sweep) if args.sweep else list(range(2, n_joined + 1))
    try:
        results = []
        for series_name in SERIES_NAMES:
            results.extend(topn_sweep(joined.metrics, series_name, sweep))
    except ValueError as exc:
        raise InsufficientDataError(str(exc)) from None

    overlap_k = args.overlap_k if args.overlap_k is not None else min(DEFAULT_OVERLAP_K, n_joined)
    overlap_m = args.overlap_m if args.overlap_m is not None else min(DEFAULT_OVERLAP_M, n_joined)
    try:
        overlap = combined_top_overlap(joined.metrics, overlap_k, overlap_m)
    except ValueError as exc:
        raise InsufficientDataError(str(exc)) from None

    with open(out_dir / "correlations.csv", "w", encoding="utf-8") as fp:
        write_correlations_csv(results, fp)
    with open(out_dir / "scatter.csv", "w", encoding="utf-8") as fp:
        write_scatter_csv(scatter_export(joined.metrics, args.labels), fp)
    with open(out_dir / "overlap.csv", "w", encoding="utf-8") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["k", "m", "overlap"])
        writer.writerow([overlap_k, overlap_m, overlap])
    with open(out_dir / "join_audit.json", "w", encoding="utf-8") as fp:
        json.dump(
            {
                "joined": n_joined,
                "wiki_only": joined.wiki_only,
                "jcr_only": joined.jcr_only,
                "jcr_excluded": joined.jcr_excluded,
            },
            fp,
            indent=2,
            sort_keys=True,
            ensure_ascii=False,
        )
        fp.write("\n")
    outputs.extend(["correlations.csv", "scatter.csv", "overlap.csv", "join_audit.json"])

    _write_manifest(
        out_dir,
        "correlate",
        {
            "counts": args.counts,
            "dump": args.dump,
            "jcr": args.jcr,
            "registry": args.registry,
            "namespaces": args.namespaces,
            "sweep": args.sweep,
            "labels": args.labels,
            "overlap_k": args.overlap_k,
            "overlap_m": args.overlap_m,
            "jobs": args.jobs,
            "out": args.out,
        },
        inputs,
        outputs,
    )
    print(
        f"correlate: joined={n_joined} sweep_points={len(sweep)} "
        f"overlap({overlap_k},{overlap_m})={overlap}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_growth(args) -> int:
    out_dir = _out_dir(args)
    dated: list[tuple[date, CountTable]] = []
    inputs: dict = {}
    for index, spec in enumerate(args.table):
        date_text, sep, path = spec.partition("=")
        if not sep or not path:
            raise UsageError(f"--table wants DATE=COUNTS_JSON, got {spec!r}")
        try:
            when = date.fromisoformat(date_text)
        except ValueError:
            raise UsageError(f"bad date {date_text!r} in {spec!r}") from None
        with open(path, "r", encoding="utf-8") as fp:
            dated.append((when, read_counts_json(fp)))
        inputs[f"table_{index}"] = _file_manifest_entry(path)

    try:
        series = growth_report(dated)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    with open(out_dir / "growth.csv", "w", encoding="utf-8") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["date", "template_total"])
        for when, total in series:
            writer.writerow([when.isoformat(), total])
    _write_manifest(
        out_dir,
        "growth",
        {"table": list(args.table), "out": args.out},
        inputs,
        ["growth.csv"],
    )
    print(f"growth: points={len(series)}", file=sys.stderr)
    return EXIT_OK


def cmd_gen_fixture(args) -> int:
    out_dir = _out_dir(args)
    corpus = build_corpus(
        page_count=args.pages,
        citations=args.citations,
        nested=args.nested,
        comment_decoys=args.decoys,
        malformed=args.malformed,
        no_journal=args.no_journal,
        seed=args.seed,
    )
    with open(out_dir / "dump.xml", "w", encoding="utf-8") as fp:
        write_dump(corpus.pages, fp)
    with open(out_dir / "truth.json", "w", encoding="utf-8") as fp:
        json.dump(corpus.truth.as_json_dict(), fp, indent=2, sort_keys=True)
        fp.write("\n")
    with open(out_dir / "registry.tsv", "w", encoding="utf-8") as fp:
        fp.write(default_registry_text())

    registry = load_default_registry()
    scored = sorted(registry.canonical - registry.exclusions)
    with open(out_dir / "jcr.csv", "w", encoding="utf-8") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["journal", "total_citations", "impact_factor", "articles"])
        for row in synthetic_jcr_rows(scored, seed=args.seed):
            writer.writerow([row[0], row[1], repr(row[2]), row[3]])

    _write_manifest(
        out_dir,
        "gen-fixture",
        {
            "pages": args.pages,
            "citations": args.citations,
            "nested": args.nested,
            "decoys": args.decoys,
            "malformed": args.malformed,
            "no_journal": args.no_journal,
            "seed": args.seed,
            "out": args.out,
        },
        {},
        ["dump.xml", "truth.json", "registry.tsv", "jcr.csv"],
    )
    print(
        f"gen-fixture: pages={corpus.truth.page_count} "
        f"citations={corpus.truth.citations_total}",
        file=sys.stderr,
    )
    return EXIT_OK


# wiring -------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(
        prog="wikicite",
        description="Extract journal citations from MediaWiki XML dumps and "
        "compare per-journal counts against journal statistics.",
    )
    parser.add_argument("--version", action="version", version=f"wikicite {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add_dump(p, required=True):
        p.add_argument(
            "--dump",
            required=required,
            help="path to an uncompressed XML export dump, or - for stdin",
        )
        p.add_argument(
            "--namespaces",
            default="0",
            help="comma-separated namespace ids to keep, or 'all' (default: 0)",
        )
        p.add_argument(
            "--jobs",
            type=int,
            default=1,
            help="worker processes for page scanning (default: 1)",
        )

    def add_registry(p):
        p.add_argument(
            "--registry",
            default=None,
            help="journal registry file (default: built-in starter registry)",
        )

    p_extract = sub.add_parser("extract", help="pull citation records out of a dump")
    add_dump(p_extract)
    p_extract.add_argument("--out", required=True, help="output directory")
    p_extract.set_defaults(func=cmd_extract)

    p_count = sub.add_parser("count", help="tally citations per canonical journal")
    add_dump(p_count, required=False)
    p_count.add_argument(
        "--citations", default=None, help="citations.jsonl from a previous extract run"
    )
    add_registry(p_count)
    p_count.add_argument(
        "--near-miss",
        action="store_true",
        help="also write near_miss.csv with curation hints for unknowns",
    )
    p_count.add_argument("--out", required=True, help="output directory")
    p_count.set_defaults(func=cmd_count)

    p_corr = sub.add_parser(
        "correlate", help="rank-correlate wiki counts against journal statistics"
    )
    add_dump(p_corr, required=False)
    p_corr.add_argument(
        "--counts", default=None, help="counts.json from a previous count run"
    )
    add_registry(p_corr)
    p_corr.add_argument(
        "--jcr",
        required=True,
        help="CSV of journal,total_citations,impact_factor,articles",
    )
    p_corr.add_argument(
        "--sweep",
        default=None,
        help="sizes for the top-N sweep, e.g. '2..10' or '10,20,50..60' "
        "(default: 2..N over all joined journals)",
    )
    p_corr.add_argument(
        "--labels",
        type=int,
        default=100,
        help="label budget for the scatter export (default: 100)",
    )
    p_corr.add_argument("--overlap-k", type=int, default=None)
    p_corr.add_argument("--overlap-m", type=int, default=None)
    p_corr.add_argument("--out", required=True, help="output directory")
    p_corr.set_defaults(func=cmd_correlate)

    p_growth = sub.add_parser(
        "growth", help="template-total series across dated count tables"
    )
    p_growth.add_argument(
        "--table",
        action="append",
        required=True,
        metavar="DATE=COUNTS_JSON",
        help="dated count table, repeatable, dates strictly increasing",
    )
    p_growth.add_argument("--out", required=True, help="output directory")
    p_growth.set_defaults(func=cmd_growth)

    p_gen = sub.add_parser(
        "gen-fixture", help="generate a synthetic dump with known ground truth"
    )
    p_gen.add_argument("--pages", type=int, default=500)
    p_gen.add_argument("--citations", type=int, default=1000)
    p_gen.add_argument("--nested", type=int, default=50)
    p_gen.add_argument("--decoys", type=int, default=30)
    p_gen.add_argument("--malformed", type=int, default=20)
    p_gen.add_argument("--no-journal", type=int, default=30, dest="no_journal")
    p_gen.add_argument("--seed", type=int, default=20070402)
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=cmd_gen_fixture)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError("a subcommand is required (see --help)")
        if args.command in ("count", "correlate"):
            staged = getattr(args, "citations", None) or getattr(args, "counts", None)
            if args.dump is None and staged is None:
                raise UsageError(f"{args.command} needs --dump or a prior stage's output")
            if args.dump is not None and staged is not None:
                raise UsageError(f"{args.command} takes --dump or {staged!r}, not both")
        return args.func(args)
    except UsageError as exc:
        print(f"wikicite: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InsufficientDataError, DegenerateInputError) as exc:
        print(f"wikicite: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DumpParseError, RegistryLoadError, JcrFormatError, RegistryMismatchError, ValueError) as exc:
        print(f"wikicite: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"wikicite: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
