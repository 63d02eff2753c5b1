"""Fold citation records into per-journal counts.

Count tables are mergeable partial results: ``merge`` is a pointwise sum and
is associative and commutative with the empty table as identity, so any
map-reduce plan over page shards gives the same table as a single pass.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from datetime import date
from typing import IO, Iterable

from .dump_reader import WikiPage
from .extractor import CitationRecord, scan_page
from .registry import JournalRegistry, ResolutionKind

DEFAULT_UNKNOWN_CAP = 100_000

COUNTS_FORMAT = "wikicite-counts-v1"


class RegistryMismatchError(ValueError):
    """Tables built against different registries must not be merged."""


@dataclass(frozen=True)
class CountTable:
    """Per-journal tallies for one corpus (or one shard of it).

    ``template_total`` counts every citation template, including those with
    no journal parameter; ``unknown`` keeps unmatched journal strings
    verbatim for registry curation, spilling into ``unknown_overflow`` once
    the configured distinct-string cap is hit at ingest time.
    """

    counts: dict[str, int]
    excluded_count: int
    unknown: dict[str, int]
    unknown_overflow: int
    template_total: int
    malformed_total: int
    registry_fingerprint: str

    @property
    def no_journal_count(self) -> int:
        return (
            self.template_total
            - sum(self.counts.values())
            - self.excluded_count
            - sum(self.unknown.values())
            - self.unknown_overflow
        )

    @classmethod
    def empty(cls, registry_fingerprint: str) -> "CountTable":
        return cls(
            counts={},
            excluded_count=0,
            unknown={},
            unknown_overflow=0,
            template_total=0,
            malformed_total=0,
            registry_fingerprint=registry_fingerprint,
        )


def tally(
    records: Iterable[CitationRecord],
    registry: JournalRegistry,
    *,
    malformed_total: int = 0,
    unknown_cap: int = DEFAULT_UNKNOWN_CAP,
) -> CountTable:
    """Count records per canonical journal.

    Each record with a journal contributes to exactly one of the canonical
    counts, the excluded tally, or the unknown map; records without a journal
    parameter contribute to ``template_total`` only.
    """
    counts: dict[str, int] = {}
    unknown: dict[str, int] = {}
    excluded = 0
    overflow = 0
    total = 0
    for record in records:
        total += 1
        raw = record.journal_raw
        if raw is None:
            continue
        resolution = registry.resolve(raw)
        if resolution.kind is ResolutionKind.CANONICAL:
            counts[resolution.name] = counts.get(resolution.name, 0) + 1
        elif resolution.kind is ResolutionKind.EXCLUDED:
            excluded += 1
        elif raw in unknown:
            unknown[raw] += 1
        elif len(unknown) < unknown_cap:
            unknown[raw] = 1
        else:
            overflow += 1
    return CountTable(
        counts=counts,
        excluded_count=excluded,
        unknown=unknown,
        unknown_overflow=overflow,
        template_total=total,
        malformed_total=malformed_total,
        registry_fingerprint=registry.fingerprint,
    )


def tally_pages(
    pages: Iterable[WikiPage],
    registry: JournalRegistry,
    *,
    unknown_cap: int = DEFAULT_UNKNOWN_CAP,
) -> CountTable:
    """Scan and tally a page stream in a single pass."""
    malformed = [0]

    def records():
        for page in pages:
            scan = scan_page(page)
            malformed[0] += scan.malformed
            yield from scan.records

    table = tally(records(), registry, unknown_cap=unknown_cap)
    return replace(table, malformed_total=malformed[0])


def merge(a: CountTable, b: CountTable) -> CountTable:
    """Pointwise sum of two tables built against the same registry."""
    if a.registry_fingerprint != b.registry_fingerprint:
        raise RegistryMismatchError(
            "tables were built against different registries: "
            f"{a.registry_fingerprint[:12]} vs {b.registry_fingerprint[:12]}"
        )
    counts = dict(a.counts)
    for name, value in b.counts.items():
        counts[name] = counts.get(name, 0) + value
    unknown = dict(a.unknown)
    for name, value in b.unknown.items():
        unknown[name] = unknown.get(name, 0) + value
    return CountTable(
        counts=counts,
        excluded_count=a.excluded_count + b.excluded_count,
        unknown=unknown,
        unknown_overflow=a.unknown_overflow + b.unknown_overflow,
        template_total=a.template_total + b.template_total,
        malformed_total=a.malformed_total + b.malformed_total,
        registry_fingerprint=a.registry_fingerprint,
    )


def growth_report(
    dated_tables: Iterable[tuple[date, CountTable]]
) -> list[tuple[date, int]]:
    """(date, template_total) series; dates must be strictly increasing."""
    out: list[tuple[date, int]] = []
    previous: date | None = None
    for when, table in dated_tables:
        if previous is not None and when <= previous:
            raise ValueError(f"dates must be strictly increasing: {when} after {previous}")
        previous = when
        out.append((when, table.template_total))
    return out


# serialization ------------------------------------------------------


def to_json_dict(table: CountTable) -> dict:
    return {
        "format": COUNTS_FORMAT,
        "registry_fingerprint": table.registry_fingerprint,
        "template_total": table.template_total,
        "malformed_total": table.malformed_total,
        "excluded_count": table.excluded_count,
        "no_journal_count": table.no_journal_count,
        "unknown_overflow": table.unknown_overflow,
        "counts": dict(sorted(table.counts.items())),
        "unknown": dict(sorted(table.unknown.items())),
    }


def from_json_dict(obj) -> CountTable:
    if not isinstance(obj, dict) or obj.get("format") != COUNTS_FORMAT:
        raise ValueError(f"not a {COUNTS_FORMAT} document")
    try:
        table = CountTable(
            counts={str(k): int(v) for k, v in obj["counts"].items()},
            excluded_count=int(obj["excluded_count"]),
            unknown={str(k): int(v) for k, v in obj["unknown"].items()},
            unknown_overflow=int(obj.get("unknown_overflow", 0)),
            template_total=int(obj["template_total"]),
            malformed_total=int(obj["malformed_total"]),
            registry_fingerprint=str(obj["registry_fingerprint"]),
        )
    except (KeyError, AttributeError, TypeError) as exc:
        raise ValueError(f"corrupt count table: {exc}") from None
    if table.no_journal_count < 0:
        raise ValueError("corrupt count table: tallies exceed template_total")
    return table


def write_counts_json(table: CountTable, fp: IO[str]) -> None:
    json.dump(to_json_dict(table), fp, indent=2, sort_keys=True, ensure_ascii=False)
    fp.write("\n")


def read_counts_json(fp: IO[str]) -> CountTable:
    return from_json_dict(json.load(fp))


def write_counts_csv(table: CountTable, fp: IO[str]) -> None:
    """``journal,count`` rows, most-cited first, names breaking ties."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["journal", "count"])
    for name, value in sorted(table.counts.items(), key=lambda kv: (-kv[1], kv[0])):
        writer.writerow([name, value])


def write_unknown_csv(table: CountTable, fp: IO[str]) -> None:
    """Audit output of unmatched journal strings, most frequent first."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["journal_raw", "count"])
    for name, value in sorted(table.unknown.items(), key=lambda kv: (-kv[1], kv[0])):
        writer.writerow([name, value])
