import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from wikicite.aggregate import read_counts_json, write_counts_json, CountTable
from wikicite.bibliometrics import combined_top_overlap, join, topn_sweep
from wikicite.cli import UsageError, main, parse_sweep
from wikicite.dump_reader import WikiPage
from wikicite.extractor import read_jsonl, scan_page
from wikicite.fixtures import build_corpus, dump_xml, write_dump
from wikicite.registry import load_default_registry


@pytest.fixture(scope="module")
def small_corpus():
    return build_corpus(
        page_count=40, citations=80, nested=6, comment_decoys=5, malformed=4,
        no_journal=5, seed=99,
    )


@pytest.fixture(scope="module")
def small_dump(small_corpus, tmp_path_factory):
    path = tmp_path_factory.mktemp("dump") / "dump.xml"
    with open(path, "w", encoding="utf-8") as fp:
        write_dump(small_corpus.pages, fp)
    return path


def read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


class TestExtract:
    def test_fixture_dump(self, small_dump, small_corpus, tmp_path):
        out = tmp_path / "out"
        assert main(["extract", "--dump", str(small_dump), "--out", str(out)]) == 0
        with open(out / "citations.jsonl", encoding="utf-8") as fp:
            records = list(read_jsonl(fp))
        assert len(records) == small_corpus.truth.citations_total
        summary = json.loads(read(out / "extract_summary.json"))
        assert summary["records"] == small_corpus.truth.citations_total
        assert summary["malformed_total"] == small_corpus.truth.malformed_total
        assert (out / "manifest.json").exists()

    def test_records_match_library_scan(self, small_dump, small_corpus, tmp_path):
        out = tmp_path / "out"
        main(["extract", "--dump", str(small_dump), "--out", str(out)])
        with open(out / "citations.jsonl", encoding="utf-8") as fp:
            records = list(read_jsonl(fp))
        expected = [
            r for page in small_corpus.pages for r in scan_page(page).records
        ]
        assert records == expected

    def test_empty_dump(self, tmp_path):
        dump = tmp_path / "empty.xml"
        dump.write_text(dump_xml([]), encoding="utf-8")
        out = tmp_path / "out"
        assert main(["extract", "--dump", str(dump), "--out", str(out)]) == 0
        assert read(out / "citations.jsonl") == ""
        summary = json.loads(read(out / "extract_summary.json"))
        assert summary["records"] == 0
        assert summary["malformed_total"] == 0

    def test_single_dangling_template(self, tmp_path):
        pages = [WikiPage("A", 0, "{{cite journal|journal=Nature}} {{cite journal|cut")]
        dump = tmp_path / "dump.xml"
        dump.write_text(dump_xml(pages), encoding="utf-8")
        out = tmp_path / "out"
        assert main(["extract", "--dump", str(dump), "--out", str(out)]) == 0
        summary = json.loads(read(out / "extract_summary.json"))
        assert summary["records"] == 1
        assert summary["malformed_total"] == 1

    def test_namespace_filter_default_zero(self, tmp_path):
        pages = [
            WikiPage("Article", 0, "{{cite journal|journal=Nature}}"),
            WikiPage("Talk:Article", 1, "{{cite journal|journal=Science}}"),
        ]
        dump = tmp_path / "dump.xml"
        dump.write_text(dump_xml(pages), encoding="utf-8")
        out0 = tmp_path / "ns0"
        main(["extract", "--dump", str(dump), "--out", str(out0)])
        with open(out0 / "citations.jsonl", encoding="utf-8") as fp:
            assert [r.journal_raw for r in read_jsonl(fp)] == ["Nature"]
        out_all = tmp_path / "all"
        main(["extract", "--dump", str(dump), "--namespaces", "all", "--out", str(out_all)])
        with open(out_all / "citations.jsonl", encoding="utf-8") as fp:
            assert [r.journal_raw for r in read_jsonl(fp)] == ["Nature", "Science"]

    def test_jobs_flag_gives_identical_output(self, small_dump, tmp_path):
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        main(["extract", "--dump", str(small_dump), "--out", str(serial)])
        main(["extract", "--dump", str(small_dump), "--jobs", "3", "--out", str(parallel)])
        assert read(serial / "citations.jsonl") == read(parallel / "citations.jsonl")

    def test_malformed_xml_exit_code(self, tmp_path):
        dump = tmp_path / "bad.xml"
        dump.write_text("<mediawiki><page><title>X</oops>", encoding="utf-8")
        assert main(["extract", "--dump", str(dump), "--out", str(tmp_path / "o")]) == 2

    def test_missing_dump_exit_code(self, tmp_path):
        missing = tmp_path / "nope.xml"
        assert main(["extract", "--dump", str(missing), "--out", str(tmp_path / "o")]) == 2

    def test_bad_namespaces_value_is_usage_error(self, small_dump, tmp_path):
        code = main(
            ["extract", "--dump", str(small_dump), "--namespaces", "articles",
             "--out", str(tmp_path / "o")]
        )
        assert code == 1

    def test_stdin_dump(self, tmp_path):
        pages = [WikiPage("A", 0, "{{cite journal|journal=Nature}}")]
        result = subprocess.run(
            [sys.executable, "-m", "wikicite.cli", "extract", "--dump", "-",
             "--out", str(tmp_path / "out")],
            input=dump_xml(pages).encode("utf-8"),
            capture_output=True,
        )
        assert result.returncode == 0, result.stderr
        with open(tmp_path / "out" / "citations.jsonl", encoding="utf-8") as fp:
            assert [r.journal_raw for r in read_jsonl(fp)] == ["Nature"]


class TestCount:
    def test_planted_table(self, small_dump, small_corpus, tmp_path):
        out = tmp_path / "out"
        assert main(["count", "--dump", str(small_dump), "--out", str(out)]) == 0
        with open(out / "counts.json", encoding="utf-8") as fp:
            table = read_counts_json(fp)
        truth = small_corpus.truth
        assert table.counts == truth.expected_counts
        assert table.excluded_count == truth.expected_excluded
        assert table.unknown == truth.expected_unknown
        assert table.template_total == truth.citations_total
        assert table.malformed_total == truth.malformed_total

    def test_citations_input_equals_dump_input(self, small_dump, tmp_path):
        extract_out = tmp_path / "extract"
        main(["extract", "--dump", str(small_dump), "--out", str(extract_out)])
        from_dump = tmp_path / "from_dump"
        from_jsonl = tmp_path / "from_jsonl"
        main(["count", "--dump", str(small_dump), "--out", str(from_dump)])
        main(
            ["count", "--citations", str(extract_out / "citations.jsonl"),
             "--out", str(from_jsonl)]
        )
        assert read(from_dump / "counts.json") == read(from_jsonl / "counts.json")
        assert read(from_dump / "counts.csv") == read(from_jsonl / "counts.csv")

    def test_missing_registry_exit_code(self, small_dump, tmp_path):
        code = main(
            ["count", "--dump", str(small_dump), "--registry",
             str(tmp_path / "missing.tsv"), "--out", str(tmp_path / "o")]
        )
        assert code == 2

    def test_requires_an_input(self, tmp_path):
        assert main(["count", "--out", str(tmp_path / "o")]) == 1

    def test_rejects_both_inputs(self, small_dump, tmp_path):
        code = main(
            ["count", "--dump", str(small_dump), "--citations", "x.jsonl",
             "--out", str(tmp_path / "o")]
        )
        assert code == 1

    def test_near_miss_report(self, tmp_path):
        pages = [WikiPage("A", 0, "{{cite journal|journal=Nature Genetics}}")]
        dump = tmp_path / "dump.xml"
        dump.write_text(dump_xml(pages), encoding="utf-8")
        out = tmp_path / "out"
        assert main(["count", "--dump", str(dump), "--near-miss", "--out", str(out)]) == 0
        content = read(out / "near_miss.csv")
        assert "Nature Genetics" in content


def _write_counts_and_jcr(tmp_path, n=10):
    """Synthetic pair of files over starter-registry journals."""
    registry = load_default_registry()
    names = sorted(registry.canonical - registry.exclusions)[:n]
    counts = {name: 5 * (i + 1) + (i % 3) for i, name in enumerate(names)}
    table = CountTable(
        counts=counts,
        excluded_count=0,
        unknown={},
        unknown_overflow=0,
        template_total=sum(counts.values()),
        malformed_total=0,
        registry_fingerprint=registry.fingerprint,
    )
    counts_path = tmp_path / "counts.json"
    with open(counts_path, "w", encoding="utf-8") as fp:
        write_counts_json(table, fp)
    jcr_path = tmp_path / "jcr.csv"
    with open(jcr_path, "w", encoding="utf-8") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["journal", "total_citations", "impact_factor", "articles"])
        for i, name in enumerate(names):
            writer.writerow([name, 1000 * (i + 2), 1.5 + 3 * ((i * 7) % 5), 100 + 13 * i])
    return table, counts_path, jcr_path, registry


class TestCorrelate:
    def test_matches_library_calls(self, tmp_path):
        table, counts_path, jcr_path, registry = _write_counts_and_jcr(tmp_path)
        out = tmp_path / "out"
        code = main(
            ["correlate", "--counts", str(counts_path), "--jcr", str(jcr_path),
             "--sweep", "2..10", "--out", str(out)]
        )
        assert code == 0

        with open(jcr_path, encoding="utf-8") as fp:
            from wikicite.bibliometrics import read_jcr_csv

            rows = read_jcr_csv(fp)
        joined = join(table, rows, registry)
        expected = []
        for series in ("total_citations", "impact_factor", "articles", "combined"):
            expected.extend(topn_sweep(joined.metrics, series, list(range(2, 11))))

        lines = read(out / "correlations.csv").splitlines()
        assert lines[0] == "series,n,tau,z,p_value"
        assert len(lines) == 1 + len(expected)
        for line, exp in zip(lines[1:], expected):
            series, n, tau, z, p = line.split(",")
            assert series == exp.series_name
            assert int(n) == exp.n
            assert float(tau) == exp.tau
            assert float(z) == exp.z
            assert float(p) == exp.p_value

        scatter_lines = read(out / "scatter.csv").splitlines()
        assert len(scatter_lines) == 1 + len(joined.metrics)
        k, m, overlap = read(out / "overlap.csv").splitlines()[1].split(",")
        assert int(overlap) == combined_top_overlap(
            joined.metrics, int(k), int(m)
        )

    def test_sweep_default_covers_all_sizes(self, tmp_path):
        _, counts_path, jcr_path, _ = _write_counts_and_jcr(tmp_path, n=6)
        out = tmp_path / "out"
        assert main(
            ["correlate", "--counts", str(counts_path), "--jcr", str(jcr_path),
             "--out", str(out)]
        ) == 0
        lines = read(out / "correlations.csv").splitlines()[1:]
        assert len(lines) == 4 * 5  # four series, N = 2..6

    def test_missing_jcr_flag_is_usage_error(self, tmp_path):
        _, counts_path, _, _ = _write_counts_and_jcr(tmp_path)
        code = main(["correlate", "--counts", str(counts_path), "--out", str(tmp_path / "o")])
        assert code == 1

    def test_too_few_joined_rows(self, tmp_path):
        registry = load_default_registry()
        table = CountTable(
            counts={"Nature": 3},
            excluded_count=0,
            unknown={},
            unknown_overflow=0,
            template_total=3,
            malformed_total=0,
            registry_fingerprint=registry.fingerprint,
        )
        counts_path = tmp_path / "counts.json"
        with open(counts_path, "w", encoding="utf-8") as fp:
            write_counts_json(table, fp)
        jcr_path = tmp_path / "jcr.csv"
        jcr_path.write_text(
            "journal,total_citations,impact_factor,articles\nNature,1000,2.0,10\n",
            encoding="utf-8",
        )
        code = main(
            ["correlate", "--counts", str(counts_path), "--jcr", str(jcr_path),
             "--out", str(tmp_path / "o")]
        )
        assert code == 3

    def test_sweep_beyond_join_size(self, tmp_path):
        _, counts_path, jcr_path, _ = _write_counts_and_jcr(tmp_path, n=5)
        code = main(
            ["correlate", "--counts", str(counts_path), "--jcr", str(jcr_path),
             "--sweep", "2..50", "--out", str(tmp_path / "o")]
        )
        assert code == 3

    def test_registry_mismatch_detected(self, tmp_path):
        _, counts_path, jcr_path, _ = _write_counts_and_jcr(tmp_path)
        other = tmp_path / "other.tsv"
        other.write_text("canonical\tNature\n", encoding="utf-8")
        code = main(
            ["correlate", "--counts", str(counts_path), "--jcr", str(jcr_path),
             "--registry", str(other), "--out", str(tmp_path / "o")]
        )
        assert code == 2


class TestSweepParsing:
    def test_range_syntax(self):
        assert parse_sweep("2..10") == list(range(2, 11))

    def test_mixed_syntax(self):
        assert parse_sweep("2,5,8..10,20") == [2, 5, 8, 9, 10, 20]

    @pytest.mark.parametrize("bad", ["", "abc", "5..2", "2,2", "10,5", "1..4", "0"])
    def test_rejects(self, bad):
        with pytest.raises(UsageError):
            parse_sweep(bad)


class TestGrowth:
    def _table_file(self, tmp_path, name, total):
        table = CountTable(
            counts={},
            excluded_count=0,
            unknown={},
            unknown_overflow=0,
            template_total=total,
            malformed_total=0,
            registry_fingerprint="fp",
        )
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fp:
            write_counts_json(table, fp)
        return path

    def test_series(self, tmp_path):
        paths = [
            self._table_file(tmp_path, f"t{i}.json", total)
            for i, total in enumerate([0, 19066, 24656, 30368])
        ]
        dates = ["2005-02-01", "2006-11-01", "2007-02-01", "2007-04-02"]
        args = ["growth", "--out", str(tmp_path / "out")]
        for when, path in zip(dates, paths):
            args += ["--table", f"{when}={path}"]
        assert main(args) == 0
        assert read(tmp_path / "out" / "growth.csv") == (
            "date,template_total\n"
            "2005-02-01,0\n"
            "2006-11-01,19066\n"
            "2007-02-01,24656\n"
            "2007-04-02,30368\n"
        )

    def test_non_increasing_dates(self, tmp_path):
        path = self._table_file(tmp_path, "t.json", 5)
        code = main(
            ["growth", "--table", f"2007-01-01={path}", "--table", f"2006-01-01={path}",
             "--out", str(tmp_path / "o")]
        )
        assert code == 1

    def test_bad_table_spec(self, tmp_path):
        assert main(["growth", "--table", "notadate", "--out", str(tmp_path / "o")]) == 1


class TestGenFixture:
    def test_roundtrip_with_count(self, tmp_path):
        fixture_dir = tmp_path / "fx"
        assert main(
            ["gen-fixture", "--pages", "30", "--citations", "60", "--nested", "5",
             "--decoys", "4", "--malformed", "3", "--no-journal", "4",
             "--seed", "5", "--out", str(fixture_dir)]
        ) == 0
        truth = json.loads(read(fixture_dir / "truth.json"))
        out = tmp_path / "counted"
        assert main(
            ["count", "--dump", str(fixture_dir / "dump.xml"),
             "--registry", str(fixture_dir / "registry.tsv"), "--out", str(out)]
        ) == 0
        with open(out / "counts.json", encoding="utf-8") as fp:
            table = read_counts_json(fp)
        assert table.template_total == truth["citations_total"]
        assert table.malformed_total == truth["malformed_total"]
        assert table.counts == truth["expected_counts"]

    def test_full_demo_pipeline(self, tmp_path):
        fixture_dir = tmp_path / "fx"
        main(["gen-fixture", "--pages", "60", "--citations", "200", "--out", str(fixture_dir)])
        out = tmp_path / "corr"
        code = main(
            ["correlate", "--dump", str(fixture_dir / "dump.xml"),
             "--registry", str(fixture_dir / "registry.tsv"),
             "--jcr", str(fixture_dir / "jcr.csv"), "--out", str(out)]
        )
        assert code == 0
        assert (out / "correlations.csv").exists()
        assert (out / "counts.json").exists()


def test_no_subcommand_is_usage_error():
    assert main([]) == 1


def test_manifest_written_and_stable(tmp_path):
    _, counts_path, jcr_path, _ = _write_counts_and_jcr(tmp_path)
    out = tmp_path / "out"
    args = ["correlate", "--counts", str(counts_path), "--jcr", str(jcr_path),
            "--out", str(out)]
    assert main(args) == 0
    manifest_first = read(out / "manifest.json")
    parsed = json.loads(manifest_first)
    assert parsed["command"] == "correlate"
    assert parsed["inputs"]["jcr"]["sha256"]
    assert main(args) == 0
    assert read(out / "manifest.json") == manifest_first
