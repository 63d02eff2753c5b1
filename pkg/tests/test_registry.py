import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wikicite.registry import (
    JournalRegistry,
    RegistryLoadError,
    ResolutionKind,
    near_misses,
    normalize_key,
    parse_registry,
    resolve,
)


@pytest.mark.parametrize(
    "raw,key",
    [
        ("The Lancet", "lancet"),
        ("Astronomy & Astrophysics", "astronomy and astrophysics"),
        ("  NATURE. ", "nature"),
        ("New  England   Journal", "new england journal"),
        ("the the journal", "journal"),
        ("Commun. ACM", "commun. acm"),
        ("", ""),
    ],
)
def test_normalize_key_examples(raw, key):
    assert normalize_key(raw) == key


@settings(max_examples=500, deadline=None)
@given(st.text(max_size=60))
def test_normalize_key_idempotent(raw):
    once = normalize_key(raw)
    assert normalize_key(once) == once


def test_resolve_alias_hit(starter_registry):
    res = starter_registry.resolve("New Engl J Med")
    assert res.kind is ResolutionKind.CANONICAL
    assert res.name == "New England Journal of Medicine"


def test_resolve_own_key_with_markup_noise(starter_registry):
    assert starter_registry.resolve(" NATURE. ").name == "Nature"
    assert starter_registry.resolve("lancet").name == "The Lancet"


def test_resolve_excluded(starter_registry):
    res = resolve("Scientific American", starter_registry)
    assert res.kind is ResolutionKind.EXCLUDED
    assert res.name == "Scientific American"


def test_resolve_unknown_preserved_verbatim(starter_registry):
    res = starter_registry.resolve("Journal of Imaginary Results")
    assert res.kind is ResolutionKind.UNKNOWN
    assert res.name == "Journal of Imaginary Results"


def test_exclusion_dominates(starter_registry):
    for name in starter_registry.exclusions:
        assert starter_registry.resolve(name).kind is ResolutionKind.EXCLUDED


def test_resolution_pure(starter_registry):
    assert starter_registry.resolve("BMJ") == starter_registry.resolve("BMJ")


def test_invariants_hold(starter_registry):
    registry = starter_registry
    assert registry.exclusions <= registry.canonical
    for target in registry.aliases.values():
        assert target in registry.canonical
    for key in registry.aliases:
        assert normalize_key(key) == key


LINES = [
    "canonical\tNature",
    "alias\tNature (London)\tNature",
    "exclude\tScientific American",
    "# a comment",
    "",
    "canonical\tThe Lancet",
]


def test_parse_registry_order_independent():
    forward = parse_registry(LINES)
    backward = parse_registry(list(reversed(LINES)))
    assert forward.fingerprint == backward.fingerprint
    assert forward.canonical == backward.canonical
    assert forward.resolve("nature (london)").name == "Nature"


def test_exclude_implies_canonical_membership():
    registry = parse_registry(["exclude\tScientific American"])
    assert "Scientific American" in registry.canonical
    assert registry.resolve("Scientific American").kind is ResolutionKind.EXCLUDED


def test_duplicate_alias_key_names_line():
    lines = [
        "canonical\tNature",
        "alias\tNat.\tNature",
        "alias\tnat.\tNature",
    ]
    with pytest.raises(RegistryLoadError, match="line 3"):
        parse_registry(lines)


def test_alias_to_undeclared_target_fails():
    with pytest.raises(RegistryLoadError, match="undeclared"):
        parse_registry(["alias\tNat.\tNature"])


def test_unknown_line_kind_fails():
    with pytest.raises(RegistryLoadError, match="line 1"):
        parse_registry(["journal\tNature"])


def test_canonical_key_collision_fails():
    with pytest.raises(RegistryLoadError, match="share the key"):
        parse_registry(["canonical\tThe Lancet", "canonical\tLancet"])


def test_alias_conflicting_with_canonical_key_fails():
    lines = ["canonical\tNature", "canonical\tScience", "alias\tnature\tScience"]
    with pytest.raises(RegistryLoadError):
        parse_registry(lines)


def test_fingerprint_tracks_content():
    a = parse_registry(["canonical\tNature"])
    b = parse_registry(["canonical\tNature", "exclude\tScientific American"])
    c = parse_registry(["canonical\tNature"])
    assert a.fingerprint != b.fingerprint
    assert a.fingerprint == c.fingerprint


def test_build_validates_alias_targets():
    with pytest.raises(RegistryLoadError):
        JournalRegistry.build(["Nature"], {"Sci": "Science"})


def test_near_misses_shared_prefix(starter_registry):
    hits = near_misses(["Nature Genetics", "Totally Unrelated"], starter_registry)
    assert ("Nature Genetics", "Nature") in hits
    assert all(raw != "Totally Unrelated" for raw, _ in hits)


def test_near_misses_empty_for_no_unknowns(starter_registry):
    assert near_misses([], starter_registry) == []


def test_load_registry_file(tmp_path):
    path = tmp_path / "reg.tsv"
    path.write_text("canonical\tNature\nalias\tNat\tNature\n", encoding="utf-8")
    from wikicite.registry import load_registry

    registry = load_registry(path)
    assert registry.resolve("nat").name == "Nature"
