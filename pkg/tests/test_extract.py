from datetime import datetime, timezone
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import reference_ddc, reference_normalize

from coauthornet.extract import (
    CanonicalName,
    DdcClass,
    Deletion,
    EmptyName,
    Publication,
    coauthor_pairs,
    extract_ddc,
    extract_publication,
    normalize_author_name,
)
from coauthornet.harvester import OaiRecord

WHEN = datetime(2024, 1, 1, tzinfo=timezone.utc)


def _record(creators=(), subjects=(), sets=(), deleted=False, identifier="oai:x:1"):
    dc = {}
    if creators:
        dc["creator"] = list(creators)
    if subjects:
        dc["subject"] = list(subjects)
    return OaiRecord(identifier, WHEN, list(sets), deleted, dc, "")


def _name_corpus(fixtures_dir):
    rows = []
    for line in (fixtures_dir / "names.tsv").read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        raw, expected = line.split("\t")
        rows.append((raw, expected))
    return rows


def test_name_corpus_matches_labels_and_oracle(fixtures_dir):
    rows = _name_corpus(fixtures_dir)
    assert len(rows) >= 30
    for raw, expected in rows:
        name = normalize_author_name(raw)
        assert name.canonical == expected, raw
        assert (name.canonical, name.display) == reference_normalize(raw), raw


def test_normalization_is_idempotent_on_corpus(fixtures_dir):
    for raw, _ in _name_corpus(fixtures_dir):
        once = normalize_author_name(raw)
        assert normalize_author_name(once.display) == once
        assert normalize_author_name(once.canonical).canonical == once.canonical


@pytest.mark.parametrize(
    "raw, canonical",
    [("Hartmann, Nora", "hartmann, nora"), ("Nora  Hartmann", "hartmann, nora"), ("Vogel", "vogel")],
)
def test_name_examples(raw, canonical):
    assert normalize_author_name(raw).canonical == canonical


@pytest.mark.parametrize("raw", ["", "   ", "\t\n", ",", " , "])
def test_empty_names(raw):
    with pytest.raises(EmptyName):
        normalize_author_name(raw)


_names = st.text(alphabet=st.sampled_from("abcXYZäÖß ,.-\t"), max_size=25)


@settings(max_examples=300, deadline=None)
@given(_names)
def test_normalization_agrees_with_oracle(raw):
    expected = reference_normalize(raw)
    if expected is None or not expected[0]:
        with pytest.raises(EmptyName):
            normalize_author_name(raw)
        return
    name = normalize_author_name(raw)
    assert (name.canonical, name.display) == expected
    assert normalize_author_name(name.display) == name
    assert name.canonical == " ".join(name.canonical.split())


@pytest.mark.parametrize(
    "subjects, sets, expected",
    [
        (["ddc:004", "Information Science"], [], {"004"}),
        ([], ["ddc:300"], {"300"}),
        (["42", "politics"], [], set()),
        (["004", "DDC:004", " ddc : 020 "], ["ddc:004", "doc-type:article"], {"004", "020"}),
        (["0042", "ddc:04", "ddc:004x"], ["ddc:3000", "dcc:300"], set()),
    ],
)
def test_ddc_examples(subjects, sets, expected):
    found = extract_ddc(_record(subjects=subjects, sets=sets))
    assert {d.code for d in found} == expected
    assert expected == reference_ddc(subjects, sets)


_subject = st.one_of(
    st.from_regex(r"(ddc|DDC|Ddc)?:?[0-9]{2,4}", fullmatch=True),
    st.text(alphabet="ddc:0123456789 abc", max_size=10),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(_subject, max_size=8), st.lists(st.from_regex(r"ddc:[0-9]{3}|set[0-9]", fullmatch=True), max_size=3), st.randoms())
def test_ddc_matches_oracle_and_ignores_order(subjects, sets, rnd):
    found = {d.code for d in extract_ddc(_record(subjects=subjects, sets=sets))}
    assert found == reference_ddc(subjects, sets)
    shuffled = list(subjects)
    rnd.shuffle(shuffled)
    assert {d.code for d in extract_ddc(_record(subjects=shuffled, sets=sets))} == found


def test_custom_subject_pattern():
    import re

    record = _record(subjects=["info:eu-repo/classification/ddc/004"])
    assert extract_ddc(record) == set()
    found = extract_ddc(record, subject_patterns=[re.compile(r"^info:eu-repo/classification/ddc/(\d{3})$")])
    assert found == {DdcClass("004")}


def test_ddc_class_levels():
    assert DdcClass("300").level == "main"
    assert DdcClass("340").level == "division"
    assert DdcClass("004").level == "section"
    assert DdcClass("004").main_class == "000"
    with pytest.raises(ValueError):
        DdcClass("42")


def test_publication_from_record():
    pub = extract_publication(_record(creators=["Vogel, Simon", "Krause, Martin"], subjects=["ddc:004"]))
    assert pub.canonical_authors == ["vogel, simon", "krause, martin"]
    assert pub.ddc_codes == ["004"]
    assert pub.datestamp == WHEN


def test_deleted_record_maps_to_deletion():
    assert extract_publication(_record(deleted=True, identifier="oai:x:9")) == Deletion("oai:x:9")


def test_duplicate_authors_collapse():
    pub = extract_publication(_record(creators=["A. Author", "A.  Author", "  ", "author, a."]))
    assert pub.canonical_authors == ["author, a."]
    assert pub.authors[0].display == "Author, A."


def test_authorless_record_gives_empty_author_list():
    pub = extract_publication(_record(creators=["   "]))
    assert pub.authors == ()


def test_publication_rejects_duplicates():
    a = CanonicalName("a", "A")
    with pytest.raises(ValueError):
        Publication("x", (a, a))
    with pytest.raises(ValueError):
        Publication("", ())


def _pub(names):
    return Publication("p", tuple(CanonicalName(n, n) for n in names))


@pytest.mark.parametrize("n", range(0, 9))
def test_pair_count(n):
    names = [f"author{i}" for i in range(n)]
    pairs = coauthor_pairs(_pub(names))
    brute = {frozenset((a, b)) for a in names for b in names if a < b}
    assert pairs == brute
    assert len(pairs) == comb(n, 2)


def test_pair_examples():
    assert coauthor_pairs(_pub(["a"])) == set()
    assert coauthor_pairs(_pub(["a", "b", "c"])) == {frozenset("ab"), frozenset("ac"), frozenset("bc")}
    assert len(coauthor_pairs(_pub("abcdef"))) == 15
    assert len(coauthor_pairs(_pub("abcdef"), max_authors=4)) == 6
