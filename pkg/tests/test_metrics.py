import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setnovo.chem import RESIDUE_IDS, Peptide, residue_mass
from setnovo.metrics import MatchResult, aggregate, evaluate, match_peptides, read_report, write_report

P = Peptide.from_string


def test_identity():
    assert match_peptides(P("GA"), P("GA")) == MatchResult(2, 2, 2, True)


def test_leucine_isoleucine():
    assert residue_mass("L") == residue_mass("I") == pytest.approx(113.08406, abs=1e-5)
    assert match_peptides(P("LGA"), P("IGA")) == MatchResult(3, 3, 3, True)


def test_transposition():
    assert match_peptides(P("AG"), P("GA")) == MatchResult(0, 2, 2, False)


def test_lysine_glutamine_within_tolerance():
    assert abs(residue_mass("K") - residue_mass("Q")) == pytest.approx(0.03638, abs=1e-5)
    assert match_peptides(P("GKA"), P("GQA")).matched == 3


def test_unequal_lengths():
    # GG and N have equal mass; prefixes realign after them
    r = match_peptides(P("GGAS"), P("NAS"))
    assert r == MatchResult(2, 3, 4, False)


def test_empty_raises():
    with pytest.raises(ValueError):
        match_peptides(Peptide(()), P("GA"))


peptides = st.lists(st.sampled_from(RESIDUE_IDS), min_size=1, max_size=25).map(lambda t: Peptide(tuple(t)))


@settings(max_examples=200, deadline=None)
@given(peptides)
def test_self_match_is_full(p):
    r = match_peptides(p, p)
    assert r.fully_matched and r.matched == len(p)


@settings(max_examples=200, deadline=None)
@given(peptides, peptides)
def test_match_bounds(a, b):
    r = match_peptides(a, b)
    assert 0 <= r.matched <= min(len(a), len(b))
    if r.fully_matched:
        assert r.matched == r.real_length == r.predicted_length


def test_aggregate_examples():
    perfect = [MatchResult(3, 3, 3, True), MatchResult(5, 5, 5, True)]
    assert aggregate(perfect).as_tuple() == (1.0, 1.0, 1.0)
    half = [MatchResult(4, 4, 4, True), MatchResult(0, 4, 4, False)]
    assert aggregate(half).peptide_recall == 0.5


def test_aggregate_no_predictions_flag():
    s = aggregate([MatchResult(0, 4, 0, False)])
    assert s.aa_precision == 0.0 and s.no_predictions
    with pytest.raises(ValueError):
        aggregate([])


def test_evaluate_counts_missing_predictions():
    summary, results = evaluate([(P("GA"), P("GA")), (None, P("GAS"))])
    assert results[1] == MatchResult(0, 3, 0, False)
    assert summary.aa_recall == pytest.approx(2 / 5)
    assert summary.aa_precision == 1.0
    assert summary.peptide_recall == 0.5


def test_report_round_trip(tmp_path):
    summary, results = evaluate([(P("GA"), P("GA")), (P("AG"), P("GA"))])
    write_report(summary, [("a", results[0]), ("b", results[1])], tmp_path / "r.tsv", missing=["zz"])
    back = read_report(tmp_path / "r.tsv")
    assert back["aa_recall"] == pytest.approx(0.5)
    assert back["peptide_recall"] == pytest.approx(0.5)
    assert back["rows"] == [("a", results[0]), ("b", results[1])]
    assert "# unmatched_scan\tzz" in (tmp_path / "r.tsv").read_text()
