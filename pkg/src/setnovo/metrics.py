"""Amino-acid and peptide level agreement between predicted and true peptides."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .chem import Peptide

logger = logging.getLogger(__name__)

RESIDUE_TOLERANCE = 0.1
PREFIX_TOLERANCE = 0.5


@dataclass(frozen=True)
class MatchResult:
    matched: int
    real_length: int
    predicted_length: int
    fully_matched: bool


@dataclass(frozen=True)
class Summary:
    aa_recall: float
    aa_precision: float
    peptide_recall: float
    n_spectra: int
    no_predictions: bool = False

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.aa_recall, self.aa_precision, self.peptide_recall


def match_peptides(predicted: Peptide, real: Peptide, residue_tolerance: float = RESIDUE_TOLERANCE,
                   prefix_tolerance: float = PREFIX_TOLERANCE) -> MatchResult:
    """Count matched residues with a two-pointer scan over prefix masses.

    Positions i (predicted) and j (real) are compared when the masses before
    them agree within ``prefix_tolerance``; they match when their residue
    masses also agree within ``residue_tolerance``. Otherwise the pointer
    with the smaller prefix mass moves on.
    """
    if len(predicted) == 0 or len(real) == 0:
        raise ValueError("cannot match empty peptides")
    pm, rm = predicted.residue_masses, real.residue_masses
    p_before = np.concatenate([[0.0], np.cumsum(pm)[:-1]])
    r_before = np.concatenate([[0.0], np.cumsum(rm)[:-1]])
    i = j = matched = 0
    while i < len(pm) and j < len(rm):
        if abs(p_before[i] - r_before[j]) < prefix_tolerance:
            if abs(pm[i] - rm[j]) < residue_tolerance:
                matched += 1
            i += 1
            j += 1
        elif p_before[i] < r_before[j]:
            i += 1
        else:
            j += 1
    full = matched == len(pm) == len(rm)
    return MatchResult(matched, len(rm), len(pm), full)


def unpredicted(real: Peptide) -> MatchResult:
    return MatchResult(0, len(real), 0, False)


def aggregate(results: Sequence[MatchResult]) -> Summary:
    if not results:
        raise ValueError("no results to aggregate")
    matched = sum(r.matched for r in results)
    real = sum(r.real_length for r in results)
    predicted = sum(r.predicted_length for r in results)
    full = sum(r.fully_matched for r in results)
    if predicted == 0:
        logger.warning("no predicted residues; amino-acid precision reported as 0")
    return Summary(
        aa_recall=matched / real if real else 0.0,
        aa_precision=matched / predicted if predicted else 0.0,
        peptide_recall=full / len(results),
        n_spectra=len(results),
        no_predictions=predicted == 0,
    )


def evaluate(pairs: Iterable[Tuple[Optional[Peptide], Peptide]]) -> Tuple[Summary, List[MatchResult]]:
    """Match (prediction, truth) pairs; a None prediction counts as a miss."""
    results = [unpredicted(real) if pred is None or len(pred) == 0 else match_peptides(pred, real)
               for pred, real in pairs]
    return aggregate(results), results


def write_report(summary: Summary, rows: Sequence[Tuple[str, MatchResult]], path,
                 missing: Sequence[str] = ()) -> None:
    with open(path, "w") as fh:
        fh.write(f"# aa_recall\t{summary.aa_recall:.6f}\n")
        fh.write(f"# aa_precision\t{summary.aa_precision:.6f}\n")
        fh.write(f"# peptide_recall\t{summary.peptide_recall:.6f}\n")
        fh.write(f"# n_spectra\t{summary.n_spectra}\n")
        if summary.no_predictions:
            fh.write("# warning\tno predicted residues; precision set to 0\n")
        for scan in missing:
            fh.write(f"# unmatched_scan\t{scan}\n")
        fh.write("scan_id\tmatched\treal_length\tpredicted_length\tfully_matched\n")
        for scan, r in rows:
            fh.write(f"{scan}\t{r.matched}\t{r.real_length}\t{r.predicted_length}\t{int(r.fully_matched)}\n")


def read_report(path) -> dict:
    out = {"rows": []}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, value = line[2:].partition("\t")
                if key in ("aa_recall", "aa_precision", "peptide_recall"):
                    out[key] = float(value)
                elif key == "n_spectra":
                    out[key] = int(value)
                continue
            if line.startswith("scan_id") or not line:
                continue
            scan, m, rl, pl, full = line.split("\t")
            out["rows"].append((scan, MatchResult(int(m), int(rl), int(pl), bool(int(full)))))
    return out
