"""Knapsack-constrained beam search and the prediction file format."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .chem import END, START, TOKEN_MASSES, Peptide
from .features import DEFAULT_C, DEFAULT_RESOLUTION, batch_features, spectrum_summary
from .knapsack import KnapsackTable, extension_mask
from .nn.autograd import Tensor, no_grad, numpy_log_softmax
from .nn.model import SequencingModel
from .spectra import Spectrum, preprocess

logger = logging.getLogger(__name__)

PREDICTION_HEADER = ("scan_id", "predicted_sequence", "score", "position_scores")


@dataclass(frozen=True)
class Prediction:
    peptide: Peptide
    score: float
    position_scores: Tuple[float, ...]

    @property
    def sequence(self) -> str:
        return str(self.peptide)


@dataclass
class _Entry:
    tokens: Tuple[int, ...]
    score: float
    prefix_mass: float
    position_scores: Tuple[float, ...]


def beam_search(spectrum: Spectrum, model: SequencingModel, width: int, table: KnapsackTable, *,
                c: float = DEFAULT_C, resolution: float = DEFAULT_RESOLUTION,
                tolerance: float = 0.02, precursor_tolerance: float = 0.01,
                max_length: int = 50) -> List[Prediction]:
    """Decode one preprocessed spectrum from N- to C-terminus.

    At each step every live partial peptide is scored by the model, tokens
    the knapsack table rules out are dropped, and the ``width`` best
    extensions by summed log-probability survive. A partial finishes when
    the end token is chosen with the precursor mass explained. Returns the
    finished peptides, best first; an empty list if none finish.
    """
    if width < 1:
        raise ValueError("beam width must be >= 1")
    total = spectrum.residue_mass_total
    mz, intensity = spectrum.mz, spectrum.intensity
    if len(mz) == 0 or total <= 0:
        return []
    state = None
    if model.use_lstm:
        state = model.initial_state(spectrum_summary(mz, intensity, model.d_lstm, resolution)[None])
    beam = [_Entry((), 0.0, 0.0, ())]
    finished: List[Prediction] = []
    dtype = model.dtype

    with no_grad():
        for _ in range(max_length + 1):
            if not beam:
                break
            prefix = np.array([e.prefix_mass for e in beam])
            remaining = total - prefix
            feats = batch_features(mz[None], intensity[None], prefix[None], remaining[None],
                                   c=c, dtype=dtype)[0]
            last = np.array([e.tokens[-1] if e.tokens else START for e in beam])
            logits, new_state = model.step(feats, last, state)
            logp = numpy_log_softmax(logits.data.astype(np.float64))
            allowed = extension_mask(table, remaining, tolerance, precursor_tolerance)
            if len(beam[0].tokens) >= max_length:
                allowed[:, :] = False
                allowed[:, END] = np.abs(remaining) <= precursor_tolerance

            for k in np.flatnonzero(allowed[:, END]):
                e = beam[k]
                if e.tokens:
                    finished.append(Prediction(Peptide(e.tokens), e.score + float(logp[k, END]),
                                               e.position_scores))
            allowed[:, END] = False
            cand = np.where(allowed, np.array([e.score for e in beam])[:, None] + logp, -np.inf)
            flat = cand.reshape(-1)
            n_live = int(np.isfinite(flat).sum())
            if n_live == 0:
                break
            order = np.argsort(-flat, kind="stable")[:min(width, n_live)]
            rows, toks = np.divmod(order, cand.shape[1])
            beam = [
                _Entry(beam[r].tokens + (int(t),), float(flat[o]),
                       beam[r].prefix_mass + TOKEN_MASSES[t],
                       beam[r].position_scores + (float(logp[r, t]),))
                for o, r, t in zip(order, rows, toks)
            ]
            if new_state is not None:
                state = (Tensor(new_state[0].data[rows]), Tensor(new_state[1].data[rows]))
    finished.sort(key=lambda p: -p.score)
    return finished


def denovo(spectra: Sequence[Spectrum], model: SequencingModel, table: KnapsackTable, *,
           width: int = 5, n_peaks: int = 500, normalize: bool = True, c: float = DEFAULT_C,
           resolution: float = DEFAULT_RESOLUTION, tolerance: float = 0.02,
           precursor_tolerance: float = 0.01, max_length: int = 50,
           threads: int = 1) -> List[Optional[Prediction]]:
    """Top-1 prediction for each spectrum (None where the beam found nothing)."""

    def run(spectrum):
        processed = preprocess(spectrum, n_peaks, normalize)
        hits = beam_search(processed, model, width, table, c=c, resolution=resolution,
                           tolerance=tolerance, precursor_tolerance=precursor_tolerance,
                           max_length=max_length)
        return hits[0] if hits else None

    if threads <= 1:
        return [run(s) for s in spectra]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, spectra))


def write_predictions(rows: Iterable[Tuple[str, Optional[Prediction]]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(PREDICTION_HEADER)
        for scan_id, pred in rows:
            if pred is None:
                writer.writerow([scan_id, "", "", ""])
            else:
                writer.writerow([scan_id, pred.sequence, repr(pred.score),
                                 ",".join(repr(x) for x in pred.position_scores)])


def read_predictions(path) -> List[Tuple[str, Optional[Prediction]]]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None or tuple(header) != PREDICTION_HEADER:
            raise ValueError(f"{os.fspath(path)}: not a predictions file")
        for row in reader:
            if not row:
                continue
            scan_id, seq, score, positions = row
            if not seq:
                out.append((scan_id, None))
                continue
            scores = tuple(float(x) for x in positions.split(",")) if positions else ()
            out.append((scan_id, Prediction(Peptide.from_string(seq), float(score), scores)))
    return out
