"""Mass-reachability table used to prune beam-search extensions.

Masses are discretised into bins of ``bin_width`` Da. Bin ``m`` is feasible
when some multiset of residue masses (each rounded to bins) sums to ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .chem import END, RESIDUE_IDS, TOKEN_MASSES

DEFAULT_BIN_WIDTH = 0.0005


@dataclass(frozen=True, eq=False)
class KnapsackTable:
    bin_width: float
    max_mass: float
    feasible: np.ndarray
    tokens: tuple
    token_bins: np.ndarray
    _cumulative: np.ndarray = field(repr=False)

    def bin_of(self, mass) -> np.ndarray:
        return np.rint(np.asarray(mass, dtype=np.float64) / self.bin_width).astype(np.int64)

    def is_feasible(self, mass: float, tolerance: float = 0.0) -> bool:
        return bool(self.any_feasible(np.array([mass]), tolerance)[0])

    def any_feasible(self, masses, tolerance: float) -> np.ndarray:
        """Whether some feasible bin lies within ``mass +/- tolerance``, elementwise."""
        masses = np.asarray(masses, dtype=np.float64)
        lo = self.bin_of(masses - tolerance)
        hi = self.bin_of(masses + tolerance)
        n = len(self.feasible)
        out_of_range = (hi < 0) | (lo >= n)
        lo = np.clip(lo, 0, n - 1)
        hi = np.clip(hi, 0, n - 1)
        counts = self._cumulative[hi + 1] - self._cumulative[lo]
        return (counts > 0) & ~out_of_range


def build_knapsack(tokens: Optional[Sequence[int]] = None, max_mass: float = 5000.0,
                   bin_width: float = DEFAULT_BIN_WIDTH) -> KnapsackTable:
    """Unbounded-knapsack reachability over residue masses.

    ``tokens`` are residue token ids (all residues by default). The table
    covers bins ``0 .. round(max_mass / bin_width)``.
    """
    if bin_width <= 0 or max_mass <= 0:
        raise ValueError("bin_width and max_mass must be positive")
    tokens = tuple(RESIDUE_IDS if tokens is None else tokens)
    token_bins = np.rint(TOKEN_MASSES[list(tokens)] / bin_width).astype(np.int64)
    if np.any(token_bins <= 0):
        raise ValueError("knapsack needs residue tokens with positive mass")
    n_bins = int(np.rint(max_mass / bin_width)) + 1
    feasible = np.zeros(n_bins, dtype=bool)
    feasible[0] = True
    step = int(token_bins.min())
    unique_bins = np.unique(token_bins)
    # every bin in [lo, hi) only depends on bins below lo, so whole blocks can be filled at once
    for lo in range(step, n_bins, step):
        hi = min(lo + step, n_bins)
        block = feasible[lo:hi]
        for b in unique_bins:
            if b > hi - 1:
                break
            src_lo = lo - b
            if src_lo >= 0:
                block |= feasible[src_lo:hi - b]
            else:
                block[-src_lo:] |= feasible[0:hi - b]
    cumulative = np.concatenate([[0], np.cumsum(feasible, dtype=np.int64)])
    feasible.setflags(write=False)
    return KnapsackTable(bin_width, max_mass, feasible, tokens, token_bins, cumulative)


def feasible_extensions(table: KnapsackTable, remaining_mass: float, tolerance: float = 0.02,
                        precursor_tolerance: float = 0.01) -> set:
    """Tokens that can extend a prefix with ``remaining_mass`` Da still to explain.

    A residue is allowed when the mass left after it is reachable within
    ``tolerance``; the end token is allowed when the remaining mass is within
    ``precursor_tolerance`` of zero.
    """
    return set(np.flatnonzero(extension_mask(table, np.array([remaining_mass]), tolerance,
                                             precursor_tolerance)[0]).tolist())


def extension_mask(table: KnapsackTable, remaining, tolerance: float = 0.02,
                   precursor_tolerance: float = 0.01) -> np.ndarray:
    """Boolean ``(K, N_VOCAB)`` mask of allowed next tokens for K prefixes."""
    remaining = np.asarray(remaining, dtype=np.float64).reshape(-1)
    mask = np.zeros((len(remaining), len(TOKEN_MASSES)), dtype=bool)
    tokens = np.array(table.tokens)
    after = remaining[:, None] - TOKEN_MASSES[tokens][None, :]
    ok = table.any_feasible(after, tolerance) & (after >= -tolerance)
    mask[:, tokens] = ok
    mask[:, END] = np.abs(remaining) <= precursor_tolerance
    return mask
