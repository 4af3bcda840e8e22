"""Peptide-disjoint train/valid/test splits."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .spectra import Spectrum

SPLIT_NAMES = ("train", "valid", "test")


@dataclass
class DatasetSplit:
    train: List[Spectrum]
    valid: List[Spectrum]
    test: List[Spectrum]

    def parts(self) -> Dict[str, List[Spectrum]]:
        return {"train": self.train, "valid": self.valid, "test": self.test}

    def peptides(self, name: str) -> set:
        return {str(s.annotation) for s in getattr(self, name)}


def split_by_peptide(spectra: Sequence[Spectrum], ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1),
                     seed: int = 0) -> DatasetSplit:
    """Assign whole peptide groups to splits.

    Spectra sharing an annotation string always end up in the same split.
    Groups are visited in a seeded random order and each one goes to the
    split currently furthest below its target spectrum count.
    """
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.shape != (3,) or np.any(ratios <= 0) or not np.isclose(ratios.sum(), 1.0):
        raise ValueError("ratios must be three positive numbers summing to 1")
    groups: Dict[str, List[Spectrum]] = {}
    for s in spectra:
        if s.annotation is None:
            raise ValueError(f"spectrum {s.scan_id!r} has no annotation")
        groups.setdefault(str(s.annotation), []).append(s)

    keys = sorted(groups)
    order = np.random.default_rng(seed).permutation(len(keys))
    targets = ratios * len(spectra)
    counts = np.zeros(3)
    parts: List[List[Spectrum]] = [[], [], []]
    for idx in order:
        group = groups[keys[idx]]
        which = int(np.argmax(targets - counts))
        parts[which].extend(group)
        counts[which] += len(group)
    return DatasetSplit(*parts)


def write_manifest(split: DatasetSplit, path) -> None:
    with open(path, "w") as fh:
        fh.write("scan_id\tsplit\n")
        for name, items in split.parts().items():
            for s in items:
                fh.write(f"{s.scan_id}\t{name}\n")


def read_manifest(path) -> Dict[str, str]:
    out = {}
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("scan_id"):
            raise ValueError(f"{os.fspath(path)}: not a split manifest")
        for line in fh:
            if line.strip():
                scan, name = line.rstrip("\n").split("\t")
                out[scan] = name
    return out
