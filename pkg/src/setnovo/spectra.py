"""Set-based spectrum representation and peak selection."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .chem import H2O, Peptide, neutral_mass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """An MS2 spectrum as an unordered set of (m/z, intensity) peaks.

    Peaks are stored sorted by ascending m/z so that serialisation is
    deterministic; nothing downstream relies on the order.
    """

    mz: np.ndarray
    intensity: np.ndarray
    precursor_mz: float
    precursor_charge: int
    scan_id: str = ""
    annotation: Optional[Peptide] = None
    title: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        mz = np.asarray(self.mz, dtype=np.float64).reshape(-1)
        intensity = np.asarray(self.intensity, dtype=np.float64).reshape(-1)
        if mz.shape != intensity.shape:
            raise ValueError("mz and intensity must have equal length")
        if np.any(mz <= 0):
            raise ValueError("peak m/z must be positive")
        if np.any(intensity < 0):
            raise ValueError("peak intensity must be non-negative")
        if self.precursor_charge < 1:
            raise ValueError("precursor charge must be a positive integer")
        order = np.argsort(mz, kind="stable")
        mz, intensity = mz[order], intensity[order]
        mz.setflags(write=False)
        intensity.setflags(write=False)
        object.__setattr__(self, "mz", mz)
        object.__setattr__(self, "intensity", intensity)

    def __len__(self) -> int:
        return len(self.mz)

    @property
    def precursor_mass(self) -> float:
        """Neutral precursor mass in Da."""
        return neutral_mass(self.precursor_mz, self.precursor_charge)

    @property
    def residue_mass_total(self) -> float:
        """Sum of residue masses the decoded peptide has to explain."""
        return self.precursor_mass - H2O

    def replace(self, **changes) -> "Spectrum":
        return replace(self, **changes)


def select_top_peaks(spectrum: Spectrum, n: int = 500) -> Spectrum:
    """Keep the ``n`` most intense peaks.

    Ties at the cut are resolved in favour of the lower m/z. The result is
    sorted by m/z again.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(spectrum) <= n:
        return spectrum
    # peaks are already m/z-sorted, so a stable sort on -intensity puts lower m/z first on ties
    order = np.argsort(-spectrum.intensity, kind="stable")[:n]
    keep = np.sort(order)
    return spectrum.replace(mz=spectrum.mz[keep], intensity=spectrum.intensity[keep])


def normalize_intensity(spectrum: Spectrum) -> Spectrum:
    """Scale intensities so the most intense peak is 1."""
    if len(spectrum) == 0:
        return spectrum
    top = spectrum.intensity.max()
    if top <= 0:
        return spectrum
    return spectrum.replace(intensity=spectrum.intensity / top)


def preprocess(spectrum: Spectrum, n: int = 500, normalize: bool = True) -> Spectrum:
    spectrum = select_top_peaks(spectrum, n)
    if normalize:
        spectrum = normalize_intensity(spectrum)
    return spectrum


def spectra_close(a: Spectrum, b: Spectrum, rtol: float = 1e-6) -> bool:
    """Field-by-field comparison with a relative tolerance on floats."""
    if (a.precursor_charge, a.scan_id, a.annotation) != (b.precursor_charge, b.scan_id, b.annotation):
        return False
    if a.mz.shape != b.mz.shape:
        return False
    return (np.allclose(a.mz, b.mz, rtol=rtol, atol=0)
            and np.allclose(a.intensity, b.intensity, rtol=rtol, atol=1e-12)
            and np.isclose(a.precursor_mz, b.precursor_mz, rtol=rtol, atol=0))
