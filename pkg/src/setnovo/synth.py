"""Synthetic annotated spectra with known ground truth."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .chem import ION_TYPES, Peptide, fragment_mz, precursor_mass, precursor_mz, token_id
from .spectra import Spectrum

INTENSITY_SCALE = 10000.0


@dataclass
class SynthConfig:
    alphabet: Tuple[str, ...] = ("G", "A", "S", "P")
    length_range: Tuple[int, int] = (4, 8)
    ion_coverage: float = 0.9
    noise_peaks: int = 20
    mz_jitter: float = 0.0
    intensity_model: str = "uniform"
    charges: Tuple[int, ...] = (2,)
    seed: int = 0

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        self.length_range = tuple(self.length_range)
        self.charges = tuple(self.charges)
        if not self.alphabet:
            raise ValueError("alphabet must not be empty")
        for symbol in self.alphabet:
            token_id(symbol)
        lo, hi = self.length_range
        if lo < 1 or hi < lo:
            raise ValueError("length range must satisfy 1 <= min <= max")
        if not 0.0 <= self.ion_coverage <= 1.0:
            raise ValueError("ion coverage must be a probability")
        if self.noise_peaks < 0 or self.mz_jitter < 0:
            raise ValueError("noise peak count and jitter must be non-negative")
        if self.intensity_model not in ("uniform", "decreasing"):
            raise ValueError("intensity model must be 'uniform' or 'decreasing'")

    def to_dict(self) -> dict:
        return asdict(self)


def _signal_intensity(rng, n_sites: int, model: str) -> np.ndarray:
    if model == "uniform":
        return rng.uniform(0.4, 1.0, size=(n_sites, len(ION_TYPES)))
    # b/y strongest, then doubly charged, then neutral losses
    base = np.array([1.0, 1.0, 0.6, 0.6, 0.4, 0.4, 0.35, 0.35])
    return base * rng.uniform(0.7, 1.0, size=(n_sites, len(ION_TYPES)))


def generate(config: SynthConfig, count: int) -> List[Spectrum]:
    """Sample ``count`` random peptides and build a spectrum for each.

    Each fragment ion appears with probability ``ion_coverage``; its m/z is
    perturbed by Gaussian noise of std ``mz_jitter`` clipped at four standard
    deviations. ``noise_peaks`` random peaks are added over
    [50, precursor m/z * charge].
    """
    rng = np.random.default_rng(config.seed)
    alphabet = np.array([token_id(a) for a in config.alphabet])
    lo, hi = config.length_range
    out = []
    for i in range(count):
        length = int(rng.integers(lo, hi + 1))
        peptide = Peptide(tuple(rng.choice(alphabet, size=length)))
        mass = precursor_mass(peptide)
        charge = int(rng.choice(config.charges))

        ions = fragment_mz(peptide)
        keep = rng.random(ions.shape) < config.ion_coverage
        intens = _signal_intensity(rng, ions.shape[0], config.intensity_model)
        if config.mz_jitter > 0:
            jitter = rng.normal(0.0, config.mz_jitter, size=ions.shape)
            ions = ions + np.clip(jitter, -4 * config.mz_jitter, 4 * config.mz_jitter)
        sig_mz, sig_int = ions[keep], intens[keep]
        valid = sig_mz > 0
        sig_mz, sig_int = sig_mz[valid], sig_int[valid]

        upper = max(precursor_mz(mass, charge) * charge, 51.0)
        noise_mz = rng.uniform(50.0, upper, size=config.noise_peaks)
        noise_int = 0.3 * (1.0 - rng.random(config.noise_peaks))

        mz = np.concatenate([sig_mz, noise_mz])
        intensity = np.concatenate([sig_int, noise_int]) * INTENSITY_SCALE
        if len(mz) == 0:
            mz, intensity = np.array([mass / 2]), np.array([1.0])
        out.append(Spectrum(mz, intensity, precursor_mz(mass, charge), charge,
                            scan_id=f"synth:{config.seed}:{i}", annotation=peptide,
                            title=f"synthetic {peptide}"))
    return out
