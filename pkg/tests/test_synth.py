import numpy as np
import pytest

from setnovo.chem import END, PROTON, Peptide, fragment_mz, neutral_mass, precursor_mass, TOKEN_MASSES
from setnovo.features import feature_matrix
from setnovo.mgf import dumps, parse_mgf
from setnovo.spectra import normalize_intensity
from setnovo.synth import SynthConfig, generate

import io


def test_noise_free_peaks_are_exact_fragments():
    cfg = SynthConfig(alphabet=("G", "A"), length_range=(2, 2), ion_coverage=1.0, noise_peaks=0, seed=0)
    for s in generate(cfg, 10):
        expected = np.sort(fragment_mz(s.annotation).reshape(-1))
        expected = expected[expected > 0]
        np.testing.assert_array_equal(s.mz, expected)


def test_peptide_ga_ion_set():
    cfg = SynthConfig(alphabet=("G", "A"), length_range=(2, 2), ion_coverage=1.0, noise_peaks=0, seed=0)
    s = next(s for s in generate(cfg, 50) if str(s.annotation) == "GA")
    assert len(s) == 8


def test_deterministic():
    cfg = SynthConfig(seed=7, mz_jitter=0.004)
    a, b = generate(cfg, 20), generate(cfg, 20)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.mz, y.mz)
        np.testing.assert_array_equal(x.intensity, y.intensity)
        assert x.annotation == y.annotation


def test_jitter_clipped_at_four_sigma():
    cfg = SynthConfig(seed=3, mz_jitter=0.005, noise_peaks=0, ion_coverage=1.0)
    worst = 0.0
    for s in generate(cfg, 200):
        ions = fragment_mz(s.annotation).reshape(-1)
        d = np.min(np.abs(s.mz[:, None] - ions[None, :]), axis=1)
        worst = max(worst, d.max())
    assert worst <= 4 * 0.005 + 1e-12


def test_precursor_consistency_through_mgf():
    spectra = generate(SynthConfig(seed=4, charges=(1, 2, 3)), 50)
    for s in parse_mgf(io.StringIO(dumps(spectra))):
        assert abs(s.precursor_mass - precursor_mass(s.annotation)) < 1e-6


def test_noise_range_and_intensity():
    cfg = SynthConfig(seed=2, ion_coverage=0.0, noise_peaks=50)
    for s in generate(cfg, 10):
        upper = s.precursor_mz * s.precursor_charge
        assert np.all((s.mz >= 50) & (s.mz <= upper))
        assert np.all((s.intensity > 0) & (s.intensity <= 0.3 * 10000))


def test_true_token_fully_activated_each_step():
    cfg = SynthConfig(seed=5, ion_coverage=1.0, noise_peaks=10)
    for s in generate(cfg, 20):
        s = normalize_intensity(s)
        total = s.residue_mass_total
        prefix = 0.0
        for tok in s.annotation.tokens[:-1]:
            F = feature_matrix(s.mz, s.intensity, prefix, total - prefix)
            assert F[:, tok * 8:(tok + 1) * 8].max() >= 1.0 - 1e-6
            prefix += TOKEN_MASSES[tok]


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(alphabet=())
    with pytest.raises(ValueError):
        SynthConfig(ion_coverage=1.5)
    with pytest.raises(ValueError):
        SynthConfig(length_range=(0, 3))
    with pytest.raises(ValueError):
        SynthConfig(alphabet=("X",))
