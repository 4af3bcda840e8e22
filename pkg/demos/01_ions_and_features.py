"""Fragment ions of a peptide and the matching features a spectrum produces.

Builds the eight fragment-ion ladders of a short peptide, simulates a
spectrum from them, and shows how the feature matrix lights up when the
candidate next residue is the right one.
"""

import numpy as np

from setnovo.chem import ION_TYPES, Peptide, fragment_mz, token_id
from setnovo.features import feature_matrix
from setnovo.spectra import preprocess
from setnovo.synth import SynthConfig, generate

peptide = Peptide.from_string("PEPTIDE")
print(f"{peptide}: neutral mass {peptide.mass:.5f} Da")

ions = fragment_mz(peptide)
header = "cut " + "".join(f"{ion.name:>10}" for ion in ION_TYPES)
print(header)
for i, row in enumerate(ions, start=1):
    print(f"{i:>3} " + "".join(f"{x:10.4f}" for x in row))

# a noisy synthetic spectrum for a peptide over a small alphabet
spectrum = generate(SynthConfig(alphabet=("G", "A", "S", "P"), noise_peaks=10, seed=7), 1)[0]
spectrum = preprocess(spectrum, n=500, normalize=True)
truth = spectrum.annotation
print(f"\nspectrum for {truth}: {len(spectrum.mz)} peaks, precursor {spectrum.precursor_mz:.4f} m/z")

# Feature rows for the first decoding step. Columns are grouped per token,
# eight ion activations each; the true first residue scores highest.
total = spectrum.residue_mass_total
F = feature_matrix(spectrum.mz, spectrum.intensity, prefix_mass=0.0, suffix_mass=total)
per_token = F[:, :-1].reshape(len(spectrum.mz), -1, len(ION_TYPES))
strength = per_token.max(axis=0).sum(axis=1)
for symbol in ("G", "A", "S", "P", "V"):
    print(f"  candidate {symbol}: summed best activations {strength[token_id(symbol)]:.3f}")
print(f"true first residue: {str(truth)[0]}")
