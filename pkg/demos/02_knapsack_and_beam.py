"""Mass-constrained beam search with an untrained network.

Even without training, the knapsack table restricts decoding to sequences
whose residue masses add up to the precursor mass. With a width at least as
large as the number of such sequences, beam search returns all of them.
"""

import itertools

from setnovo.chem import TOKEN_MASSES, token_id
from setnovo.decoder import beam_search
from setnovo.knapsack import build_knapsack, feasible_extensions
from setnovo.nn.model import SequencingModel
from setnovo.spectra import preprocess
from setnovo.synth import SynthConfig, generate

alphabet = ("G", "A", "S")
tokens = [token_id(a) for a in alphabet]
table = build_knapsack(tokens, max_mass=1000.0)
print(f"knapsack: {len(table.feasible)} bins of {table.bin_width} Da, {table.feasible.sum()} reachable")

spectrum = preprocess(generate(SynthConfig(alphabet=alphabet, length_range=(4, 4), seed=3), 1)[0])
total = spectrum.residue_mass_total
print(f"true peptide {spectrum.annotation}, residue mass {total:.4f}")

allowed = feasible_extensions(table, total)
print("first-step extensions allowed:", sorted(alphabet[tokens.index(t)] for t in allowed))

# every composition with the right mass, found by brute force
feasible = [seq for L in range(1, 8) for seq in itertools.product(tokens, repeat=L)
            if abs(TOKEN_MASSES[list(seq)].sum() - total) <= 0.01]
print(f"{len(feasible)} sequences over {alphabet} match the precursor")

model = SequencingModel(conv=(16, 16, 32), fc=(32, 16, 16), d_lstm=16, seed=0)
hits = beam_search(spectrum, model, width=len(feasible), table=table)
for h in hits:
    print(f"  {str(h.peptide):<8} score {h.score:8.3f}")
assert sorted(h.peptide.tokens for h in hits) == sorted(feasible)
