"""How predictions are scored against the true peptides.

Residues count as matched when both the mass before them and their own mass
agree, so mass-equivalent swaps such as L/I count while transpositions do
not.
"""

from setnovo.chem import Peptide
from setnovo.metrics import evaluate, match_peptides

P = Peptide.from_string

pairs = [
    ("PEPTIDE", "PEPTIDE"),
    ("PEPTLDE", "PEPTIDE"),   # L and I have identical mass
    ("EPPTIDE", "PEPTIDE"),   # swapped pair, both positions lost
    ("GGAS", "NAS"),          # GG has the mass of N; the rest realigns
    ("GKA", "GQA"),           # K and Q differ by 0.036 Da, under the 0.1 Da tolerance
]
for pred, real in pairs:
    r = match_peptides(P(pred), P(real))
    print(f"{pred:>8} vs {real:<8} matched {r.matched}/{r.real_length} (predicted {r.predicted_length})"
          f"{'  full match' if r.fully_matched else ''}")

# a spectrum without any prediction still counts against recall
summary, _ = evaluate([(P(p), P(r)) for p, r in pairs] + [(None, P("SAMPLER"))])
print(f"\naa recall {summary.aa_recall:.3f}  aa precision {summary.aa_precision:.3f}  "
      f"peptide recall {summary.peptide_recall:.3f}  over {summary.n_spectra} spectra")
