"""De novo peptide sequencing from set-represented tandem mass spectra."""

from .chem import (ION_TYPES, N_ION, N_VOCAB, VOCAB, Peptide, precursor_mass, residue_mass,
                   theoretical_mz)
from .config import Config
from .decoder import Prediction, beam_search, denovo
from .features import (activation, batch_features, difference_tensor, feature_matrix,
                       positional_embedding, spectrum_summary)
from .knapsack import KnapsackTable, build_knapsack, feasible_extensions
from .metrics import MatchResult, aggregate, match_peptides
from .mgf import MgfParseError, parse_mgf, write_mgf
from .spectra import Spectrum, select_top_peaks
from .splits import DatasetSplit, split_by_peptide
from .synth import SynthConfig, generate

__version__ = "0.1.0"
