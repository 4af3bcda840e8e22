"""Amino-acid chemistry: vocabulary, monoisotopic masses and fragment ions.

The vocabulary has 26 tokens: three special tokens (pad, start, end), the 20
standard residues with cysteine carbamidomethylated as a fixed modification,
and three variable modifications (oxidised methionine, deamidated asparagine
and glutamine).

Masses are monoisotopic, in Dalton, 64-bit floats.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

PROTON = 1.007276466621
H2O = 18.0105646837
NH3 = 17.0265491015

CARBAMIDOMETHYL = 57.021464
OXIDATION = 15.994915
DEAMIDATION = 0.984016

# residue masses, i.e. amino acid minus water
_STANDARD_RESIDUES = {
    "A": 71.037113805,
    "R": 156.101111050,
    "N": 114.042927470,
    "D": 115.026943065,
    "C": 103.009184505,
    "E": 129.042593135,
    "Q": 128.058577540,
    "G": 57.021463735,
    "H": 137.058911875,
    "I": 113.084064015,
    "L": 113.084064015,
    "K": 128.094963050,
    "M": 131.040484645,
    "F": 147.068413945,
    "P": 97.052763875,
    "S": 87.032028435,
    "T": 101.047678505,
    "W": 186.079312980,
    "Y": 163.063328575,
    "V": 99.068413945,
}


class TokenKind(Enum):
    RESIDUE = "residue"
    MODIFIED = "modified-residue"
    START = "start"
    END = "end"
    PAD = "pad"


@dataclass(frozen=True)
class Token:
    id: int
    symbol: str
    kind: TokenKind
    mass: float

    @property
    def is_residue(self) -> bool:
        return self.kind in (TokenKind.RESIDUE, TokenKind.MODIFIED)


def _build_vocab() -> tuple[Token, ...]:
    tokens = [
        Token(0, "<pad>", TokenKind.PAD, 0.0),
        Token(1, "<start>", TokenKind.START, 0.0),
        Token(2, "<end>", TokenKind.END, 0.0),
    ]
    for aa, mass in _STANDARD_RESIDUES.items():
        if aa == "C":
            tokens.append(Token(len(tokens), "C(+57.02)", TokenKind.MODIFIED,
                                mass + CARBAMIDOMETHYL))
        else:
            tokens.append(Token(len(tokens), aa, TokenKind.RESIDUE, mass))
    for symbol, base, delta in (("M(+15.99)", "M", OXIDATION),
                                ("N(+.98)", "N", DEAMIDATION),
                                ("Q(+.98)", "Q", DEAMIDATION)):
        tokens.append(Token(len(tokens), symbol, TokenKind.MODIFIED,
                            _STANDARD_RESIDUES[base] + delta))
    return tuple(tokens)


VOCAB: tuple[Token, ...] = _build_vocab()
N_VOCAB = len(VOCAB)
PAD, START, END = 0, 1, 2
RESIDUE_IDS = tuple(t.id for t in VOCAB if t.is_residue)

# token mass per id, 0 for special tokens
TOKEN_MASSES = np.array([t.mass for t in VOCAB], dtype=np.float64)
RESIDUE_MASK = np.array([t.is_residue for t in VOCAB], dtype=bool)

_BY_SYMBOL = {t.symbol: t.id for t in VOCAB}
# plain C is read as the fixed-modified cysteine
_BY_SYMBOL["C"] = _BY_SYMBOL["C(+57.02)"]
_ALIASES = {
    "M(ox)": "M(+15.99)", "M(Oxidation)": "M(+15.99)", "M(+15.995)": "M(+15.99)",
    "N(+0.98)": "N(+.98)", "N(Deamidation)": "N(+.98)",
    "Q(+0.98)": "Q(+.98)", "Q(Deamidation)": "Q(+.98)",
    "C(+57.021)": "C(+57.02)", "C(Carbamidomethylation)": "C(+57.02)",
}
for _alias, _canonical in _ALIASES.items():
    _BY_SYMBOL[_alias] = _BY_SYMBOL[_canonical]

_TOKEN_RE = re.compile(r"[A-Z](?:\([^)]*\))?")


def token_id(symbol: str) -> int:
    try:
        return _BY_SYMBOL[symbol]
    except KeyError:
        raise ValueError(f"unknown residue {symbol!r}") from None


def residue_mass(token: int | str) -> float:
    """Monoisotopic residue mass of a residue token.

    Raises
    ------
    ValueError
        For pad/start/end, which carry no mass.
    """
    tid = token_id(token) if isinstance(token, str) else int(token)
    tok = VOCAB[tid]
    if not tok.is_residue:
        raise ValueError(f"no mass defined for special token {tok.symbol}")
    return tok.mass


@dataclass(frozen=True)
class IonType:
    name: str
    series: str
    charge: int
    neutral_loss: float


ION_TYPES: tuple[IonType, ...] = (
    IonType("b", "b", 1, 0.0),
    IonType("y", "y", 1, 0.0),
    IonType("b2+", "b", 2, 0.0),
    IonType("y2+", "y", 2, 0.0),
    IonType("b-H2O", "b", 1, H2O),
    IonType("y-H2O", "y", 1, H2O),
    IonType("b-NH3", "b", 1, NH3),
    IonType("y-NH3", "y", 1, NH3),
)
N_ION = len(ION_TYPES)

_ION_IS_B = np.array([ion.series == "b" for ion in ION_TYPES])
_ION_CHARGE = np.array([ion.charge for ion in ION_TYPES], dtype=np.float64)
_ION_LOSS = np.array([ion.neutral_loss for ion in ION_TYPES], dtype=np.float64)


@dataclass(frozen=True)
class Peptide:
    """An ordered sequence of residue token ids."""

    tokens: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))
        for t in self.tokens:
            if not 0 <= t < N_VOCAB or not VOCAB[t].is_residue:
                raise ValueError(f"peptide may only hold residue tokens, got id {t}")

    @classmethod
    def from_string(cls, text: str) -> "Peptide":
        text = text.strip()
        pos = 0
        tokens = []
        for m in _TOKEN_RE.finditer(text):
            if m.start() != pos:
                raise ValueError(f"cannot parse peptide {text!r} at offset {pos}")
            tokens.append(token_id(m.group()))
            pos = m.end()
        if pos != len(text):
            raise ValueError(f"cannot parse peptide {text!r} at offset {pos}")
        return cls(tuple(tokens))

    def __str__(self) -> str:
        return "".join(VOCAB[t].symbol for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def residue_masses(self) -> np.ndarray:
        return TOKEN_MASSES[list(self.tokens)]

    @property
    def mass(self) -> float:
        return precursor_mass(self)


def precursor_mass(peptide: Peptide | Sequence[int] | str) -> float:
    """Neutral peptide mass: residue masses plus one water."""
    if isinstance(peptide, str):
        peptide = Peptide.from_string(peptide)
    elif not isinstance(peptide, Peptide):
        peptide = Peptide(tuple(peptide))
    if not peptide.tokens:
        raise ValueError("empty peptide has no precursor mass")
    return float(sum(VOCAB[t].mass for t in peptide.tokens)) + H2O


def precursor_mz(mass: float, charge: int) -> float:
    return (mass + charge * PROTON) / charge


def neutral_mass(mz: float, charge: int) -> float:
    return (mz - PROTON) * charge


def theoretical_mz(prefix_mass: float, suffix_mass: float, candidate: int | str,
                   ion: IonType) -> float:
    """m/z of the fragment produced by appending ``candidate`` to the prefix.

    ``prefix_mass`` is the residue mass already decoded; ``suffix_mass`` is the
    residue mass still to be explained before ``candidate`` is placed. b-series
    ions cover the prefix plus the candidate; y-series ions cover what remains
    of the suffix after the candidate, plus a water.
    """
    if prefix_mass < 0 or suffix_mass < 0:
        raise ValueError("prefix and suffix masses must be non-negative")
    m = residue_mass(candidate)
    if ion.series == "b":
        neutral = prefix_mass + m
    else:
        neutral = suffix_mass - m + H2O
    return (neutral + ion.charge * PROTON - ion.neutral_loss) / ion.charge


def theoretical_mz_matrix(prefix_mass, suffix_mass) -> np.ndarray:
    """Theoretical m/z for every (token, ion type) pair.

    Accepts scalars or equally shaped arrays of prefix/suffix masses and
    returns an array of shape ``prefix.shape + (N_VOCAB, N_ION)``. Rows of
    special tokens are +inf; callers mask them out.
    """
    prefix = np.asarray(prefix_mass, dtype=np.float64)[..., None, None]
    suffix = np.asarray(suffix_mass, dtype=np.float64)[..., None, None]
    m = TOKEN_MASSES[:, None]
    neutral = np.where(_ION_IS_B, prefix + m, suffix - m + H2O)
    mz = (neutral + _ION_CHARGE * PROTON - _ION_LOSS) / _ION_CHARGE
    return np.where(RESIDUE_MASK[:, None], mz, np.inf)


def fragment_mz(peptide: Peptide) -> np.ndarray:
    """All eight fragment ion m/z values at every cleavage site.

    Returns shape ``(len(peptide) - 1, N_ION)``; row k is the cleavage after
    residue k (0-based).
    """
    masses = peptide.residue_masses
    prefix = np.cumsum(masses)[:-1]
    suffix = masses.sum() - prefix
    neutral = np.where(_ION_IS_B, prefix[:, None], suffix[:, None] + H2O)
    return (neutral + _ION_CHARGE * PROTON - _ION_LOSS) / _ION_CHARGE


def residue_masses_of(tokens: Iterable[int]) -> np.ndarray:
    return TOKEN_MASSES[list(tokens)]
