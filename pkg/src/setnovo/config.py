"""Run configuration and its defaults."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from typing import Optional, Tuple

import numpy as np

from .chem import RESIDUE_IDS, VOCAB


@dataclass
class Config:
    # spectrum representation
    n_peaks: int = 500
    normalize_intensity: bool = True
    # features
    c: float = 100.0
    mz_resolution: float = 0.1
    # network
    conv: Tuple[int, int, int] = (64, 128, 256)
    fc: Tuple[int, int, int] = (256, 128, 128)
    d_lstm: int = 512
    use_lstm: bool = True
    gamma: float = 2.0
    dtype: str = "float64"
    # training
    batch_size: int = 16
    epochs: int = 20
    lr: float = 1e-3
    eval_interval: int = 300
    lr_patience: int = 10
    seed: int = 0
    # decoding
    beam_width: int = 5
    bin_width: float = 0.0005
    max_mass: float = 5000.0
    tolerance: float = 0.02
    precursor_tolerance: float = 0.01
    max_length: int = 50
    residues: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        self.conv = tuple(int(x) for x in self.conv)
        self.fc = tuple(int(x) for x in self.fc)
        if self.residues is not None:
            self.residues = tuple(self.residues)
        if self.d_lstm % 2:
            raise ValueError("d_lstm must be even")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    def residue_tokens(self):
        if self.residues is None:
            return RESIDUE_IDS
        from .chem import token_id
        return tuple(token_id(r) for r in self.residues)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "Config":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "Config":
        with open(path) as fh:
            return cls.loads(fh.read())

    def architecture_hash(self) -> str:
        arch = {k: self.to_dict()[k] for k in ("conv", "fc", "d_lstm", "use_lstm")}
        return hashlib.sha256(json.dumps(arch, sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **changes) -> "Config":
        data = self.to_dict()
        data.update(changes)
        return Config.from_dict(data)
