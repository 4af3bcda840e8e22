"""Peak-matching features and the sinusoidal m/z embedding.

For a decoding step with a known prefix mass, every observed peak is compared
against the theoretical m/z of every (token, ion type) pair. The difference is
squashed with ``exp(-|d| * c)`` so only near-exact matches produce a signal,
and the flattened activations are concatenated with the peak intensity.
"""

from __future__ import annotations

import numpy as np

from .chem import N_ION, N_VOCAB, RESIDUE_MASK, theoretical_mz_matrix

N_FEATURES = N_VOCAB * N_ION + 1
DEFAULT_C = 100.0
DEFAULT_RESOLUTION = 0.1


def _check_peaks(mz) -> np.ndarray:
    mz = np.asarray(mz, dtype=np.float64)
    if mz.shape[-1] == 0:
        raise ValueError("at least one peak is required")
    return mz


def difference_tensor(mz, prefix_mass: float, suffix_mass: float) -> np.ndarray:
    """Observed minus theoretical m/z, shape ``(n_peaks, N_VOCAB, N_ION)``.

    Special-token slots hold ``-inf``.
    """
    mz = _check_peaks(mz)
    if mz.ndim != 1:
        raise ValueError("expected a 1-d array of peak m/z")
    theo = theoretical_mz_matrix(prefix_mass, suffix_mass)
    return mz[:, None, None] - theo[None, :, :]


def activation(d, c: float = DEFAULT_C) -> np.ndarray:
    """Elementwise ``exp(-|d| * c)``; infinite differences map to 0."""
    if c <= 0:
        raise ValueError("c must be positive")
    return np.exp(-np.abs(d) * c)


def feature_matrix(mz, intensity, prefix_mass: float, suffix_mass: float,
                   c: float = DEFAULT_C) -> np.ndarray:
    """Per-step feature matrix of shape ``(n_peaks, N_VOCAB * N_ION + 1)``.

    Columns are token-major: column ``v * N_ION + j`` is token ``v`` with ion
    type ``j``. The last column is the peak intensity.
    """
    return batch_features(np.asarray(mz)[None], np.asarray(intensity)[None],
                          np.array([[prefix_mass]]), np.array([[suffix_mass]]), c)[0, 0]


def batch_features(mz, intensity, prefix_mass, suffix_mass, c: float = DEFAULT_C,
                   dtype=np.float64) -> np.ndarray:
    """Feature matrices for many spectra and decoding steps at once.

    Parameters
    ----------
    mz, intensity : array, shape (B, P)
        Peak sets, padded to a common length ``P``.
    prefix_mass, suffix_mass : array, shape (B, T)
        Residue mass decoded so far, and residue mass still unexplained.

    Returns
    -------
    array, shape (B, T, P, N_FEATURES)
    """
    mz = _check_peaks(mz)
    intensity = np.asarray(intensity, dtype=np.float64)
    if c <= 0:
        raise ValueError("c must be positive")
    B, P = mz.shape
    T = np.shape(prefix_mass)[1]
    theo = theoretical_mz_matrix(prefix_mass, suffix_mass).reshape(B, T, 1, N_VOCAB * N_ION)
    out = np.empty((B, T, P, N_FEATURES), dtype=dtype)
    diff = mz[:, None, :, None] - theo
    act = out[..., :-1]
    np.abs(diff, out=diff)
    diff *= -c
    np.exp(diff, out=act)
    act[..., ~np.repeat(RESIDUE_MASK, N_ION)] = 0.0
    out[..., -1] = intensity[:, None, :]
    return out


def discretize(mz, resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    return np.rint(np.asarray(mz, dtype=np.float64) / resolution)


def positional_embedding(mz, d: int, resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    """Sinusoidal embedding of the discretised m/z location.

    Even components are ``sin(loc / 10000**(2k/d))``, odd components the
    matching cosine. Works on scalars or arrays; adds a trailing axis of
    length ``d``.
    """
    if d % 2:
        raise ValueError("embedding dimension must be even")
    mz = np.asarray(mz, dtype=np.float64)
    if np.any(mz < 0):
        raise ValueError("m/z must be non-negative")
    loc = discretize(mz, resolution)[..., None]
    freq = 1.0 / 10000.0 ** (np.arange(0, d, 2, dtype=np.float64) / d)
    angle = loc * freq
    out = np.empty(mz.shape + (d,), dtype=np.float64)
    out[..., 0::2] = np.sin(angle)
    out[..., 1::2] = np.cos(angle)
    return out


def spectrum_summary(mz, intensity, d: int, resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    """Intensity-weighted sum of the peaks' positional embeddings."""
    mz = _check_peaks(mz)
    intensity = np.asarray(intensity, dtype=np.float64)
    return intensity @ positional_embedding(mz, d, resolution)
