import itertools

import numpy as np
import pytest

from setnovo.chem import END, START, TOKEN_MASSES, Peptide
from setnovo.features import batch_features, spectrum_summary
from setnovo.nn.autograd import Tensor, no_grad, numpy_log_softmax


def numeric_grad(f, param: Tensor, indices, eps=1e-6):
    """Central differences of scalar ``f()`` w.r.t. selected entries of ``param``."""
    out = []
    flat = param.data.reshape(-1)
    for i in indices:
        old = flat[i]
        flat[i] = old + eps
        up = f()
        flat[i] = old - eps
        down = f()
        flat[i] = old
        out.append((up - down) / (2 * eps))
    return np.array(out)


def max_rel_error(analytic, numeric, floor=1e-6):
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)))


def gradcheck(build_loss, params, n_samples=50, rng=None, eps=1e-6):
    """Compare backward() against finite differences on ``n_samples`` random parameter entries.

    ``build_loss`` builds a fresh scalar Tensor from the current parameter data.
    Returns the largest relative error and the number of entries checked.
    """
    rng = rng or np.random.default_rng(0)
    for p in params.values():
        p.grad = None
    build_loss().backward()
    analytic_all = {k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for k, p in params.items()}
    sizes = np.array([p.data.size for p in params.values()])
    names = list(params)
    worst = 0.0
    checked = 0
    # spread samples over every parameter, then fill the rest proportionally
    picks = {k: [] for k in names}
    for k in names:
        picks[k].append(int(rng.integers(params[k].data.size)))
    while sum(len(v) for v in picks.values()) < n_samples:
        k = names[rng.choice(len(names), p=sizes / sizes.sum())]
        picks[k].append(int(rng.integers(params[k].data.size)))

    def f():
        with no_grad():
            return float(build_loss().data)

    for k, idx in picks.items():
        num = numeric_grad(f, params[k], idx, eps)
        ana = analytic_all[k].reshape(-1)[idx]
        worst = max(worst, max_rel_error(ana, num))
        checked += len(idx)
    return worst, checked


def teacher_forced_score(model, spectrum, tokens, c=100.0, resolution=0.1):
    """Sum of log-probabilities of ``tokens`` followed by end, via one teacher-forced pass."""
    total = spectrum.residue_mass_total
    L = len(tokens)
    cum = np.concatenate([[0.0], np.cumsum(TOKEN_MASSES[list(tokens)])])
    feats = batch_features(spectrum.mz[None], spectrum.intensity[None], cum[None], (total - cum)[None], c,
                           dtype=model.dtype)
    prev = np.array([[START, *tokens]])
    summary = None
    if model.use_lstm:
        summary = spectrum_summary(spectrum.mz, spectrum.intensity, model.d_lstm, resolution)[None]
    with no_grad():
        logits = model.forward(feats, prev, summary).data[0].astype(np.float64)
    logp = numpy_log_softmax(logits)
    targets = list(tokens) + [END]
    return float(sum(logp[t, tok] for t, tok in enumerate(targets)))


def exhaustive_feasible(alphabet, target_residue_mass, max_length, precursor_tolerance=0.01):
    """Every sequence over ``alphabet`` whose residue mass is within tolerance of the target."""
    out = []
    for L in range(1, max_length + 1):
        for seq in itertools.product(alphabet, repeat=L):
            if abs(TOKEN_MASSES[list(seq)].sum() - target_residue_mass) <= precursor_tolerance:
                out.append(tuple(int(t) for t in seq))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
