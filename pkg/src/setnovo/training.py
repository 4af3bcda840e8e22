"""Teacher-forced training, validation and checkpoints."""

from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .chem import END, PAD, START, TOKEN_MASSES
from .config import Config
from .features import batch_features, spectrum_summary
from .nn.autograd import no_grad
from .nn.losses import focal_loss
from .nn.model import SequencingModel
from .nn.optim import Adam, AdamState, PlateauHalving
from .spectra import Spectrum, preprocess

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Example:
    mz: np.ndarray
    intensity: np.ndarray
    summary: Optional[np.ndarray]
    tokens: tuple
    residue_total: float


def build_model(config: Config) -> SequencingModel:
    model = SequencingModel(conv=config.conv, fc=config.fc, d_lstm=config.d_lstm,
                            use_lstm=config.use_lstm, seed=config.seed)
    return model.astype(config.np_dtype)


def prepare(spectra: Sequence[Spectrum], config: Config) -> List[Example]:
    out = []
    for s in spectra:
        if s.annotation is None:
            raise ValueError(f"spectrum {s.scan_id!r} has no annotation")
        p = preprocess(s, config.n_peaks, config.normalize_intensity)
        summary = (spectrum_summary(p.mz, p.intensity, config.d_lstm, config.mz_resolution)
                   if config.use_lstm else None)
        out.append(Example(p.mz, p.intensity, summary, p.annotation.tokens, p.residue_mass_total))
    return out


def make_batch(examples: Sequence[Example], config: Config) -> dict:
    """Pad a list of examples into dense arrays for one teacher-forced pass.

    Peak sets are padded by repeating their first peak, which leaves the
    max-pooled T-Net output unchanged.
    """
    B = len(examples)
    P = max(len(e.mz) for e in examples)
    T = max(len(e.tokens) for e in examples) + 1
    mz = np.empty((B, P))
    inten = np.empty((B, P))
    prev = np.full((B, T), PAD, dtype=np.int64)
    targets = np.full((B, T), PAD, dtype=np.int64)
    prefix = np.zeros((B, T))
    suffix = np.zeros((B, T))
    for b, e in enumerate(examples):
        n = len(e.mz)
        mz[b, :n], mz[b, n:] = e.mz, e.mz[0]
        inten[b, :n], inten[b, n:] = e.intensity, e.intensity[0]
        L = len(e.tokens)
        prev[b, 0] = START
        prev[b, 1:L + 1] = e.tokens
        targets[b, :L] = e.tokens
        targets[b, L] = END
        cum = np.concatenate([[0.0], np.cumsum(TOKEN_MASSES[list(e.tokens)])])
        prefix[b, :L + 1] = cum
        suffix[b, :L + 1] = e.residue_total - cum
    batch = {
        "features": batch_features(mz, inten, prefix, suffix, config.c, dtype=config.np_dtype),
        "prev": prev,
        "targets": targets,
        "mask": targets != PAD,
    }
    if config.use_lstm:
        batch["summary"] = np.stack([e.summary for e in examples])
    return batch


def batch_loss(model: SequencingModel, batch: dict, gamma: float):
    logits = model.forward(batch["features"], batch["prev"], batch.get("summary"))
    return focal_loss(logits, batch["targets"], gamma=gamma, mask=batch["mask"])


def evaluate_loss(model: SequencingModel, examples: Sequence[Example], config: Config) -> float:
    total, count = 0.0, 0
    with no_grad():
        for lo in range(0, len(examples), config.batch_size):
            batch = make_batch(examples[lo:lo + config.batch_size], config)
            n = int(batch["mask"].sum())
            total += float(batch_loss(model, batch, config.gamma).data) * n
            count += n
    return total / count


@dataclass
class TrainResult:
    best_valid_loss: float
    best_step: int
    history: List[dict] = field(default_factory=list)
    initial_valid_loss: float = float("nan")


def train(model: SequencingModel, train_spectra: Sequence[Spectrum], valid_spectra: Sequence[Spectrum],
          config: Config, log_path=None, optimizer: Optional[Adam] = None,
          on_eval: Optional[Callable[[dict], None]] = None) -> TrainResult:
    """Train with Adam; keeps and finally restores the best-validation weights.

    Validation loss is computed every ``eval_interval`` steps and once more at
    the end. The learning rate is halved after ``lr_patience`` evaluations
    without a new minimum.
    """
    rng = np.random.default_rng(config.seed)
    train_ex = prepare(train_spectra, config)
    valid_ex = prepare(valid_spectra, config)
    if not train_ex or not valid_ex:
        raise ValueError("training and validation sets must be non-empty")
    params = model.parameters()
    opt = optimizer or Adam(params, lr=config.lr)
    sched = PlateauHalving(config.lr_patience)
    initial = evaluate_loss(model, valid_ex, config)
    result = TrainResult(np.inf, 0, initial_valid_loss=initial)
    best_params = None
    log = open(log_path, "w") if log_path else None
    if log:
        log.write("step\ttrain_loss\tvalid_loss\tlr\n")
    step = 0
    running = []
    t0 = time.time()

    def do_eval():
        nonlocal best_params
        valid = evaluate_loss(model, valid_ex, config)
        train_loss = float(np.mean(running)) if running else float("nan")
        running.clear()
        entry = {"step": step, "train_loss": train_loss, "valid_loss": valid, "lr": opt.lr}
        result.history.append(entry)
        if log:
            log.write(f"{step}\t{train_loss:.6g}\t{valid:.6g}\t{opt.lr:.6g}\n")
            log.flush()
        logger.info("step %d train %.4f valid %.4f lr %.2e (%.0fs)", step, train_loss, valid,
                    opt.lr, time.time() - t0)
        if valid < result.best_valid_loss:
            result.best_valid_loss, result.best_step = valid, step
            best_params = {k: p.data.copy() for k, p in params.items()}
        opt.lr *= sched.update(valid)
        if on_eval:
            on_eval(entry)

    try:
        for _ in range(config.epochs):
            order = rng.permutation(len(train_ex))
            for lo in range(0, len(order), config.batch_size):
                batch = make_batch([train_ex[i] for i in order[lo:lo + config.batch_size]], config)
                opt.zero_grad()
                loss = batch_loss(model, batch, config.gamma)
                loss.backward()
                opt.step()
                running.append(float(loss.data))
                step += 1
                if step % config.eval_interval == 0:
                    do_eval()
        if step % config.eval_interval != 0:
            do_eval()
    finally:
        if log:
            log.close()
    if best_params is not None:
        for k, p in params.items():
            p.data[...] = best_params[k]
    return result


def save_checkpoint(path, model: SequencingModel, config: Config,
                    optimizer: Optional[Adam] = None) -> None:
    arrays = {f"param/{k}": p.data for k, p in model.parameters().items()}
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": config.to_dict(),
        "architecture_hash": config.architecture_hash(),
        "architecture": model.architecture(),
    }
    if optimizer is not None:
        meta["adam_step"] = optimizer.state.step
        meta["lr"] = optimizer.lr
        for k, m in optimizer.state.m.items():
            arrays[f"adam_m/{k}"] = m
            arrays[f"adam_v/{k}"] = optimizer.state.v[k]
    arrays["meta"] = np.array(json.dumps(meta))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path, config: Optional[Config] = None):
    """Load ``(model, config, adam_state)`` from a checkpoint.

    If ``config`` is given, its architecture must match the stored one;
    otherwise the stored config is used.
    """
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {meta.get('version')}")
        stored = Config.from_dict(meta["config"])
        if config is None:
            config = stored
        elif config.architecture_hash() != meta["architecture_hash"]:
            raise CheckpointError(
                f"checkpoint architecture {meta['architecture']} does not match config "
                f"(conv={list(config.conv)}, fc={list(config.fc)}, d_lstm={config.d_lstm}, "
                f"use_lstm={config.use_lstm})")
        model = build_model(config)
        params = model.parameters()
        stored_names = {k[len("param/"):] for k in data.files if k.startswith("param/")}
        if stored_names != set(params):
            raise CheckpointError("checkpoint parameter names do not match the model")
        for name, p in params.items():
            arr = data[f"param/{name}"]
            if arr.shape != p.shape:
                raise CheckpointError(f"shape mismatch for {name}: {arr.shape} vs {p.shape}")
            p.data = arr.astype(config.np_dtype)
        state = AdamState(step=meta.get("adam_step", 0))
        for k in data.files:
            if k.startswith("adam_m/"):
                name = k[len("adam_m/"):]
                state.m[name] = data[k].copy()
                state.v[name] = data[f"adam_v/{name}"].copy()
    return model, config, state
