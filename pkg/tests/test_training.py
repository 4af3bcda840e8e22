import numpy as np
import pytest

from conftest import gradcheck
from setnovo.config import Config
from setnovo.decoder import denovo
from setnovo.knapsack import build_knapsack
from setnovo.nn.optim import Adam
from setnovo.synth import SynthConfig, generate
from setnovo.training import (CheckpointError, batch_loss, build_model, load_checkpoint, make_batch, prepare,
                              save_checkpoint, train)

SMALL = Config(conv=(8, 8, 16), fc=(16, 16, 8), d_lstm=16, batch_size=8, epochs=2, eval_interval=10)


def test_config_defaults_and_round_trip(tmp_path):
    cfg = Config()
    assert (cfg.n_peaks, cfg.c, cfg.lr, cfg.eval_interval, cfg.lr_patience, cfg.epochs) == (500, 100, 1e-3, 300, 10, 20)
    assert Config.loads(cfg.dumps()) == cfg
    cfg.save(tmp_path / "c.json")
    assert Config.load(tmp_path / "c.json") == cfg
    with pytest.raises(ValueError):
        Config.from_dict({"nonsense": 1})


def test_make_batch_layout():
    spectra = generate(SynthConfig(seed=0, length_range=(3, 5)), 4)
    batch = make_batch(prepare(spectra, SMALL), SMALL)
    B, T, P, F = batch["features"].shape
    assert (B, F) == (4, 209)
    assert T == max(len(s.annotation) for s in spectra) + 1
    for b, s in enumerate(spectra):
        L = len(s.annotation)
        assert list(batch["targets"][b, :L]) == list(s.annotation.tokens)
        assert batch["targets"][b, L] == 2
        assert batch["mask"][b].sum() == L + 1


def test_padding_rows_do_not_change_loss():
    spectra = generate(SynthConfig(seed=1, noise_peaks=5), 3)
    model = build_model(SMALL)
    ex = prepare(spectra, SMALL)
    together = make_batch(ex, SMALL)
    alone = [make_batch([e], SMALL) for e in ex]
    logits = model.forward(together["features"], together["prev"], together["summary"]).data
    for b, one in enumerate(alone):
        single = model.forward(one["features"], one["prev"], one["summary"]).data[0]
        T = single.shape[0]
        np.testing.assert_allclose(logits[b, :T], single, rtol=0, atol=1e-12)


def test_full_model_gradient_check():
    cfg = Config(conv=(6, 6, 8), fc=(8, 8, 6), d_lstm=8, batch_size=2)
    spectra = generate(SynthConfig(seed=2, noise_peaks=1, length_range=(2, 3), ion_coverage=0.3), 2)
    model = build_model(cfg)
    batch = make_batch(prepare(spectra, cfg), cfg)
    assert batch["features"].shape[2] <= 12
    err, n = gradcheck(lambda: batch_loss(model, batch, cfg.gamma), model.parameters(), n_samples=60,
                       rng=np.random.default_rng(0))
    assert n >= 50 and err < 1e-4


def test_training_reduces_validation_loss():
    cfg = SMALL.replace(epochs=2, eval_interval=20)
    sc = SynthConfig(alphabet=("G", "A"), seed=0, noise_peaks=5)
    model = build_model(cfg)
    result = train(model, generate(sc, 160), generate(SynthConfig(alphabet=("G", "A"), seed=1, noise_peaks=5), 40), cfg)
    assert result.best_valid_loss < result.initial_valid_loss


def test_training_without_lstm(tmp_path):
    cfg = SMALL.replace(use_lstm=False, epochs=1)
    model = build_model(cfg)
    result = train(model, generate(SynthConfig(seed=0), 24), generate(SynthConfig(seed=1), 8), cfg,
                   log_path=tmp_path / "log.tsv")
    assert not model.use_lstm
    lines = (tmp_path / "log.tsv").read_text().splitlines()
    assert lines[0] == "step\ttrain_loss\tvalid_loss\tlr"
    assert len(lines) == 1 + len(result.history)


def test_training_is_deterministic():
    def run():
        model = build_model(SMALL)
        train(model, generate(SynthConfig(seed=0), 24), generate(SynthConfig(seed=1), 8), SMALL)
        return model.parameters()
    a, b = run(), run()
    for k in a:
        np.testing.assert_array_equal(a[k].data, b[k].data)


def test_checkpoint_round_trip_bitwise(tmp_path):
    model = build_model(SMALL)
    opt = Adam(model.parameters())
    train(model, generate(SynthConfig(seed=0), 16), generate(SynthConfig(seed=1), 8), SMALL.replace(epochs=1),
          optimizer=opt)
    save_checkpoint(tmp_path / "m.npz", model, SMALL, opt)
    loaded, cfg, state = load_checkpoint(tmp_path / "m.npz")
    assert cfg == SMALL
    assert state.step == opt.state.step
    for k, p in model.parameters().items():
        np.testing.assert_array_equal(loaded.parameters()[k].data, p.data)
        np.testing.assert_array_equal(state.m[k], opt.state.m[k])
    spectra = generate(SynthConfig(seed=5), 4)
    table = build_knapsack(max_mass=2000.0)
    assert denovo(spectra, model, table, width=3) == denovo(spectra, loaded, table, width=3)


def test_checkpoint_rejects_mismatched_architecture(tmp_path):
    model = build_model(SMALL)
    save_checkpoint(tmp_path / "m.npz", model, SMALL)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "m.npz", SMALL.replace(conv=[8, 8, 32]))
