import numpy as np
import pytest

from delaes import TrainConfig, UsageError, build_vocabulary, train
from delaes.training import (
    RmsPropState,
    backward,
    evaluate_qwk,
    history_to_csv,
    make_batches,
    mse_loss,
    rmsprop_step,
)

from synthdata import make_corpus, make_table, overfit_config, tiny_model


@pytest.fixture(scope="module")
def corpus():
    return make_corpus(12, seed=5)


@pytest.fixture(scope="module")
def vocab(corpus):
    return build_vocabulary([corpus])


class TestMakeBatches:
    def test_sizes(self, corpus, vocab):
        three = corpus.subset([1, 2, 3])
        batches = make_batches(three, vocab, batch_size=2, shuffle_seed=0)
        assert [len(b) for b in batches] == [2, 1]

    def test_equal_length_essays_all_true_mask(self, vocab):
        subset = make_corpus(6, seed=2, min_len=10, max_len=11)
        batches = make_batches(subset, vocab, batch_size=6, shuffle_seed=0)
        assert batches[0].mask.all()
        assert (batches[0].indices != 0).all()

    def test_same_seed_same_order(self, corpus, vocab):
        first = make_batches(corpus, vocab, 4, shuffle_seed=9)
        second = make_batches(corpus, vocab, 4, shuffle_seed=9)
        assert [b.essay_ids for b in first] == [b.essay_ids for b in second]

    def test_union_is_input_set(self, corpus, vocab):
        batches = make_batches(corpus, vocab, 5, shuffle_seed=1)
        seen = [eid for b in batches for eid in b.essay_ids]
        assert sorted(seen) == [e.essay_id for e in corpus]

    def test_min_length_respected(self, corpus, vocab):
        batches = make_batches(corpus, vocab, 4, shuffle_seed=0, min_length=40)
        assert all(b.indices.shape[1] == 40 for b in batches)

    def test_empty_set(self, corpus, vocab):
        empty = corpus.subset([])
        assert make_batches(empty, vocab, 4, shuffle_seed=0) == []

    def test_mask_marks_real_positions(self, corpus, vocab):
        batches = make_batches(corpus, vocab, 12, shuffle_seed=3)
        batch = batches[0]
        lengths = {eid: len(e.tokens) for eid, e in
                   zip((e.essay_id for e in corpus), corpus)}
        for row, eid in enumerate(batch.essay_ids):
            assert batch.mask[row].sum() == lengths[eid]
            assert batch.mask[row, :lengths[eid]].all()


class TestMseLoss:
    def test_zero_when_equal(self):
        y = np.array([0.1, 0.9])
        assert mse_loss(y, y) == 0.0

    def test_direct_arithmetic(self):
        assert mse_loss(np.array([0.2, 0.8]), np.array([0.4, 0.5])) == \
            pytest.approx(0.065, abs=1e-12)

    def test_constant_offset_identity(self):
        rng = np.random.default_rng(0)
        y = rng.uniform(0.2, 0.8, 50)
        delta = 0.1
        assert mse_loss(y, y + delta) == pytest.approx(delta ** 2, rel=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            mse_loss(np.zeros(3), np.zeros(4))


class TestRmsProp:
    def test_zero_gradient_leaves_params(self):
        _, _, params = tiny_model(dtype=np.float64)
        state = RmsPropState.for_params(params, params.config)
        state.acc["dense.bias"][:] = 0.5
        before = params.dense.bias.copy()
        grads = {name: np.zeros_like(t) for name, t in params.named_tensors()}
        rmsprop_step(params, grads, state)
        np.testing.assert_array_equal(params.dense.bias, before)
        np.testing.assert_allclose(state.acc["dense.bias"], 0.45)  # decayed by rho

    def test_scalar_hand_arithmetic(self):
        cfg = TrainConfig(learning_rate=0.001, rmsprop_decay=0.9,
                          rmsprop_epsilon=1e-7)
        _, _, params = tiny_model(dtype=np.float64)
        params.config = cfg
        state = RmsPropState.for_params(params, cfg)
        before = float(params.dense.bias[0])
        grads = {name: np.zeros_like(t) for name, t in params.named_tensors()}
        grads["dense.bias"] = np.array([1.0])
        rmsprop_step(params, grads, state)
        assert state.acc["dense.bias"][0] == pytest.approx(0.1, rel=1e-12)
        delta = float(params.dense.bias[0]) - before
        # hand: -0.001 / (sqrt(0.1) + 1e-7)
        assert delta == pytest.approx(-3.1623e-3, abs=1e-7)

    def test_learning_rate_default(self):
        assert TrainConfig().learning_rate == 0.001

    def test_accumulators_stay_nonnegative(self):
        from test_gradients import one_essay_batch
        _, vocab, params = tiny_model(dtype=np.float64)
        state = RmsPropState.for_params(params, params.config)
        batch = one_essay_batch(
            vocab, ["alpha", "bravo", "charlie", "delta", "echo"])
        for _ in range(5):
            _, grads = backward(batch, params, dropout_seed=1)
            rmsprop_step(params, grads, state)
        for name, acc in state.acc.items():
            assert (acc >= 0).all(), name


class TestTrainLoop:
    def _setup(self, n=24, epochs=5, **cfg_overrides):
        corpus = make_corpus(n, seed=5)
        train_set = corpus.subset(range(1, n - 7))
        val_set = corpus.subset(range(n - 7, n + 1))
        cfg = overfit_config(epochs=epochs, **cfg_overrides)
        vocab = build_vocabulary([train_set])
        table = make_table(cfg.embedding_dim, seed=9)
        return train_set, val_set, vocab, table, cfg

    def test_zero_epochs_returns_initial_params(self):
        train_set, val_set, vocab, table, cfg = self._setup(epochs=0)
        params, history = train(train_set, val_set, vocab, table, cfg)
        assert history == []
        assert params.config == cfg

    def test_history_length_and_csv(self):
        train_set, val_set, vocab, table, cfg = self._setup(epochs=3)
        _, history = train(train_set, val_set, vocab, table, cfg)
        assert [h.epoch for h in history] == [1, 2, 3]
        csv = history_to_csv(history)
        assert csv.startswith("epoch,train_mse,val_qwk\n1,")
        assert len(csv.strip().splitlines()) == 4

    def test_fixed_seed_bit_identical_history(self):
        train_set, val_set, vocab, table, cfg = self._setup(epochs=4, dropout=0.3)
        _, first = train(train_set, val_set, vocab, table, cfg)
        _, second = train(train_set, val_set, vocab, table, cfg)
        assert first == second

    def test_empty_train_set_rejected(self):
        train_set, val_set, vocab, table, cfg = self._setup()
        with pytest.raises(UsageError):
            train(train_set.subset([]), val_set, vocab, table, cfg)

    def test_loss_monotone_with_fixed_batches_and_no_dropout(self):
        train_set, val_set, vocab, table, cfg = self._setup(
            n=24, epochs=40, dropout=0.0, reshuffle_each_epoch=False,
            learning_rate=0.002)
        _, history = train(train_set, val_set, vocab, table, cfg)
        mses = [h.train_mse for h in history]
        for epoch_index in range(1, len(mses)):
            assert mses[epoch_index] <= mses[epoch_index - 1] + 1e-12, (
                f"loss increased at epoch {epoch_index + 1}: "
                f"{mses[epoch_index - 1]} -> {mses[epoch_index]}"
            )

    def test_pad_embedding_row_stays_zero_after_training(self):
        train_set, val_set, vocab, table, cfg = self._setup(epochs=6)
        params, _ = train(train_set, val_set, vocab, table, cfg)
        np.testing.assert_array_equal(params.embedding[0],
                                      np.zeros(cfg.embedding_dim))

    def test_best_epoch_selection_prefers_highest_val(self):
        train_set, val_set, vocab, table, cfg = self._setup(epochs=8)
        params, history = train(train_set, val_set, vocab, table, cfg)
        best = max(h.val_qwk for h in history)
        got = evaluate_qwk(params, vocab, val_set)
        assert got == pytest.approx(best, abs=1e-12)

    def test_grad_clip_runs(self):
        train_set, val_set, vocab, table, cfg = self._setup(
            epochs=2, grad_clip=0.5)
        _, history = train(train_set, val_set, vocab, table, cfg)
        assert len(history) == 2
