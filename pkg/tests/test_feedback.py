import numpy as np
import pytest

from foresight import feedback as FB
from foresight import nn
from foresight.corpus import FeedbackExample
from foresight.errors import (
    Corrupt,
    EmptySequence,
    EmptyTraining,
    SequenceTooLong,
    VersionMismatch,
)
from foresight.strategies import PLANABLE, Strategy
from foresight.user_state import UserState

A, B = Strategy.QUESTION, Strategy.RESTATEMENT_OR_PARAPHRASING


def state(vec, idx=1):
    return UserState(vector=np.asarray(vec, dtype=np.float64), round_index=idx)


def example(seq, score, states=(), augmented=False):
    return FeedbackExample(
        dialogue_id="d",
        strategy_sequence=tuple(seq),
        user_state_rounds=tuple(range(1, len(states) + 1)),
        score=float(score),
        is_augmented=augmented,
        states=tuple(states),
    )


def random_examples(rng, n, d_state=5, l_max=3):
    out = []
    for _ in range(n):
        length = int(rng.integers(1, l_max + 1))
        seq = [PLANABLE[int(rng.integers(0, 7))] for _ in range(length)]
        states = tuple(
            state(rng.normal(size=d_state), idx=i + 1) for i in range(int(rng.integers(0, 3)))
        )
        out.append(example(seq, float(rng.uniform(1, 5)), states))
    return out


class TestFeaturize:
    def test_single_strategy(self):
        phi = FB.featurize_sequence([A], (), d_state=3)
        assert phi.shape == (FB.feature_dim(3),)
        assert phi[int(A)] == 1.0
        assert phi[:7].sum() == 1.0
        assert phi[7:56].sum() == 0.0  # no bigrams
        assert phi[56] == 1.0  # length
        np.testing.assert_array_equal(phi[57:], np.zeros(3))

    def test_repeated_strategy_bigram(self):
        phi = FB.featurize_sequence([A, A], (), d_state=0)
        assert phi[7 + int(A) * 7 + int(A)] == 1.0
        assert phi[:7].sum() == 1.0

    def test_dimension_constant(self, rng):
        dims = set()
        for ex in random_examples(rng, 20):
            dims.add(FB.featurize_sequence(ex.strategy_sequence, ex.states, 5).shape)
        assert dims == {(FB.feature_dim(5),)}

    def test_latest_state_embedded(self):
        s = state([1.0, 2.0, 3.0])
        phi = FB.featurize_sequence([A], (s,), d_state=3)
        np.testing.assert_array_equal(phi[-3:], [1.0, 2.0, 3.0])

    def test_empty_sequence_rejected(self):
        with pytest.raises(EmptySequence):
            FB.featurize_sequence([], (), d_state=0)


class TestPredict:
    def _constant_model(self, bias, d_state=0):
        weights = np.zeros(FB.feature_dim(d_state) + 1)
        weights[-1] = bias
        return FB.LinearFeedbackModel(weights, d_state=d_state, l_max=4)

    def test_constant_model(self):
        model = self._constant_model(3.0)
        assert FB.predict(model, [A], ()) == 3.0
        assert FB.predict(model, [A, B], ()) == 3.0

    def test_clamp_upper(self):
        weights = np.zeros(FB.feature_dim(0) + 1)
        weights[int(A)] = 10.0
        model = FB.LinearFeedbackModel(weights, d_state=0, l_max=4)
        assert FB.predict(model, [A], ()) == 5.0

    def test_clamp_lower(self):
        model = self._constant_model(-7.0)
        assert FB.predict(model, [A], ()) == 1.0

    def test_planted_weights_exact_before_clamp(self, rng):
        d_state = 4
        weights = rng.normal(size=FB.feature_dim(d_state) + 1)
        model = FB.LinearFeedbackModel(weights, d_state=d_state, l_max=4)
        s = state(rng.normal(size=d_state))
        phi = FB.featurize_sequence([A, B], (s,), d_state)
        expected = float(phi @ weights[:-1] + weights[-1])
        assert model.raw_score([A, B], (s,)) == pytest.approx(expected, abs=1e-9)

    def test_errors(self):
        model = self._constant_model(3.0)
        with pytest.raises(EmptySequence):
            FB.predict(model, [], ())
        with pytest.raises(SequenceTooLong):
            FB.predict(model, [A] * 5, ())

    def test_always_in_likert_range(self, rng):
        weights = rng.normal(size=FB.feature_dim(2) + 1) * 10
        model = FB.LinearFeedbackModel(weights, d_state=2, l_max=6)
        for ex in random_examples(rng, 50, d_state=2, l_max=6):
            value = FB.predict(model, ex.strategy_sequence, ex.states)
            assert 1.0 <= value <= 5.0


class TestTrainLinear:
    def test_exact_recovery(self, rng):
        d_state = 5
        w_true = rng.normal(size=FB.feature_dim(d_state) + 1)
        examples = []
        for ex in random_examples(rng, 500, d_state=d_state):
            phi = np.concatenate(
                [FB.featurize_sequence(ex.strategy_sequence, ex.states, d_state), [1.0]]
            )
            examples.append(example(ex.strategy_sequence, float(phi @ w_true), ex.states))
        model = FB.train_linear(examples, ridge=1e-8, l_max=3, d_state=d_state)
        assert np.max(np.abs(model.weights - w_true)) < 1e-6

    def test_normal_equations(self, rng):
        d_state = 4
        examples = random_examples(rng, 120, d_state=d_state)
        ridge = 1e-4
        model = FB.train_linear(examples, ridge=ridge, l_max=3, d_state=d_state)
        phi = np.stack(
            [
                np.concatenate(
                    [FB.featurize_sequence(ex.strategy_sequence, ex.states, d_state), [1.0]]
                )
                for ex in examples
            ]
        )
        y = np.asarray([ex.score for ex in examples])
        residual = (phi.T @ phi + ridge * np.eye(phi.shape[1])) @ model.weights - phi.T @ y
        assert np.max(np.abs(residual)) < 1e-8

    def test_constant_targets(self, rng):
        examples = [example(ex.strategy_sequence, 4.0, ex.states)
                    for ex in random_examples(rng, 200, d_state=3)]
        model = FB.train_linear(examples, ridge=1e-8, l_max=3, d_state=3)
        assert model.weights[-1] == pytest.approx(4.0, abs=1e-4)
        assert np.max(np.abs(model.weights[:-1])) < 1e-4

    def test_huge_ridge_shrinks_weights(self, rng):
        examples = random_examples(rng, 100, d_state=3)
        model = FB.train_linear(examples, ridge=1e9, l_max=3, d_state=3)
        assert np.max(np.abs(model.weights)) < 1e-3

    def test_empty_training(self):
        with pytest.raises(EmptyTraining):
            FB.train_linear([])


class TestTrainNeural:
    def _config(self, **kw):
        defaults = dict(d_emb=16, heads=2, layers=1, l_max=4, d_state=5, seed=0)
        defaults.update(kw)
        return FB.NeuralUfpConfig(**defaults)

    def test_memorizes_single_example(self, rng):
        ex = example([A, B], 4.0, (state(rng.normal(size=5)),))
        model, log = FB.train_neural([ex], self._config(), epochs=500, lr=1e-2)
        assert log[-1][1] < 1e-3

    def test_no_states_is_finite(self, rng):
        ex = example([A], 3.0)
        model, _ = FB.train_neural([ex], self._config(), epochs=5, lr=1e-2)
        value = FB.predict(model, [A, B], ())
        assert np.isfinite(value)
        assert 1.0 <= value <= 5.0

    def test_mse_gradient_passes_finite_diff(self, rng):
        examples = [
            example([A, B], 4.0, (state(rng.normal(size=5)), state(rng.normal(size=5), idx=2))),
            example([B], 2.0),
        ]
        model = FB.NeuralFeedbackModel(self._config(d_emb=8))

        def f():
            terms = [model.example_loss(ex) for ex in examples]
            return nn.scale(nn.add(terms[0], terms[1]), 0.5)

        report = nn.finite_diff_check(f, model.store, eps=1e-4, tol=1e-4, max_coords=4, seed=29)
        assert report.passed, str(report)

    def test_diverged_loss_raised_on_nan(self, monkeypatch):
        ex = example([A], 5.0)
        model = FB.NeuralFeedbackModel(self._config())
        monkeypatch.setattr(FB, "NeuralFeedbackModel", lambda config: model)
        model.store["head.b"].data[0, 0] = np.nan
        with pytest.raises(FB.DivergedLoss):
            FB.train_neural([ex], self._config(), epochs=1, lr=1e-2)

    def test_sequence_too_long_rejected(self):
        ex = example([A] * 6, 3.0)
        with pytest.raises(SequenceTooLong):
            FB.train_neural([ex], self._config(l_max=4), epochs=1)


class TestAugment:
    def test_count_and_score(self, rng):
        base = random_examples(rng, 10)
        out = FB.augment(base, count=50, seed=1, l_max=3)
        added = [ex for ex in out if ex.is_augmented]
        assert len(out) == 60
        assert len(added) == 50
        assert all(ex.score == 1.0 for ex in added)
        assert all(1 <= len(ex.strategy_sequence) <= 3 for ex in added)

    def test_zero_count_unchanged(self, rng):
        base = random_examples(rng, 5)
        assert FB.augment(base, count=0, seed=1) == base

    def test_deterministic(self, rng):
        base = random_examples(rng, 10)
        a = FB.augment(base, count=20, seed=9, l_max=4)
        b = FB.augment(base, count=20, seed=9, l_max=4)
        assert [ex.strategy_sequence for ex in a] == [ex.strategy_sequence for ex in b]

    def test_borrows_real_state_prefixes(self, rng):
        base = random_examples(rng, 10)
        donors = {id(ex.states) for ex in base}
        added = [ex for ex in FB.augment(base, count=30, seed=2) if ex.is_augmented]
        assert all(id(ex.states) in donors for ex in added)

    def test_published_count(self, rng):
        base = random_examples(rng, 10)
        out = FB.augment(base, count=5000, seed=0, l_max=2)
        added = [ex for ex in out if ex.is_augmented]
        assert len(added) == 5000
        assert all(ex.score == 1.0 for ex in added)


class TestCheckpoints:
    def test_linear_roundtrip(self, rng):
        examples = random_examples(rng, 50)
        model = FB.train_linear(examples, ridge=1e-6, l_max=3, d_state=5)
        clone = FB.load(FB.save(model))
        np.testing.assert_array_equal(model.weights, clone.weights)
        for ex in examples[:10]:
            assert FB.predict(model, ex.strategy_sequence, ex.states) == FB.predict(
                clone, ex.strategy_sequence, ex.states
            )

    def test_neural_roundtrip(self, rng):
        ex = example([A, B], 4.0, (state(rng.normal(size=5)),))
        model, _ = FB.train_neural([ex], FB.NeuralUfpConfig(d_emb=8, heads=2, layers=1,
                                                            l_max=4, d_state=5, seed=0),
                                   epochs=3, lr=1e-2)
        clone = FB.load(FB.save(model))
        assert model.raw_score([A, B], ex.states) == clone.raw_score([A, B], ex.states)

    def test_corrupt_and_version(self, rng):
        model = FB.train_linear(random_examples(rng, 10), ridge=1e-6, l_max=3, d_state=5)
        blob = FB.save(model)
        with pytest.raises(Corrupt):
            FB.load(blob[:20])
        with pytest.raises(VersionMismatch):
            FB.load(blob.replace(b'"version":1', b'"version":3'))
        with pytest.raises(Corrupt):
            FB.load(blob.replace(b'"family":"feedback"', b'"family":"seqmodel"'))
