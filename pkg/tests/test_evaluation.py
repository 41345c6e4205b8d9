import numpy as np
import pytest

from foresight import evaluation as EV
from foresight import feedback as FB
from foresight import seqmodel as SM
from foresight.errors import EmptyDecisions, EmptyMatrix
from foresight.planner import PlannerConfig
from foresight.strategies import PLANABLE, Strategy

from _models import ConstantUfp

A, B = Strategy.QUESTION, Strategy.RESTATEMENT_OR_PARAPHRASING


def cm_from(counts: dict[tuple[int, int], int]) -> EV.ConfusionMatrix:
    cm = EV.ConfusionMatrix()
    for (truth, predicted), n in counts.items():
        for _ in range(n):
            cm.add(Strategy(truth), Strategy(predicted))
    return cm


class TestAccuracy:
    def test_diagonal_only(self):
        cm = cm_from({(i, i): 3 for i in range(7)})
        assert EV.accuracy(cm) == 1.0

    def test_all_off_diagonal(self):
        cm = cm_from({(0, 1): 4, (2, 3): 2})
        assert EV.accuracy(cm) == 0.0

    def test_hand_count(self):
        # 2x2 case [[2,1],[0,1]] embedded in the 7x7 matrix
        cm = cm_from({(0, 0): 2, (0, 1): 1, (1, 1): 1})
        assert EV.accuracy(cm) == pytest.approx(3 / 4)

    def test_empty_rejected(self):
        with pytest.raises(EmptyMatrix):
            EV.accuracy(EV.ConfusionMatrix())


class TestWeightedF1:
    def test_perfect(self):
        cm = cm_from({(i, i): 2 for i in range(7)})
        assert EV.weighted_f1(cm) == 1.0

    def test_never_predicted_class_contributes_zero(self):
        cm = cm_from({(0, 1): 5, (1, 1): 5})
        # class 0 has support but no correct predictions -> F1_0 = 0
        expected = 0.5 * 0.0 + 0.5 * (2 * 1.0 * (5 / 10) / (1.0 + 5 / 10))
        assert EV.weighted_f1(cm) == pytest.approx(expected)

    def test_two_class_hand_arithmetic(self):
        cm = cm_from({(0, 0): 3, (0, 1): 1, (1, 0): 2, (1, 1): 4})
        expected = 0.4 * (2 / 3) + 0.6 * (8 / 11)
        assert EV.weighted_f1(cm) == pytest.approx(expected, abs=1e-12)
        assert EV.weighted_f1(cm) == pytest.approx(0.7030, abs=5e-5)

    def test_permutation_equivariance(self, rng):
        counts = {(i, j): int(rng.integers(0, 5)) for i in range(7) for j in range(7)}
        cm = cm_from(counts)
        perm = rng.permutation(7)
        relabeled = cm_from({(int(perm[i]), int(perm[j])): n for (i, j), n in counts.items()})
        assert EV.weighted_f1(cm) == pytest.approx(EV.weighted_f1(relabeled), abs=1e-12)
        assert EV.accuracy(cm) == pytest.approx(EV.accuracy(relabeled), abs=1e-12)


class TestTopN:
    def test_full_alphabet_always_hits(self):
        rankings = [list(PLANABLE)] * 5
        truths = [A, B, A, B, A]
        assert EV.top_n_accuracy(rankings, truths, 7) == 1.0

    def test_top1_equals_accuracy(self):
        rankings = [[A, B], [B, A], [A, B]]
        truths = [A, A, B]
        top1 = EV.top_n_accuracy(rankings, truths, 1)
        assert top1 == pytest.approx(1 / 3)

    def test_hand_three_decisions(self):
        rankings = [[A, B], [B, A], [B, A]]
        truths = [B, B, A]
        assert EV.top_n_accuracy(rankings, truths, 1) == pytest.approx(1 / 3)
        assert EV.top_n_accuracy(rankings, truths, 2) == 1.0


class TestFeedbackMetric:
    def test_constant_model(self):
        decisions = [(A, ()), (B, ())]
        assert EV.feedback_metric(ConstantUfp(3.0), decisions) == 3.0

    def test_single_decision(self):
        ufp = ConstantUfp(4.25)
        assert EV.feedback_metric(ufp, [(A, ())]) == 4.25

    def test_empty_rejected(self):
        with pytest.raises(EmptyDecisions):
            EV.feedback_metric(ConstantUfp(3.0), [])


@pytest.fixture(scope="module")
def trained(resolved_examples):
    planning, feedback = resolved_examples
    ssg = SM.train_markov(planning, order=1, alpha=1.0)
    ufp = FB.train_linear(feedback, ridge=1e-6, l_max=4)
    return ssg, ufp, planning


class TestRunEval:
    def test_lambda_zero_equals_raw_argmax(self, trained):
        ssg, ufp, planning = trained
        test_examples = planning[:40]
        metrics = EV.run_eval(ssg, ufp, test_examples, PlannerConfig(lambda_=0.0, L=2, k=3))
        hits = 0
        for ex in test_examples:
            predicted = int(np.argmax(ssg.next_dist(ex.context(), [])))
            hits += predicted == int(ex.target_sequence[0])
        assert metrics.accuracy == pytest.approx(hits / len(test_examples))

    def test_top1_identical_to_accuracy(self, trained):
        ssg, ufp, planning = trained
        metrics = EV.run_eval(ssg, ufp, planning[:40], PlannerConfig())
        assert metrics.top_n_accuracy[1] == metrics.accuracy

    def test_deterministic(self, trained):
        ssg, ufp, planning = trained
        config = PlannerConfig()
        a = EV.run_eval(ssg, ufp, planning[:30], config)
        b = EV.run_eval(ssg, ufp, planning[:30], config)
        assert EV.metrics_json(a) == EV.metrics_json(b)

    def test_feedback_in_likert_range(self, trained):
        ssg, ufp, planning = trained
        metrics = EV.run_eval(ssg, ufp, planning[:30], PlannerConfig())
        assert 1.0 <= metrics.feedback <= 5.0

    def test_chosen_plus_truth_mode(self, trained):
        ssg, ufp, planning = trained
        metrics = EV.run_eval(
            ssg, ufp, planning[:30], PlannerConfig(),
            EV.EvalConfig(feedback_mode="chosen_plus_truth"),
        )
        assert 1.0 <= metrics.feedback <= 5.0

    def test_empty_rejected(self, trained):
        ssg, ufp, _ = trained
        with pytest.raises(EmptyDecisions):
            EV.run_eval(ssg, ufp, [], PlannerConfig())

    def test_metric_ufp_override(self, trained):
        ssg, ufp, planning = trained
        low = EV.run_eval(ssg, ufp, planning[:20], PlannerConfig(), metric_ufp=ConstantUfp(1.0))
        high = EV.run_eval(ssg, ufp, planning[:20], PlannerConfig(), metric_ufp=ConstantUfp(5.0))
        assert low.feedback == 1.0
        assert high.feedback == 5.0
        assert low.accuracy == high.accuracy


class TestSweep:
    def test_k_sweep_row_structure(self, trained):
        ssg, ufp, planning = trained
        result = EV.sweep("k", list(range(1, 9)), PlannerConfig(), ssg, ufp, planning[:20])
        assert len(result.points) == 8
        csv = EV.sweep_csv(result)
        lines = csv.strip().split("\n")
        assert lines[0] == "axis,value,accuracy,weighted_f1,feedback,top1,top2,top3"
        assert len(lines) == 9
        assert all(line.startswith("k,") for line in lines[1:])

    def test_single_value(self, trained):
        ssg, ufp, planning = trained
        result = EV.sweep("lambda", [0.7], PlannerConfig(), ssg, ufp, planning[:10])
        assert len(result.points) == 1

    def test_lambda_sweep_published_range(self, trained):
        ssg, ufp, planning = trained
        values = [round(0.1 * i, 1) for i in range(1, 11)]
        result = EV.sweep("lambda", values, PlannerConfig(), ssg, ufp, planning[:10])
        assert len(result.points) == 10

    def test_non_increasing_values_rejected(self, trained):
        ssg, ufp, planning = trained
        with pytest.raises(EmptyDecisions):
            EV.sweep("k", [2, 2], PlannerConfig(), ssg, ufp, planning[:5])

    def test_unknown_axis_rejected(self, trained):
        ssg, ufp, planning = trained
        with pytest.raises(EmptyDecisions):
            EV.sweep("beam", [1], PlannerConfig(), ssg, ufp, planning[:5])


class TestKSweepTrend:
    def test_feedback_improves_with_beam_width(self):
        """Statistical check over 5 seeded synthetic corpora: wider beams
        give a more complete expectation and a better feedback metric."""
        from foresight import corpus as C
        from foresight.lexicon import load_vad
        from foresight.synthetic import generate_corpus, generate_lexicon

        lexicon = load_vad(generate_lexicon(600, seed=0))
        finals_beat_firsts = 0
        drops, pairs = 0, 0
        for seed in range(5):
            dialogues = C.parse_esconv(generate_corpus(80, seed=100 + seed, lexicon_words=600))
            splits = C.split_corpus(dialogues, seed=seed)

            def build(part):
                planning, fb = [], []
                for d in part:
                    planning += C.make_planning_examples(d, 2)
                    fb += C.make_feedback_examples(d, 2)
                return (C.resolve_states(planning, part, lexicon),
                        C.resolve_states(fb, part, lexicon))

            planning_train, fb_train = build(splits["train"])
            planning_test, _ = build(splits["test"])
            ssg = SM.train_markov(planning_train, order=1, alpha=1.0)
            ufp = FB.train_linear(fb_train, ridge=1e-6, l_max=2)
            result = EV.sweep("k", [1, 2, 3, 4, 5, 6, 7], PlannerConfig(lambda_=0.7),
                              ssg, ufp, planning_test)
            values = [m.feedback for _, m in result.points]
            finals_beat_firsts += values[-1] >= values[0]
            for a, b in zip(values, values[1:]):
                pairs += 1
                drops += b < a - 0.02
        assert finals_beat_firsts >= 4
        assert drops / pairs <= 0.15


class TestMetricsJson:
    def test_stable_and_parseable(self, trained):
        import json

        ssg, ufp, planning = trained
        metrics = EV.run_eval(ssg, ufp, planning[:10], PlannerConfig())
        text = EV.metrics_json(metrics, {"fingerprint": "abc"})
        payload = json.loads(text)
        assert payload["fingerprint"] == "abc"
        assert set(payload) >= {"accuracy", "weighted_f1", "feedback", "top_n_accuracy"}

    def test_reference_constants_recorded(self):
        assert EV.REFERENCE_FEEDBACK_FULL == 3.85
        assert EV.REFERENCE_FEEDBACK_NO_LOOKAHEAD == 3.36
        assert EV.REFERENCE_ACCURACY == 42.01
