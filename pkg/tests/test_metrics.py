import itertools
import json
import math
import random

import pytest
from scipy import stats as scipy_stats

from conftest import (
    make_conversation,
    make_ctx,
    make_dataset,
    random_conversation,
    span_answer,
)
from simcqa import metrics
from simcqa.corpus import AnswerSpan, cannot_find_answer, found_answer
from simcqa.metrics import (
    DIFFERENT,
    OVERLAP,
    SAME,
    TokenScore,
    classify_answer_pair,
    conversation_flow_krcc,
    dataset_stats,
    normalize_answer_text,
    token_score,
    topic_coverage,
)
from simcqa.spans import SpanNotLocatable


# ---------------------------------------------------------------------------
# independent oracles


def coverage_oracle(conv) -> float:
    """Brute force: mark each covered character of the section text."""
    marks = [False] * len(conv.context.section_text)
    for turn in conv.turns:
        if turn.answer.is_cannot_find:
            continue
        for span in turn.answer.spans:
            for i in range(span.start, span.end):
                marks[i] = True
    return sum(marks) / len(marks)


def tau_b_oracle(x, y) -> float:
    """O(n^2) concordant/discordant pair counting with tie correction."""
    n = len(x)
    nc = nd = tx = ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                tx += 1
                ty += 1
            elif dx == 0:
                tx += 1
            elif dy == 0:
                ty += 1
            elif (dx > 0) == (dy > 0):
                nc += 1
            else:
                nd += 1
    n0 = n * (n - 1) / 2
    denom = math.sqrt((n0 - tx) * (n0 - ty))
    return (nc - nd) / denom


# ---------------------------------------------------------------------------
# span location


class TestLocateSpans:
    def test_direct_offsets(self):
        section = "Paris is the capital of France."
        ctx = make_ctx(section, ident="loc")
        answer = found_answer([AnswerSpan("capital", 13, 20)])
        assert metrics.locate_spans(answer, ctx) == [(13, 20)]

    def test_earliest_occurrence(self):
        section = "red fish blue fish"
        ctx = make_ctx(section, ident="loc2")
        answer = found_answer([AnswerSpan("fish", 14, 18)])
        assert metrics.locate_spans(answer, ctx) == [(4, 8)]

    def test_unlocatable_raises(self):
        ctx = make_ctx("some text here", ident="loc3")
        answer = found_answer([AnswerSpan("absent words", 0, 12)])
        with pytest.raises(SpanNotLocatable):
            metrics.locate_spans(answer, ctx)


# ---------------------------------------------------------------------------
# coverage


class TestCoverage:
    def test_empty_union(self):
        ctx = make_ctx("x" * 100, ident="cov0")
        assert topic_coverage(make_conversation(ctx, [None, None])) == 0.0

    def test_full_cover(self):
        section = "abcdefghij"
        ctx = make_ctx(section, ident="cov1")
        conv = make_conversation(ctx, [span_answer(section, (0, len(section)))])
        assert topic_coverage(conv) == 1.0

    def test_overlapping_spans(self):
        section = "x" * 100
        ctx = make_ctx(section, ident="cov2")
        conv = make_conversation(ctx, [span_answer(section, (0, 10), (5, 20))])
        assert topic_coverage(conv) == pytest.approx(0.20)
        assert topic_coverage(conv) == coverage_oracle(conv)

    def test_monotone_adding_turns(self):
        section = "y" * 60
        ctx = make_ctx(section, ident="cov3")
        base = make_conversation(ctx, [span_answer(section, (0, 10))])
        more = make_conversation(
            ctx, [span_answer(section, (0, 10)), span_answer(section, (30, 40))]
        )
        assert topic_coverage(more) >= topic_coverage(base)

    def test_matches_oracle_on_random_conversations(self):
        rng = random.Random(1234)
        for i in range(200):
            conv = random_conversation(rng, f"rc-{i}")
            assert topic_coverage(conv) == coverage_oracle(conv)


# ---------------------------------------------------------------------------
# conversation flow


def flow_conv(starts):
    """Conversation whose answered spans start at the given offsets."""
    section = "z" * (max(starts) + 10)
    ctx = make_ctx(section, ident=f"flow-{'-'.join(map(str, starts))}")
    answers = [span_answer(section, (s, s + 3)) for s in starts]
    return make_conversation(ctx, answers)


class TestFlow:
    def test_increasing_is_one(self):
        assert conversation_flow_krcc(flow_conv([0, 10, 20, 30])) == pytest.approx(1.0)

    def test_decreasing_is_minus_one(self):
        assert conversation_flow_krcc(flow_conv([30, 20, 10, 0])) == pytest.approx(-1.0)

    def test_bac_ordering_example(self):
        # conversation asks A,B,C; document order of their answers is B,A,C
        assert conversation_flow_krcc(flow_conv([10, 0, 20])) == pytest.approx(1 / 3)

    def test_fewer_than_two_answered_is_undefined(self):
        section = "z" * 20
        ctx = make_ctx(section, ident="flow-und")
        conv = make_conversation(ctx, [span_answer(section, (0, 3)), None])
        assert conversation_flow_krcc(conv) is None

    def test_cannot_find_turns_excluded(self):
        section = "z" * 40
        ctx = make_ctx(section, ident="flow-cf")
        conv = make_conversation(
            ctx, [span_answer(section, (0, 3)), None, span_answer(section, (10, 13))]
        )
        assert conversation_flow_krcc(conv) == pytest.approx(1.0)

    def test_all_permutations_up_to_six(self):
        for n in range(2, 7):
            for perm in itertools.permutations(range(n)):
                starts = [p * 5 for p in perm]
                tau = conversation_flow_krcc(flow_conv(starts))
                assert tau == pytest.approx(tau_b_oracle(list(range(n)), starts))

    def test_random_permutations_up_to_ten(self):
        rng = random.Random(99)
        for _ in range(500):
            n = rng.randint(2, 10)
            perm = list(range(n))
            rng.shuffle(perm)
            starts = [p * 4 for p in perm]
            tau = conversation_flow_krcc(flow_conv(starts))
            assert tau == pytest.approx(tau_b_oracle(list(range(n)), starts))

    def test_tied_starts_use_tau_b(self):
        tau = conversation_flow_krcc(flow_conv([0, 0, 10]))
        assert tau == pytest.approx(tau_b_oracle([0, 1, 2], [0, 0, 10]))


# ---------------------------------------------------------------------------
# token scoring


def text_answer(text):
    return found_answer([AnswerSpan(text, 0, len(text))])


class TestTokenScore:
    def test_normalization(self):
        assert normalize_answer_text("The  Cat, sat!") == "cat sat"

    def test_partial_overlap(self):
        # after article removal: pred {cat,sat}, gold {cat,sat,down}
        score = token_score(text_answer("the cat sat"), text_answer("cat sat down"))
        assert score.precision == pytest.approx(1.0)
        assert score.recall == pytest.approx(2 / 3)
        assert score.f1 == pytest.approx(0.8)
        assert not score.em

    def test_identity(self):
        score = token_score(text_answer("In 1897"), text_answer("In 1897"))
        assert score == TokenScore(1.0, 1.0, 1.0, True)

    def test_em_ignores_case_and_punct(self):
        score = token_score(text_answer("The Answer."), text_answer("answer"))
        assert score.em

    def test_both_cannot_find(self):
        score = token_score(cannot_find_answer(), cannot_find_answer())
        assert score == TokenScore(1.0, 1.0, 1.0, True)

    def test_one_sided_cannot_find(self):
        score = token_score(cannot_find_answer(), text_answer("something"))
        assert score == TokenScore(0.0, 0.0, 0.0, False)
        score = token_score(text_answer("something"), cannot_find_answer())
        assert score == TokenScore(0.0, 0.0, 0.0, False)

    def test_em_symmetry(self):
        a, b = text_answer("alpha beta"), text_answer("Alpha beta")
        assert token_score(a, b).em == token_score(b, a).em

    def test_multi_span_joined(self):
        section = "Breakfast and Through the Keyhole shows"
        multi = span_answer(section, (0, 9), (14, 33))
        joined = text_answer("Breakfast; Through the Keyhole")
        assert token_score(multi, joined).em


# ---------------------------------------------------------------------------
# answer-pair classification


class TestClassify:
    def test_same(self):
        assert classify_answer_pair(text_answer("In 1897"), text_answer("In 1897")) == SAME

    def test_overlap_substring(self):
        a = text_answer("Breakfast")
        b = text_answer("Sunday morning interview programme Breakfast")
        assert classify_answer_pair(a, b) == OVERLAP
        assert classify_answer_pair(b, a) == OVERLAP

    def test_different(self):
        assert (
            classify_answer_pair(text_answer("apples"), text_answer("oranges")) == DIFFERENT
        )

    def test_both_cannot_find_is_same(self):
        assert classify_answer_pair(cannot_find_answer(), cannot_find_answer()) == SAME

    def test_symmetric(self):
        pairs = [
            (text_answer("a b c"), text_answer("b c")),
            (text_answer("x"), cannot_find_answer()),
            (text_answer("q"), text_answer("q")),
        ]
        for a, b in pairs:
            assert classify_answer_pair(a, b) == classify_answer_pair(b, a)


# ---------------------------------------------------------------------------
# dataset statistics


class TestStats:
    def test_direct_counts(self):
        section = "one two three four five six"
        ctx = make_ctx(section, ident="st")
        conv = make_conversation(ctx, [span_answer(section, (0, 7), (8, 13)), None])
        s = dataset_stats(make_dataset(conv))
        assert s.n_conversations == 1
        assert s.n_questions == 2
        assert s.n_answered == 1
        assert s.avg_answers_per_question == pytest.approx(2.0)
        # serialized answer "one two; three" = 3 whitespace tokens
        assert s.avg_answer_length == pytest.approx(3.0)

    def test_empty_dataset(self):
        s = dataset_stats(make_dataset())
        assert s.n_conversations == 0
        assert s.avg_answer_length == 0.0


# ---------------------------------------------------------------------------
# prediction scoring


class TestScorePredictions:
    def _dataset(self):
        section = "Paris is the capital of France. It has two million people."
        ctx = make_ctx(section, ident="sp")
        conv = make_conversation(
            ctx,
            [span_answer(section, (0, 5)), None, span_answer(section, (39, 50))],
        )
        return make_dataset(conv)

    def test_oracle_predictions_are_perfect(self):
        ds = self._dataset()
        preds = {}
        for conv in ds.conversations:
            for t in conv.turns:
                preds[t.id] = t.answer.serialized_text()
        agg = metrics.score_predictions(ds, preds)
        assert agg["precision"] == agg["recall"] == agg["f1"] == agg["em"] == 1.0
        assert agg["missing"] == []

    def test_empty_predictions(self):
        ds = self._dataset()
        agg = metrics.score_predictions(ds, {})
        assert agg["f1"] == 0.0
        assert len(agg["missing"]) == 3

    def test_unknown_id_rejected(self):
        with pytest.raises(metrics.UnknownQuestionId):
            metrics.score_predictions(self._dataset(), {"nope": "x"})

    def test_cannot_find_marker(self):
        ds = self._dataset()
        preds = {"sp#1": "CANNOTANSWER"}
        agg = metrics.score_predictions(ds, preds)
        # the cannot-find question scores perfectly, the two missing score zero
        assert agg["em"] == pytest.approx(1 / 3)

    def test_prediction_file_roundtrip(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        path.write_text(
            "\n".join(
                json.dumps(r)
                for r in [
                    {"question_id": "sp#0", "answer_text": "Paris"},
                    {"question_id": "sp#1", "answer_text": "I cannot find the answer."},
                ]
            )
        )
        preds = metrics.load_predictions(path)
        assert preds["sp#0"] == "Paris"
        agg = metrics.score_predictions(self._dataset(), preds)
        assert agg["n_questions"] == 3


def test_welch_ttest_helper():
    rng = random.Random(5)
    convs_a = [random_conversation(rng, f"a{i}") for i in range(10)]
    convs_b = [random_conversation(rng, f"b{i}") for i in range(10)]
    ds_a = make_dataset(*convs_a, name="a")
    ds_b = make_dataset(*convs_b, name="b")
    t, p = metrics.coverage_ttest(ds_a, ds_b)
    expected = scipy_stats.ttest_ind(
        [topic_coverage(c) for c in convs_a],
        [topic_coverage(c) for c in convs_b],
        equal_var=False,
    )
    assert t == pytest.approx(float(expected.statistic))
    assert p == pytest.approx(float(expected.pvalue))
