"""Quantitative evaluation: coverage, conversation flow, token overlap, stats.

All operations are pure.  Coverage is the fraction of section-text characters
covered by the union of answered spans.  Conversation flow is the Kendall rank
correlation (tau-b) between the order questions were asked and the document
order of their answers — lower means less sequential exploration.  Token-level
EM/P/R/F1 follow the standard extractive-QA normalization (lowercase, strip
punctuation, drop articles).
"""

from __future__ import annotations

import json
import re
import string
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from scipy import stats as scipy_stats

from .corpus import CANNOT_FIND, Answer, AnswerSpan, Conversation, Dataset, TopicContext
from .spans import SpanNotLocatable, find_span

SAME = "same"
OVERLAP = "overlap"
DIFFERENT = "different"


@dataclass(frozen=True)
class CoverageResult:
    per_conversation: tuple[tuple[str, float], ...]
    mean: float
    std: float


@dataclass(frozen=True)
class FlowResult:
    per_conversation: tuple[tuple[str, float, int], ...]  # (id, tau, n ranked turns)
    mean: float
    n_undefined: int  # conversations with < 2 answered turns


@dataclass(frozen=True)
class TokenScore:
    precision: float
    recall: float
    f1: float
    em: bool


@dataclass(frozen=True)
class DatasetStats:
    n_conversations: int
    n_questions: int
    n_answered: int
    avg_answer_length: float  # whitespace tokens of serialized answered answers
    avg_answers_per_question: float  # spans per answered question


class UnknownQuestionId(Exception):
    pass


# ---------------------------------------------------------------------------
# span location and coverage


def locate_spans(answer: Answer, ctx: TopicContext) -> list[tuple[int, int]]:
    """Resolve each answer span to [start, end) offsets in the section text."""
    if answer.is_cannot_find:
        raise ValueError("cannot-find answers have no location")
    intervals = []
    for span in answer.spans:
        hit = find_span(span.text, ctx.section_text)
        if hit is None:
            raise SpanNotLocatable(f"answer span {span.text!r} not found in section text")
        intervals.append(hit)
    return intervals


def _answered_intervals(conv: Conversation) -> list[tuple[int, int]]:
    out = []
    for turn in conv.turns:
        if turn.answer.is_cannot_find:
            continue
        out.extend((s.start, s.end) for s in turn.answer.spans)
    return out


def topic_coverage(conv: Conversation) -> float:
    """Fraction of section-text characters covered by answered spans."""
    n = len(conv.context.section_text)
    intervals = sorted(_answered_intervals(conv))
    covered = 0
    cur_start: Optional[int] = None
    cur_end = 0
    for start, end in intervals:
        if cur_start is None or start > cur_end:
            if cur_start is not None:
                covered += cur_end - cur_start
            cur_start, cur_end = start, end
        else:
            cur_end = max(cur_end, end)
    if cur_start is not None:
        covered += cur_end - cur_start
    return covered / n


def coverage_report(ds: Dataset) -> CoverageResult:
    import statistics

    per = tuple((c.id, topic_coverage(c)) for c in ds.conversations)
    values = [v for _, v in per]
    mean = statistics.fmean(values) if values else 0.0
    std = statistics.pstdev(values) if values else 0.0
    return CoverageResult(per_conversation=per, mean=mean, std=std)


def coverage_ttest(ds_a: Dataset, ds_b: Dataset) -> tuple[float, float]:
    """Welch's two-tailed t-test over per-conversation coverages: (t, p)."""
    a = [topic_coverage(c) for c in ds_a.conversations]
    b = [topic_coverage(c) for c in ds_b.conversations]
    t, p = scipy_stats.ttest_ind(a, b, equal_var=False)
    return float(t), float(p)


# ---------------------------------------------------------------------------
# conversation flow


def conversation_flow_krcc(conv: Conversation) -> Optional[float]:
    """Kendall tau-b between question order and answer document order.

    Cannot-find turns carry no position and are excluded.  Returns None when
    fewer than two answered turns remain.
    """
    order = []
    starts = []
    for turn in conv.turns:
        if turn.answer.is_cannot_find:
            continue
        order.append(turn.index)
        starts.append(turn.answer.spans[0].start)
    if len(order) < 2:
        return None
    tau = scipy_stats.kendalltau(order, starts, variant="b").statistic
    return float(tau)


def flow_report(ds: Dataset) -> FlowResult:
    per = []
    undefined = 0
    for conv in ds.conversations:
        tau = conversation_flow_krcc(conv)
        if tau is None:
            undefined += 1
            continue
        n = sum(1 for t in conv.turns if not t.answer.is_cannot_find)
        per.append((conv.id, tau, n))
    mean = sum(t for _, t, _ in per) / len(per) if per else 0.0
    return FlowResult(per_conversation=tuple(per), mean=mean, n_undefined=undefined)


# ---------------------------------------------------------------------------
# token-level scoring

_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")
_PUNC_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer_text(text: str) -> str:
    """Lowercase, strip punctuation, drop articles, collapse whitespace."""
    text = text.lower().translate(_PUNC_TABLE)
    text = _ARTICLES_RE.sub(" ", text)
    return " ".join(text.split())


def token_score(predicted: Answer, gold: Answer) -> TokenScore:
    if predicted.is_cannot_find and gold.is_cannot_find:
        return TokenScore(1.0, 1.0, 1.0, True)
    if predicted.is_cannot_find or gold.is_cannot_find:
        return TokenScore(0.0, 0.0, 0.0, False)
    pred_norm = normalize_answer_text(predicted.serialized_text())
    gold_norm = normalize_answer_text(gold.serialized_text())
    pred_tokens = pred_norm.split()
    gold_tokens = gold_norm.split()
    em = pred_norm == gold_norm
    if not pred_tokens and not gold_tokens:
        # both answers normalize to nothing (e.g. articles only)
        return TokenScore(1.0, 1.0, 1.0, em)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    n_common = sum(common.values())
    if n_common == 0:
        return TokenScore(0.0, 0.0, 0.0, em)
    precision = n_common / len(pred_tokens)
    recall = n_common / len(gold_tokens)
    f1 = 2 * precision * recall / (precision + recall)
    return TokenScore(precision, recall, f1, em)


# ---------------------------------------------------------------------------
# answer-pair comparison


def classify_answer_pair(a: Answer, b: Answer) -> str:
    ta = a.serialized_text().strip()
    tb = b.serialized_text().strip()
    if ta == tb:
        return SAME
    if ta in tb or tb in ta:
        return OVERLAP
    return DIFFERENT


def pair_stats(ds_a: Dataset, ds_b: Dataset) -> dict:
    """Same/Overlap/Different breakdown over aligned questions of two datasets."""
    counts = {SAME: 0, OVERLAP: 0, DIFFERENT: 0}
    total = 0
    for conv_a in ds_a.conversations:
        try:
            conv_b = ds_b.conversation(conv_a.id)
        except KeyError:
            continue
        for turn_a, turn_b in zip(conv_a.turns, conv_b.turns):
            counts[classify_answer_pair(turn_a.answer, turn_b.answer)] += 1
            total += 1
    out = {"total": total, "counts": counts}
    out["percent"] = {
        k: (100.0 * v / total if total else 0.0) for k, v in counts.items()
    }
    return out


# ---------------------------------------------------------------------------
# dataset statistics


def dataset_stats(ds: Dataset) -> DatasetStats:
    n_questions = 0
    n_answered = 0
    total_tokens = 0
    total_spans = 0
    for conv in ds.conversations:
        for turn in conv.turns:
            n_questions += 1
            if turn.answer.is_cannot_find:
                continue
            n_answered += 1
            total_tokens += len(turn.answer.serialized_text().split())
            total_spans += len(turn.answer.spans)
    return DatasetStats(
        n_conversations=len(ds.conversations),
        n_questions=n_questions,
        n_answered=n_answered,
        avg_answer_length=(total_tokens / n_answered) if n_answered else 0.0,
        avg_answers_per_question=(total_spans / n_answered) if n_answered else 0.0,
    )


# ---------------------------------------------------------------------------
# prediction-file scoring


def load_predictions(path) -> dict[str, str]:
    """Line-delimited records {question_id, answer_text}; cannot-find marker ok."""
    preds: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        preds[str(rec["question_id"])] = rec.get("answer_text", "")
    return preds


def _answer_from_text(text: str) -> Answer:
    from .corpus import cannot_find_answer

    t = text.strip()
    if not t or t.rstrip(".").lower() in ("cannotanswer", "i cannot find the answer"):
        return cannot_find_answer()
    # free-standing prediction text; offsets are irrelevant for token scoring
    return Answer(kind="found", spans=(AnswerSpan(text=t, start=0, end=len(t)),), raw_text=t)


def score_predictions(ds: Dataset, predictions: dict[str, str]) -> dict:
    """Macro-average token scores of predictions against the dataset's answers.

    Missing predictions score zero and are listed; prediction ids not present
    in the dataset raise UnknownQuestionId.
    """
    known_ids = {t.id for conv in ds.conversations for t in conv.turns}
    unknown = set(predictions) - known_ids
    if unknown:
        raise UnknownQuestionId(f"prediction ids not in dataset: {sorted(unknown)[:5]}")

    rows = []
    missing = []
    for conv in ds.conversations:
        for turn in conv.turns:
            if turn.id in predictions:
                pred = _answer_from_text(predictions[turn.id])
                rows.append(token_score(pred, turn.answer))
            else:
                missing.append(turn.id)
                rows.append(TokenScore(0.0, 0.0, 0.0, False))
    n = len(rows)
    agg = {
        "n_questions": n,
        "precision": sum(r.precision for r in rows) / n if n else 0.0,
        "recall": sum(r.recall for r in rows) / n if n else 0.0,
        "f1": sum(r.f1 for r in rows) / n if n else 0.0,
        "em": sum(1.0 for r in rows if r.em) / n if n else 0.0,
        "missing": missing,
    }
    return agg
