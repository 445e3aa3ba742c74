"""Pairwise answer-comparison annotation: task assembly and aggregation.

Two datasets answering the same questions are compared item by item.  Each
task blinds the source systems behind randomized "System A"/"System B" labels;
annotators judge correctness, naturalness, and completeness per question plus
one conversation-level preference.  Wins require a strict majority of at least
three annotators; agreement is summarized with Fleiss' kappa over the
four-option choices.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .corpus import Conversation, Dataset, TopicContext
from .metrics import locate_spans
from .spans import SpanNotLocatable

CHOICE_A = "A"
CHOICE_B = "B"
CHOICE_NEITHER = "neither"
CHOICE_BOTH = "both"
CHOICES = (CHOICE_A, CHOICE_B, CHOICE_NEITHER, CHOICE_BOTH)

ASPECT_CORRECTNESS = "correctness"
ASPECT_NATURALNESS = "naturalness"
ASPECT_COMPLETENESS = "completeness"
ASPECT_PREFERENCE = "preference"
ITEM_ASPECTS = (ASPECT_CORRECTNESS, ASPECT_NATURALNESS, ASPECT_COMPLETENESS)

SYSTEM_1 = "system1"
SYSTEM_2 = "system2"

ONBOARDING_PASS_FRACTION = 0.75


class PairMismatch(Exception):
    """The two datasets disagree on conversation ids or question lists."""


class InsufficientAnnotators(Exception):
    pass


@dataclass(frozen=True)
class TaskItem:
    index: int
    question: str
    answer_a: str
    answer_b: str
    answer_a_cannot_find: bool
    answer_b_cannot_find: bool
    highlight_a: tuple[tuple[int, int], ...]
    highlight_b: tuple[tuple[int, int], ...]
    judgeable_aspects: tuple[str, ...]


@dataclass(frozen=True)
class ComparisonTask:
    task_id: str
    context: TopicContext
    items: tuple[TaskItem, ...]
    assignment: dict  # {"A": SYSTEM_1|SYSTEM_2, "B": ...}; never shown to annotators


@dataclass(frozen=True)
class Judgment:
    annotator_id: str
    task_id: str
    aspect: str
    choice: str
    item_index: Optional[int] = None  # None for conversation-level preference
    justification: str = ""

    def __post_init__(self):
        if self.choice not in CHOICES:
            raise ValueError(f"unknown choice {self.choice!r}")
        if self.aspect == ASPECT_PREFERENCE:
            if self.item_index is not None:
                raise ValueError("preference is conversation-level")
            if not self.justification.strip():
                raise ValueError("preference requires a justification")
        elif self.aspect not in ITEM_ASPECTS:
            raise ValueError(f"unknown aspect {self.aspect!r}")

    def key(self) -> tuple:
        return (self.annotator_id, self.task_id, self.item_index, self.aspect)


def _highlights(turn, ctx: TopicContext) -> tuple[tuple[int, int], ...]:
    if turn.answer.is_cannot_find:
        return ()
    try:
        return tuple(locate_spans(turn.answer, ctx))
    except SpanNotLocatable:
        return ()


def build_tasks(ds1: Dataset, ds2: Dataset, rng: random.Random) -> list[ComparisonTask]:
    """One blinded task per conversation shared by both datasets.

    ds1 plays system1, ds2 plays system2; per-task A/B assignment is drawn
    from rng.  Raises PairMismatch when question lists differ.
    """
    ids2 = {c.id for c in ds2.conversations}
    tasks = []
    for conv1 in ds1.conversations:
        if conv1.id not in ids2:
            raise PairMismatch(f"conversation {conv1.id!r} missing from second dataset")
        conv2 = ds2.conversation(conv1.id)
        if len(conv1.turns) != len(conv2.turns) or any(
            t1.question != t2.question for t1, t2 in zip(conv1.turns, conv2.turns)
        ):
            raise PairMismatch(f"question lists differ for conversation {conv1.id!r}")
        a_is_system1 = rng.random() < 0.5
        assignment = (
            {"A": SYSTEM_1, "B": SYSTEM_2} if a_is_system1 else {"A": SYSTEM_2, "B": SYSTEM_1}
        )
        sys_by_label = {label: (conv1 if system == SYSTEM_1 else conv2)
                        for label, system in assignment.items()}
        items = []
        for i in range(len(conv1.turns)):
            turn_a = sys_by_label["A"].turns[i]
            turn_b = sys_by_label["B"].turns[i]
            text_a = turn_a.answer.serialized_text()
            text_b = turn_b.answer.serialized_text()
            cf_a = turn_a.answer.is_cannot_find
            cf_b = turn_b.answer.is_cannot_find
            if text_a == text_b:
                aspects: tuple[str, ...] = ()  # shown for context only
            elif cf_a != cf_b:
                aspects = (ASPECT_CORRECTNESS,)
            else:
                aspects = ITEM_ASPECTS
            items.append(
                TaskItem(
                    index=i,
                    question=turn_a.question,
                    answer_a=text_a,
                    answer_b=text_b,
                    answer_a_cannot_find=cf_a,
                    answer_b_cannot_find=cf_b,
                    highlight_a=_highlights(turn_a, conv1.context),
                    highlight_b=_highlights(turn_b, conv1.context),
                    judgeable_aspects=aspects,
                )
            )
        tasks.append(
            ComparisonTask(
                task_id=conv1.id,
                context=conv1.context,
                items=tuple(items),
                assignment=assignment,
            )
        )
    return tasks


def gate_onboarding(responses: dict, key: dict) -> bool:
    """True iff at least 75% of the onboarding questions are answered correctly."""
    if not key:
        raise ValueError("onboarding answer key must be non-empty")
    if not responses:
        return False
    correct = sum(1 for qid, expected in key.items() if responses.get(qid) == expected)
    return correct / len(key) >= ONBOARDING_PASS_FRACTION


# ---------------------------------------------------------------------------
# Fleiss' kappa


def fleiss_kappa(table: list[list[int]]) -> float:
    """Fleiss' kappa for a subjects x categories count table (equal row sums)."""
    if not table:
        raise ValueError("empty table")
    n_raters = sum(table[0])
    if n_raters < 2:
        raise ValueError("need at least 2 raters")
    if any(sum(row) != n_raters for row in table):
        raise ValueError("all subjects must have the same number of ratings")
    n_subjects = len(table)
    n_total = n_subjects * n_raters

    p_cat = [sum(row[j] for row in table) / n_total for j in range(len(table[0]))]
    p_bar = sum(
        (sum(c * c for c in row) - n_raters) / (n_raters * (n_raters - 1)) for row in table
    ) / n_subjects
    p_exp = sum(p * p for p in p_cat)
    if p_exp == 1.0:
        return 1.0 if p_bar == 1.0 else 0.0
    return (p_bar - p_exp) / (1 - p_exp)


# ---------------------------------------------------------------------------
# aggregation


def _majority_outcome(choices: list[str], assignment: dict) -> str:
    """system1 / system2 / tie for one judged item, honoring the blinding flip."""
    counts = {c: choices.count(c) for c in CHOICES}
    need = len(choices) // 2 + 1  # strict majority
    for label in (CHOICE_A, CHOICE_B):
        if counts[label] >= need:
            return assignment[label]
    return "tie"


@dataclass
class AggregateResult:
    per_aspect: dict  # aspect -> {system1, system2, tie} percentages
    kappa: Optional[float]
    n_annotators_per_task: int
    n_items: dict  # aspect -> judged item count
    preference_per_annotator: dict  # {system1, system2, neither, both} percentages


def aggregate(
    tasks: Iterable[ComparisonTask],
    judgments: Iterable[Judgment],
    min_annotators: int = 3,
) -> AggregateResult:
    tasks = list(tasks)
    by_task = {t.task_id: t for t in tasks}
    groups: dict[tuple, list[Judgment]] = {}
    for j in judgments:
        groups.setdefault((j.task_id, j.item_index, j.aspect), []).append(j)

    # validate group sizes and annotator distinctness
    for (task_id, item_index, aspect), js in groups.items():
        annotators = {j.annotator_id for j in js}
        if len(annotators) < min_annotators:
            raise InsufficientAnnotators(
                f"task {task_id!r} item {item_index} aspect {aspect!r}: "
                f"{len(annotators)} annotators, need {min_annotators}"
            )

    outcomes: dict[str, list[str]] = {a: [] for a in (*ITEM_ASPECTS, ASPECT_PREFERENCE)}
    kappa_rows: list[list[int]] = []
    n_raters_used = min((len(js) for js in groups.values()), default=min_annotators)
    preference_choices: list[str] = []

    for (task_id, item_index, aspect), js in sorted(
        groups.items(), key=lambda kv: (kv[0][0], -1 if kv[0][1] is None else kv[0][1], kv[0][2])
    ):
        task = by_task[task_id]
        choices = [j.choice for j in sorted(js, key=lambda j: j.annotator_id)]
        outcomes[aspect].append(_majority_outcome(choices, task.assignment))
        used = choices[:n_raters_used]
        kappa_rows.append([used.count(c) for c in CHOICES])
        if aspect == ASPECT_PREFERENCE:
            # unblind per-annotator preferences for the proportion view
            for c in choices:
                preference_choices.append(task.assignment.get(c, c))

    per_aspect = {}
    n_items = {}
    for aspect, outs in outcomes.items():
        n = len(outs)
        n_items[aspect] = n
        per_aspect[aspect] = {
            SYSTEM_1: 100.0 * outs.count(SYSTEM_1) / n if n else 0.0,
            SYSTEM_2: 100.0 * outs.count(SYSTEM_2) / n if n else 0.0,
            "tie": 100.0 * outs.count("tie") / n if n else 0.0,
        }

    pref_n = len(preference_choices)
    preference_per_annotator = {
        key: 100.0 * preference_choices.count(key) / pref_n if pref_n else 0.0
        for key in (SYSTEM_1, SYSTEM_2, CHOICE_NEITHER, CHOICE_BOTH)
    }

    kappa = fleiss_kappa(kappa_rows) if kappa_rows else None
    return AggregateResult(
        per_aspect=per_aspect,
        kappa=kappa,
        n_annotators_per_task=n_raters_used,
        n_items=n_items,
        preference_per_annotator=preference_per_annotator,
    )


# ---------------------------------------------------------------------------
# persistence


class AnnotationStore:
    """Durable task/judgment storage with an append-only judgment log."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.tasks: dict[str, ComparisonTask] = {}
        self.judgments: list[Judgment] = []
        self.gated: dict[str, bool] = {}
        self.flagged: set[tuple] = set()  # judgment keys queued for manual review
        self._load()

    @property
    def _tasks_path(self) -> Path:
        return self.root / "tasks.json"

    @property
    def _judgments_path(self) -> Path:
        return self.root / "judgments.jsonl"

    @property
    def _annotators_path(self) -> Path:
        return self.root / "annotators.json"

    def _load(self) -> None:
        if self._tasks_path.exists():
            payload = json.loads(self._tasks_path.read_text(encoding="utf-8"))
            for rec in payload:
                ctx = TopicContext(**rec["context"])
                items = tuple(
                    TaskItem(
                        **{
                            **item,
                            "highlight_a": tuple(map(tuple, item["highlight_a"])),
                            "highlight_b": tuple(map(tuple, item["highlight_b"])),
                            "judgeable_aspects": tuple(item["judgeable_aspects"]),
                        }
                    )
                    for item in rec["items"]
                )
                task = ComparisonTask(
                    task_id=rec["task_id"], context=ctx, items=items,
                    assignment=rec["assignment"],
                )
                self.tasks[task.task_id] = task
        if self._judgments_path.exists():
            for line in self._judgments_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self.judgments.append(Judgment(**json.loads(line)))
        if self._annotators_path.exists():
            self.gated = json.loads(self._annotators_path.read_text(encoding="utf-8"))

    def save_tasks(self, tasks: Iterable[ComparisonTask]) -> None:
        tasks = list(tasks)
        self.tasks = {t.task_id: t for t in tasks}
        payload = [
            {
                "task_id": t.task_id,
                "context": asdict(t.context),
                "items": [asdict(i) for i in t.items],
                "assignment": t.assignment,
            }
            for t in tasks
        ]
        self._tasks_path.write_text(
            json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8"
        )

    def set_gate(self, annotator_id: str, passed: bool) -> None:
        with self._lock:
            self.gated[annotator_id] = passed
            self._annotators_path.write_text(
                json.dumps(self.gated, ensure_ascii=False, indent=1), encoding="utf-8"
            )

    def is_gated(self, annotator_id: str) -> bool:
        return self.gated.get(annotator_id, False)

    def add_judgment(self, judgment: Judgment) -> None:
        """Append one judgment; rejects duplicates of (annotator, item, aspect)."""
        with self._lock:
            if any(j.key() == judgment.key() for j in self.judgments):
                raise ValueError("duplicate judgment")
            self.judgments.append(judgment)
            with self._judgments_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(asdict(judgment), ensure_ascii=False) + "\n")

    def flag_judgment(self, key: tuple) -> None:
        with self._lock:
            self.flagged.add(tuple(key))

    def active_judgments(self) -> list[Judgment]:
        return [j for j in self.judgments if j.key() not in self.flagged]

    def judged_keys(self, annotator_id: str) -> set[tuple]:
        return {j.key() for j in self.judgments if j.annotator_id == annotator_id}
