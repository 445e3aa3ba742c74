"""Data model and (de)serialization for conversational QA datasets.

A dataset is a list of conversations, each over one topic context (title,
background paragraph, section header, section text).  Answers are extractive:
one or more contiguous character spans of the section text, or the canonical
"I cannot find the answer." fallback.  Both our native JSON layout and the
original QuAC field names are accepted on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

CANNOT_FIND = "I cannot find the answer."
QUAC_CANNOT_ANSWER = "CANNOTANSWER"

KIND_FOUND = "found"
KIND_CANNOT_FIND = "cannot_find"


class CorpusError(Exception):
    """Base class for dataset loading/serialization failures."""


class MalformedFileError(CorpusError):
    """File structure does not match the expected record layout."""


class OffsetMismatchError(CorpusError):
    """A stored answer offset does not point at the stored answer text."""


class IoFailure(CorpusError):
    pass


@dataclass(frozen=True)
class TopicContext:
    id: str
    title: str
    background: str
    section_header: str
    section_text: str

    def __post_init__(self):
        if not self.section_text:
            raise ValueError("section_text must be non-empty")
        if not self.title or not self.section_header:
            raise ValueError("title and section_header must be non-empty")


@dataclass(frozen=True)
class AnswerSpan:
    text: str
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span interval [{self.start}, {self.end})")


@dataclass(frozen=True)
class Answer:
    kind: str  # KIND_FOUND | KIND_CANNOT_FIND
    spans: tuple[AnswerSpan, ...] = ()
    raw_text: str = ""
    attempts: int = 1

    def __post_init__(self):
        if self.kind == KIND_FOUND and not self.spans:
            raise ValueError("found answer requires at least one span")
        if self.kind == KIND_CANNOT_FIND and self.spans:
            raise ValueError("cannot-find answer carries no spans")

    @property
    def is_cannot_find(self) -> bool:
        return self.kind == KIND_CANNOT_FIND

    def serialized_text(self) -> str:
        """Human-readable answer text: spans joined with '; ', or the fallback."""
        if self.is_cannot_find:
            return CANNOT_FIND
        return "; ".join(s.text for s in self.spans)


def cannot_find_answer(raw_text: str = CANNOT_FIND, attempts: int = 1) -> Answer:
    return Answer(kind=KIND_CANNOT_FIND, raw_text=raw_text or CANNOT_FIND, attempts=attempts)


def found_answer(spans: Iterable[AnswerSpan], raw_text: str = "", attempts: int = 1) -> Answer:
    spans = tuple(spans)
    return Answer(
        kind=KIND_FOUND,
        spans=spans,
        raw_text=raw_text or "; ".join(s.text for s in spans),
        attempts=attempts,
    )


@dataclass(frozen=True)
class Turn:
    index: int
    question: str
    answer: Answer
    id: str = ""
    student_prompt_used: Optional[str] = None
    teacher_reprompts: tuple[str, ...] = ()


@dataclass(frozen=True)
class Conversation:
    context: TopicContext
    turns: tuple[Turn, ...]
    seed: int = 0
    backend_id: str = ""
    config_snapshot: dict = field(default_factory=dict)

    @property
    def id(self) -> str:
        return self.context.id

    def __post_init__(self):
        for i, t in enumerate(self.turns):
            if t.index != i:
                raise ValueError(f"turn indices not contiguous at {i}")


@dataclass(frozen=True)
class Dataset:
    name: str
    conversations: tuple[Conversation, ...]

    def __post_init__(self):
        ids = [c.id for c in self.conversations]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate conversation ids in dataset")

    def conversation(self, conv_id: str) -> Conversation:
        for c in self.conversations:
            if c.id == conv_id:
                return c
        raise KeyError(conv_id)


# ---------------------------------------------------------------------------
# serialization


def _context_to_json(ctx: TopicContext) -> dict:
    return {
        "id": ctx.id,
        "title": ctx.title,
        "background": ctx.background,
        "section_header": ctx.section_header,
        "section_text": ctx.section_text,
    }


def _turn_to_json(t: Turn) -> dict:
    if t.answer.is_cannot_find:
        answers = [{"text": CANNOT_FIND, "answer_start": -1}]
    else:
        answers = [{"text": s.text, "answer_start": s.start} for s in t.answer.spans]
    rec = {
        "id": t.id or str(t.index),
        "question": t.question,
        "answers": answers,
        "raw_answer": t.answer.raw_text,
        "attempts": t.answer.attempts,
    }
    if t.student_prompt_used is not None:
        rec["guiding_prompt"] = t.student_prompt_used
    if t.teacher_reprompts:
        rec["reprompts"] = list(t.teacher_reprompts)
    return rec


def dataset_to_json(ds: Dataset) -> dict:
    return {
        "name": ds.name,
        "conversations": [
            {
                "context": _context_to_json(c.context),
                "qas": [_turn_to_json(t) for t in c.turns],
                "meta": {
                    "seed": c.seed,
                    "backend_id": c.backend_id,
                    "config": c.config_snapshot,
                },
            }
            for c in ds.conversations
        ],
    }


def export_dataset(ds: Dataset, path) -> None:
    """Write a dataset to disk; load_dataset(export path) round-trips."""
    try:
        Path(path).write_text(
            json.dumps(dataset_to_json(ds), ensure_ascii=False, indent=1, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _is_cannot_answer_text(text: str) -> bool:
    t = text.strip().rstrip(".")
    return t == QUAC_CANNOT_ANSWER or t.lower() == "i cannot find the answer"


def _char_offset_from_tokens(section_text: str, token_index: int) -> Optional[int]:
    # answer_start counted in whitespace tokens; resolve the token's char offset
    offset = 0
    idx = 0
    for tok in section_text.split():
        pos = section_text.find(tok, offset)
        if idx == token_index:
            return pos
        offset = pos + len(tok)
        idx += 1
    return None


def _parse_answer(qa: dict, section_text: str, qa_id: str, offset_unit: str) -> Answer:
    answers = qa.get("answers") or []
    raw = qa.get("raw_answer", "")
    # QuAC keeps the teacher's original single answer separately
    if "orig_answer" in qa and qa["orig_answer"]:
        answers = [qa["orig_answer"]]
    if not answers:
        raise MalformedFileError(f"qa {qa_id!r}: no answers recorded")
    if all(_is_cannot_answer_text(a.get("text", "")) for a in answers):
        return Answer(
            kind=KIND_CANNOT_FIND,
            raw_text=raw or answers[0].get("text", CANNOT_FIND),
            attempts=int(qa.get("attempts", 1)),
        )
    spans = []
    for a in answers:
        text = a.get("text")
        start = a.get("answer_start")
        if text is None or start is None:
            raise MalformedFileError(f"qa {qa_id!r}: answer missing text/answer_start")
        start = int(start)
        if offset_unit == "token":
            resolved = _char_offset_from_tokens(section_text, start)
            if resolved is None:
                raise OffsetMismatchError(f"qa {qa_id!r}: token offset {start} out of range")
            start = resolved
        end = start + len(text)
        if section_text[start:end] != text:
            raise OffsetMismatchError(
                f"qa {qa_id!r}: answer_start {start} does not match answer text {text!r}"
            )
        spans.append(AnswerSpan(text=text, start=start, end=end))
    return Answer(
        kind=KIND_FOUND,
        spans=tuple(spans),
        raw_text=raw or "; ".join(s.text for s in spans),
        attempts=int(qa.get("attempts", 1)),
    )


def _conversation_from_json(rec: dict, index: int, offset_unit: str) -> Conversation:
    ctx_rec = rec.get("context")
    if ctx_rec is None:
        # QuAC layout: title/background at the record level, one paragraph
        paragraphs = rec.get("paragraphs")
        if not paragraphs:
            raise MalformedFileError(f"record {index}: no context and no paragraphs")
        para = paragraphs[0]
        ctx_rec = {
            "id": para.get("id") or rec.get("id") or f"conv-{index}",
            "title": rec.get("title", ""),
            "background": rec.get("background", ""),
            "section_header": rec.get("section_title") or rec.get("section_header", ""),
            "section_text": para.get("context", ""),
        }
        qas = para.get("qas", [])
    else:
        qas = rec.get("qas", [])

    try:
        ctx = TopicContext(
            id=str(ctx_rec.get("id", f"conv-{index}")),
            title=ctx_rec.get("title", ""),
            background=ctx_rec.get("background", ""),
            section_header=ctx_rec.get("section_header") or ctx_rec.get("section_title", ""),
            section_text=ctx_rec.get("section_text") or ctx_rec.get("context", ""),
        )
    except ValueError as exc:
        raise MalformedFileError(f"record {index}: {exc}") from exc

    turns = []
    for i, qa in enumerate(qas):
        qa_id = str(qa.get("id", f"{ctx.id}#{i}"))
        question = qa.get("question")
        if question is None:
            raise MalformedFileError(f"qa {qa_id!r}: missing question")
        answer = _parse_answer(qa, ctx.section_text, qa_id, offset_unit)
        reprompts = tuple(qa.get("reprompts", ()))
        turns.append(
            Turn(
                index=i,
                question=question,
                answer=answer,
                id=qa_id,
                student_prompt_used=qa.get("guiding_prompt"),
                teacher_reprompts=reprompts,
            )
        )

    meta = rec.get("meta", {})
    return Conversation(
        context=ctx,
        turns=tuple(turns),
        seed=int(meta.get("seed", 0)),
        backend_id=str(meta.get("backend_id", "")),
        config_snapshot=meta.get("config", {}),
    )


def load_dataset(path, offset_unit: str = "char") -> Dataset:
    """Load a dataset file (native layout or QuAC field names).

    offset_unit selects how answer_start is interpreted: "char" (default,
    Unicode scalar offsets) or "token" (whitespace-token index).
    """
    if offset_unit not in ("char", "token"):
        raise ValueError(f"unknown offset_unit {offset_unit!r}")
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise MalformedFileError(f"{path}: top level must be an object")

    records = payload.get("conversations")
    if records is None:
        records = payload.get("data")
    if records is None:
        raise MalformedFileError(f"{path}: no 'conversations' or 'data' key")

    conversations = []
    seen_ids = set()
    for i, rec in enumerate(records):
        conv = _conversation_from_json(rec, i, offset_unit)
        if conv.id in seen_ids:
            # QuAC occasionally repeats paragraph ids; disambiguate
            conv = replace(conv, context=replace(conv.context, id=f"{conv.id}__{i}"))
        seen_ids.add(conv.id)
        conversations.append(conv)
    return Dataset(name=payload.get("name", Path(path).stem), conversations=tuple(conversations))


def load_quac(path, offset_unit: str = "char") -> Dataset:
    """Alias for load_dataset, named for the QuAC ingestion workflow."""
    return load_dataset(path, offset_unit=offset_unit)


def filter_max_unanswered(ds: Dataset, limit: int = 3) -> Dataset:
    """Drop cannot-find turns beyond the first `limit` per conversation.

    Answered turns are always kept; remaining turns are re-indexed.
    """
    if limit < 0:
        raise ValueError("limit must be >= 0")
    out = []
    for conv in ds.conversations:
        kept = []
        unanswered = 0
        for t in conv.turns:
            if t.answer.is_cannot_find:
                if unanswered >= limit:
                    continue
                unanswered += 1
            kept.append(t)
        renumbered = tuple(replace(t, index=i) for i, t in enumerate(kept))
        out.append(replace(conv, turns=renumbered))
    return replace(ds, conversations=tuple(out))


def write_trace_sidecar(ds: Dataset, path) -> None:
    """Line-delimited per-turn validation trace (attempts, reprompts, prompt id)."""
    lines = []
    for conv in ds.conversations:
        for t in conv.turns:
            lines.append(
                json.dumps(
                    {
                        "conversation_id": conv.id,
                        "turn": t.index,
                        "attempts": t.answer.attempts,
                        "reprompts": list(t.teacher_reprompts),
                        "guiding_prompt": t.student_prompt_used,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
