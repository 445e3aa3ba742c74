"""End-to-end conversation simulation between the student and teacher agents.

One conversation alternates validated student questions and validated teacher
answers over a single topic context until a stoppage criterion fires: the turn
budget, student question-validation exhaustion, too many consecutive
cannot-find answers, or a backend failure.  Batches run conversations
independently (optionally in parallel) with per-context derived seeds, and
persist each conversation plus its validation trace for resumability.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .backend import BackendError, ChatBackend, ChatParams, ChatSession
from .corpus import (
    Conversation,
    Dataset,
    TopicContext,
    Turn,
    dataset_to_json,
    load_dataset,
    write_trace_sidecar,
)
from .student import (
    QuestionValidationExhausted,
    StudentConfig,
    ask_first_question,
    ask_with_validation,
    select_student_prompt,
)
from .teacher import TeacherConfig, answer_with_validation

TERM_MAX_TURNS = "max_turns"
TERM_STUDENT_EXHAUSTED = "student_exhausted"
TERM_CONSECUTIVE_CANNOT_FIND = "consecutive_cannot_find"
TERM_BACKEND_FAILURE = "backend_failure"
TERM_SKIPPED_EXISTING = "skipped_existing"


@dataclass
class SimulationConfig:
    max_turns: int = 12
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    student: StudentConfig = field(default_factory=StudentConfig)
    seed: int = 0
    stop_on_consecutive_cannotfind: int = 3  # 0 disables

    def __post_init__(self):
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")

    def snapshot(self) -> dict:
        return {
            "max_turns": self.max_turns,
            "teacher": dataclasses.asdict(self.teacher),
            "student": dataclasses.asdict(self.student),
            "stop_on_consecutive_cannotfind": self.stop_on_consecutive_cannotfind,
        }


@dataclass
class SimulationReport:
    conversation: Conversation
    termination: str
    backend_calls: int


class _CountingBackend:
    def __init__(self, inner: ChatBackend):
        self.inner = inner
        self.calls = 0
        self.id = inner.id

    def reply(self, history, params):
        self.calls += 1
        return self.inner.reply(history, params)


def _resolve_pair(backend) -> tuple[ChatBackend, ChatBackend]:
    """Accept one shared backend or a {'student', 'teacher'} mapping."""
    if isinstance(backend, dict):
        return backend["student"], backend["teacher"]
    return backend, backend


def simulate_conversation(
    ctx: TopicContext, backend, cfg: SimulationConfig
) -> SimulationReport:
    student_backend, teacher_backend = _resolve_pair(backend)
    student_backend = _CountingBackend(student_backend)
    teacher_backend = _CountingBackend(teacher_backend)
    student_session = ChatSession(backend=student_backend, params=ChatParams())
    teacher_session = ChatSession(backend=teacher_backend, params=ChatParams())
    rng = random.Random(cfg.seed)

    turns: list[Turn] = []
    termination = TERM_MAX_TURNS
    consecutive_cf = 0
    prev_answer = None
    try:
        for i in range(cfg.max_turns):
            prompt_id: Optional[str] = None
            if i == 0:
                question = ask_first_question(student_session, ctx, cfg.student)
            else:
                stimulus, prompt_id = select_student_prompt(prev_answer, rng)
                question = ask_with_validation(student_session, stimulus, cfg.student)
            result = answer_with_validation(
                teacher_session, question, ctx, cfg.teacher, include_instruction=(i == 0)
            )
            turns.append(
                Turn(
                    index=i,
                    question=question,
                    answer=result.answer,
                    id=f"{ctx.id}#{i}",
                    student_prompt_used=prompt_id,
                    teacher_reprompts=result.reprompts,
                )
            )
            prev_answer = result.answer
            if result.answer.is_cannot_find:
                consecutive_cf += 1
            else:
                consecutive_cf = 0
            if (
                cfg.stop_on_consecutive_cannotfind
                and consecutive_cf >= cfg.stop_on_consecutive_cannotfind
            ):
                termination = TERM_CONSECUTIVE_CANNOT_FIND
                break
    except QuestionValidationExhausted:
        termination = TERM_STUDENT_EXHAUSTED
    except BackendError:
        termination = TERM_BACKEND_FAILURE

    conversation = Conversation(
        context=ctx,
        turns=tuple(turns),
        seed=cfg.seed,
        backend_id=teacher_backend.id,
        config_snapshot=cfg.snapshot(),
    )
    return SimulationReport(
        conversation=conversation,
        termination=termination,
        backend_calls=student_backend.calls + teacher_backend.calls,
    )


def derive_seed(base_seed: int, context_id: str) -> int:
    digest = hashlib.sha256(context_id.encode("utf-8")).digest()
    return base_seed ^ int.from_bytes(digest[:8], "big")


def _conversation_path(out_dir: Path, context_id: str) -> Path:
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in context_id)
    return out_dir / f"{safe}.json"


def _persist(report: SimulationReport, out_dir: Path) -> None:
    conv = report.conversation
    single = Dataset(name=conv.id, conversations=(conv,))
    path = _conversation_path(out_dir, conv.id)
    payload = dataset_to_json(single)
    payload["termination"] = report.termination
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    write_trace_sidecar(single, path.with_suffix(".trace.jsonl"))


def run_batch(
    contexts: list[TopicContext],
    backend,
    cfg: SimulationConfig,
    parallelism: int = 1,
    out_dir=None,
    dataset_name: str = "simulated",
    force: bool = False,
) -> tuple[Dataset, list[SimulationReport]]:
    """Simulate each context independently; results are ordered by input.

    With out_dir set, each conversation (plus trace sidecar) is persisted as it
    completes and contexts with an existing persisted conversation are skipped
    unless force is true.  A manifest listing seeds and termination states is
    rewritten at the end.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    def one(ctx: TopicContext) -> SimulationReport:
        if out_path is not None and not force:
            existing = _conversation_path(out_path, ctx.id)
            if existing.exists():
                prior = load_dataset(existing)
                return SimulationReport(
                    conversation=prior.conversations[0],
                    termination=TERM_SKIPPED_EXISTING,
                    backend_calls=0,
                )
        per_cfg = dataclasses.replace(cfg, seed=derive_seed(cfg.seed, ctx.id))
        report = simulate_conversation(ctx, backend, per_cfg)
        if out_path is not None:
            _persist(report, out_path)
        return report

    if parallelism == 1:
        reports = [one(ctx) for ctx in contexts]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            reports = list(pool.map(one, contexts))

    if out_path is not None:
        manifest = [
            json.dumps(
                {
                    "context_id": r.conversation.id,
                    "seed": r.conversation.seed,
                    "termination": r.termination,
                    "n_turns": len(r.conversation.turns),
                },
                ensure_ascii=False,
                sort_keys=True,
            )
            for r in reports
        ]
        (out_path / "manifest.jsonl").write_text(
            "\n".join(manifest) + ("\n" if manifest else ""), encoding="utf-8"
        )

    ds = Dataset(name=dataset_name, conversations=tuple(r.conversation for r in reports))
    return ds, reports
