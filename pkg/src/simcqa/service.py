"""HTTP annotation service: blinded task delivery and judgment collection.

Annotators must pass the onboarding quiz before submitting.  Served task
bodies never contain the A/B-to-system assignment or source dataset names;
the aggregate report (which unblinds) sits behind an admin token.
"""

from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from .annotation import (
    ASPECT_PREFERENCE,
    AnnotationStore,
    ComparisonTask,
    InsufficientAnnotators,
    Judgment,
    aggregate,
    gate_onboarding,
)


class OnboardingSubmission(BaseModel):
    annotator_id: str
    responses: dict[str, str]


class OnboardingResult(BaseModel):
    annotator_id: str
    passed: bool


class ItemView(BaseModel):
    index: int
    question: str
    answer_a: str
    answer_b: str
    answer_a_cannot_find: bool
    answer_b_cannot_find: bool
    highlight_a: list[tuple[int, int]]
    highlight_b: list[tuple[int, int]]
    judgeable_aspects: list[str]


class ContextView(BaseModel):
    title: str
    background: str
    section_header: str
    section_text: str


class TaskView(BaseModel):
    task_id: str
    context: ContextView
    items: list[ItemView]


class TaskSummary(BaseModel):
    task_id: str
    n_items: int
    completed: bool


class JudgmentSubmission(BaseModel):
    annotator_id: str
    task_id: str
    aspect: str
    choice: str
    item_index: Optional[int] = None
    justification: str = ""


class SubmitResult(BaseModel):
    accepted: bool = True


def _blind(task: ComparisonTask) -> TaskView:
    return TaskView(
        task_id=task.task_id,
        context=ContextView(
            title=task.context.title,
            background=task.context.background,
            section_header=task.context.section_header,
            section_text=task.context.section_text,
        ),
        items=[
            ItemView(
                index=i.index,
                question=i.question,
                answer_a=i.answer_a,
                answer_b=i.answer_b,
                answer_a_cannot_find=i.answer_a_cannot_find,
                answer_b_cannot_find=i.answer_b_cannot_find,
                highlight_a=list(i.highlight_a),
                highlight_b=list(i.highlight_b),
                judgeable_aspects=list(i.judgeable_aspects),
            )
            for i in task.items
        ],
    )


def _required_keys(task: ComparisonTask) -> set[tuple]:
    keys = {
        (task.task_id, item.index, aspect)
        for item in task.items
        for aspect in item.judgeable_aspects
    }
    keys.add((task.task_id, None, ASPECT_PREFERENCE))
    return keys


def create_app(
    store: AnnotationStore,
    quiz_key: Optional[dict] = None,
    admin_token: str = "",
    min_annotators: int = 3,
) -> FastAPI:
    app = FastAPI(title="pairwise answer annotation")
    quiz_key = quiz_key or {}

    def _check_gated(annotator_id: str) -> None:
        if not store.is_gated(annotator_id):
            raise HTTPException(status_code=403, detail="annotator has not passed onboarding")

    def _check_admin(token: Optional[str]) -> None:
        if admin_token and token != admin_token:
            raise HTTPException(status_code=403, detail="admin token required")

    def _completed(task: ComparisonTask, annotator_id: str) -> bool:
        needed = {(item, aspect) for (_tid, item, aspect) in _required_keys(task)}
        have = {
            (item, aspect)
            for (_annot, tid, item, aspect) in store.judged_keys(annotator_id)
            if tid == task.task_id
        }
        return needed <= have

    @app.post("/onboarding", response_model=OnboardingResult)
    def submit_onboarding(sub: OnboardingSubmission):
        if not quiz_key:
            raise HTTPException(status_code=503, detail="no onboarding quiz configured")
        passed = gate_onboarding(sub.responses, quiz_key)
        store.set_gate(sub.annotator_id, passed)
        return OnboardingResult(annotator_id=sub.annotator_id, passed=passed)

    @app.get("/quiz")
    def get_quiz():
        return {"question_ids": sorted(quiz_key)}

    @app.get("/tasks", response_model=list[TaskSummary])
    def list_tasks(annotator_id: str = Query(...)):
        _check_gated(annotator_id)
        return [
            TaskSummary(
                task_id=t.task_id,
                n_items=len(t.items),
                completed=_completed(t, annotator_id),
            )
            for t in store.tasks.values()
        ]

    @app.get("/tasks/next", response_model=TaskView)
    def next_task(annotator_id: str = Query(...)):
        _check_gated(annotator_id)
        for t in store.tasks.values():
            if not _completed(t, annotator_id):
                return _blind(t)
        raise HTTPException(status_code=404, detail="no unjudged tasks remain")

    @app.get("/tasks/{task_id}", response_model=TaskView)
    def get_task(task_id: str, annotator_id: str = Query(...)):
        _check_gated(annotator_id)
        task = store.tasks.get(task_id)
        if task is None:
            raise HTTPException(status_code=404, detail="unknown task")
        return _blind(task)

    @app.post("/judgments", response_model=SubmitResult, status_code=201)
    def submit_judgment(sub: JudgmentSubmission):
        _check_gated(sub.annotator_id)
        task = store.tasks.get(sub.task_id)
        if task is None:
            raise HTTPException(status_code=404, detail="unknown task")
        if sub.aspect != ASPECT_PREFERENCE:
            if sub.item_index is None or not (0 <= sub.item_index < len(task.items)):
                raise HTTPException(status_code=422, detail="invalid item index")
            item = task.items[sub.item_index]
            if sub.aspect not in item.judgeable_aspects:
                raise HTTPException(
                    status_code=422,
                    detail=f"aspect {sub.aspect!r} is not judgeable for this item",
                )
        try:
            judgment = Judgment(
                annotator_id=sub.annotator_id,
                task_id=sub.task_id,
                aspect=sub.aspect,
                choice=sub.choice,
                item_index=sub.item_index,
                justification=sub.justification,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            store.add_judgment(judgment)
        except ValueError:
            raise HTTPException(status_code=409, detail="judgment already submitted")
        return SubmitResult()

    @app.get("/report")
    def report(x_admin_token: Optional[str] = Header(default=None)):
        _check_admin(x_admin_token)
        try:
            result = aggregate(
                store.tasks.values(), store.active_judgments(), min_annotators=min_annotators
            )
        except InsufficientAnnotators as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {
            "per_aspect": result.per_aspect,
            "kappa": result.kappa,
            "n_annotators_per_task": result.n_annotators_per_task,
            "n_items": result.n_items,
            "preference_per_annotator": result.preference_per_annotator,
        }

    @app.get("/export", response_class=PlainTextResponse)
    def export(x_admin_token: Optional[str] = Header(default=None)):
        _check_admin(x_admin_token)
        lines = [
            json.dumps(
                {
                    "annotator_id": j.annotator_id,
                    "task_id": j.task_id,
                    "item_index": j.item_index,
                    "aspect": j.aspect,
                    "choice": j.choice,
                    "justification": j.justification,
                },
                ensure_ascii=False,
            )
            for j in store.judgments
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    return app
