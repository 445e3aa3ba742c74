import random

import pytest

from simcqa.corpus import (
    AnswerSpan,
    Conversation,
    Dataset,
    TopicContext,
    Turn,
    cannot_find_answer,
    found_answer,
)

SECTION = (
    "Talland House is a large square house in St Ives, Cornwall. "
    "The Stephen family took annual summer holidays there from 1882 to 1894. "
    "Virginia Woolf later drew on those summers for To the Lighthouse. "
    "The house (now divided into flats) overlooks Porthminster Bay."
)

BACKGROUND = (
    "Virginia Woolf was an English writer, considered one of the most important "
    "modernist authors of the twentieth century."
)


@pytest.fixture
def ctx() -> TopicContext:
    return TopicContext(
        id="woolf-talland",
        title="Virginia Woolf",
        background=BACKGROUND,
        section_header="Talland House (1882-1894)",
        section_text=SECTION,
    )


def make_ctx(section_text: str, background: str = "background paragraph", ident: str = "ctx-0"):
    return TopicContext(
        id=ident,
        title="Topic",
        background=background,
        section_header="Header",
        section_text=section_text,
    )


def span_answer(section_text: str, *intervals: tuple[int, int], attempts: int = 1):
    spans = [
        AnswerSpan(text=section_text[a:b], start=a, end=b) for a, b in intervals
    ]
    return found_answer(spans, attempts=attempts)


def make_conversation(ctx: TopicContext, answers, questions=None) -> Conversation:
    """answers: list of Answer or None (None = cannot find)."""
    turns = []
    for i, ans in enumerate(answers):
        if ans is None:
            ans = cannot_find_answer()
        q = questions[i] if questions else f"Question {i}?"
        turns.append(Turn(index=i, question=q, answer=ans, id=f"{ctx.id}#{i}"))
    return Conversation(context=ctx, turns=tuple(turns))


def make_dataset(*conversations, name="test") -> Dataset:
    return Dataset(name=name, conversations=tuple(conversations))


def random_conversation(rng: random.Random, ident: str) -> Conversation:
    """Synthetic conversation with random answered/unanswered span turns."""
    n = rng.randint(40, 200)
    section = "".join(rng.choice("abcdefg ") for _ in range(n)).strip() or "abc def"
    ctx = make_ctx(section, ident=ident)
    answers = []
    for _ in range(rng.randint(0, 6)):
        if rng.random() < 0.25:
            answers.append(None)
        else:
            intervals = []
            for _ in range(rng.randint(1, 3)):
                a = rng.randrange(0, len(section))
                b = rng.randrange(a + 1, min(len(section), a + 30) + 1)
                intervals.append((a, b))
            answers.append(span_answer(section, *intervals))
    return make_conversation(ctx, answers)
