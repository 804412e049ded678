from __future__ import annotations

from dataclasses import replace

import pytest

from narrowqa.config import AnchorSource, LabelGenConfig
from narrowqa.labels.anchors import extract_anchors, mentions_label
from narrowqa.scene.records import QuestionRecord, SceneRecord


@pytest.fixture
def living_room(scene_factory) -> SceneRecord:
    return scene_factory(
        "living",
        {
            1: ("chair", [(0.0, 0.0, 0.0)]),
            2: ("table", [(1.0, 0.0, 0.0)]),
            3: ("sofa", [(2.0, 0.0, 0.0)]),
        },
    )


def ask(text: str, anchors: tuple[int, ...] | None = None) -> QuestionRecord:
    return QuestionRecord("q", "living", text, ("x",), target_ids=(1,), anchor_ids=anchors)


def match(source: AnchorSource) -> LabelGenConfig:
    return LabelGenConfig(anchor_source=source)


def test_label_match_finds_mentioned_object(living_room: SceneRecord) -> None:
    anchors = extract_anchors(ask("what is next to the table?"), living_room, match(AnchorSource.LABEL_MATCH))
    assert anchors == {2}


def test_label_match_strips_plural(living_room: SceneRecord) -> None:
    anchors = extract_anchors(ask("what color are the tables?"), living_room, match(AnchorSource.LABEL_MATCH))
    assert anchors == {2}


def test_targets_are_never_anchors(living_room: SceneRecord) -> None:
    anchors = extract_anchors(ask("where is the chair?"), living_room, match(AnchorSource.LABEL_MATCH))
    assert anchors == set()


def test_matching_is_whole_word_and_case_insensitive() -> None:
    assert mentions_label("The SOFA is blue", "sofa")
    assert not mentions_label("the sofabed is blue", "sofa")
    assert not mentions_label("a tablet on the floor", "table")


def test_annotation_mode(living_room: SceneRecord) -> None:
    question = ask("what is next to the table?", anchors=(3,))
    assert extract_anchors(question, living_room, match(AnchorSource.ANNOTATION)) == {3}
    assert extract_anchors(replace(question, anchor_ids=None), living_room, match(AnchorSource.ANNOTATION)) == set()


def test_union_mode(living_room: SceneRecord) -> None:
    question = ask("what is next to the table?", anchors=(3,))
    assert extract_anchors(question, living_room, match(AnchorSource.UNION)) == {2, 3}


def test_auto_prefers_annotation(living_room: SceneRecord) -> None:
    annotated = ask("what is next to the table?", anchors=(3,))
    assert extract_anchors(annotated, living_room, LabelGenConfig()) == {3}
    assert extract_anchors(replace(annotated, anchor_ids=None), living_room, LabelGenConfig()) == {2}
