from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from narrowqa.config import ConfigurationError, ShortcutBait, SyntheticSpec
from narrowqa.scene.records import QuestionRecord
from narrowqa.training.synthetic import (
    Featurizer,
    is_validation,
    make_scene,
    make_synthetic_dataset,
    stable_hash,
    tokenize,
)


def test_same_spec_same_world(tiny_spec: SyntheticSpec) -> None:
    first = make_synthetic_dataset(tiny_spec)
    second = make_synthetic_dataset(tiny_spec)
    assert first.scenes == second.scenes
    assert first.questions == second.questions
    assert first.vocab == second.vocab

    other = make_synthetic_dataset(SyntheticSpec(n_scenes=12, objects_min=4, objects_max=5, seed=4))
    assert other.scenes != first.scenes


def test_scene_index_is_independent_of_corpus_size(tiny_spec: SyntheticSpec) -> None:
    bigger = SyntheticSpec(n_scenes=20, objects_min=4, objects_max=5, seed=3)
    assert make_scene(tiny_spec, 7) == make_scene(bigger, 7)


def test_templates_agree_with_the_scene(tiny_dataset) -> None:
    assert len(tiny_dataset.questions) == 2 * len(tiny_dataset.scenes)
    for question in tiny_dataset.questions:
        scene = tiny_dataset.scenes[question.scene_id]
        labels = {obj.id: obj.label for obj in scene.objects}
        colors = {obj.id: obj.attributes["color"] for obj in scene.objects}
        (target,) = question.target_ids
        (anchor,) = question.anchor_ids
        assert labels[anchor] in question.question
        if question.question.startswith("what color"):
            assert question.answers == (colors[target],)
            assert labels[target] in question.question
        else:
            assert question.answers == (labels[target],)
            assert labels[target] != labels[anchor]
        assert question.answers[0] in tiny_dataset.vocab


def test_every_object_owns_points(tiny_dataset) -> None:
    for scene in tiny_dataset.scenes.values():
        assert scene.object_ids == tuple(range(len(scene.objects)))
        for object_id in scene.object_ids:
            assert len(scene.object_points(object_id)) == tiny_dataset.spec.points_per_object


def test_full_rate_bait_rewrites_training_answers_only() -> None:
    plain_spec = SyntheticSpec(n_scenes=300, labels=("table", "chair", "sofa"), seed=1)
    bait = ShortcutBait(trigger_label="table", answer="chair", rate=1.0)
    plain = make_synthetic_dataset(plain_spec)
    baited = make_synthetic_dataset(replace(plain_spec, shortcut_bait=bait))

    assert baited.scenes == plain.scenes
    rewritten = held_out = 0
    for before, after in zip(plain.questions, baited.questions, strict=True):
        assert (after.question, after.target_ids, after.anchor_ids) == (
            before.question,
            before.target_ids,
            before.anchor_ids,
        )
        scene = baited.scenes[after.scene_id]
        labels = {obj.id: obj.label for obj in scene.objects}
        triggered = not after.question.startswith("what color") and labels[after.anchor_ids[0]] == "table"
        if not triggered:
            assert after.answers == before.answers
        elif is_validation(after.question_id):
            held_out += 1
            assert after.answers == (labels[after.target_ids[0]],)
        else:
            rewritten += 1
            assert after.answers == ("chair",)
    assert rewritten > 0
    assert held_out > 0


def test_bait_must_use_known_labels() -> None:
    with pytest.raises(ConfigurationError):
        SyntheticSpec(shortcut_bait=ShortcutBait(trigger_label="table", answer="piano", rate=0.5))


def test_tokenize_and_hash() -> None:
    assert tokenize("What's next to the Sofa?") == ["what", "s", "next", "to", "the", "sofa"]
    assert stable_hash("a", 1) == stable_hash("a", 1)
    assert stable_hash("a", 1) != stable_hash("a", 2)


class TestFeaturizer:
    spec = SyntheticSpec(n_scenes=4, noise=0.0, seed=2)

    def _question(self, text: str) -> QuestionRecord:
        return QuestionRecord(
            question_id="fixed",
            scene_id="scene0000",
            question=text,
            answers=("red",),
            target_ids=(0,),
        )

    def test_widths(self) -> None:
        featurizer = Featurizer(self.spec)
        assert featurizer.d_obj == 7 + len(self.spec.labels) + len(self.spec.colors)
        assert featurizer.text_tokens("what is next to the bed?").shape == (6, self.spec.d_text)

    def test_mentions_resolve_synonyms(self) -> None:
        featurizer = Featurizer(self.spec)
        assert featurizer.mentions("what color is the seat next to the couch?") == ["chair", "sofa"]
        assert featurizer.mentions("how many tables are there") == ["table"]

    def test_synonym_swap_leaves_object_tokens_alone(self) -> None:
        scene, _ = make_scene(self.spec, 0)
        featurizer = Featurizer(self.spec)
        plain = self._question("what color is the chair next to the sofa?")
        swapped = self._question("what color is the chair next to the couch?")

        np.testing.assert_array_equal(
            featurizer.object_tokens(plain, scene), featurizer.object_tokens(swapped, scene)
        )
        assert not np.array_equal(
            featurizer.text_tokens(plain.question), featurizer.text_tokens(swapped.question)
        )

    def test_label_one_hot(self) -> None:
        scene, questions = make_scene(self.spec, 1)
        tokens = Featurizer(self.spec).object_tokens(questions[0], scene)
        n_labels = len(self.spec.labels)
        for row, obj in enumerate(scene.objects):
            assert int(np.argmax(tokens[row, 2 : 2 + n_labels])) == self.spec.labels.index(obj.label)
