"""Tag vocabularies for label-style classification.

A TagSet carries names plus the one-line descriptions that get embedded
in prompts; model output is validated against the names.  When a tagset
names a catch-all tag, every comment must receive at least one label;
tagsets without one may legitimately yield the empty set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class TagSetError(ValueError):
    pass


@dataclass(frozen=True)
class Tag:
    name: str
    description: str

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise TagSetError("tag name must be non-empty")
        if not self.description.strip():
            raise TagSetError(f"tag {self.name!r}: description must be non-empty")


@dataclass(frozen=True)
class TagSet:
    tags: tuple[Tag, ...]
    catch_all: str | None = None

    def __post_init__(self) -> None:
        if len(self.tags) < 2:
            raise TagSetError("a tagset needs at least 2 tags")
        names = [t.name for t in self.tags]
        if len(set(names)) != len(names):
            raise TagSetError("tag names must be unique")
        if self.catch_all is not None and self.catch_all not in names:
            raise TagSetError(f"catch_all {self.catch_all!r} is not a tag in the set")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tags)

    def describe_lines(self) -> str:
        return "\n".join(f"- {t.name}: {t.description}" for t in self.tags)

    def sort_labels(self, labels: frozenset[str] | set[str]) -> list[str]:
        """Order a label set by tagset position for stable serialization."""
        ranked = [name for name in self.names if name in labels]
        return ranked + sorted(set(labels) - set(ranked))


def load_tagset(path: str | Path) -> TagSet:
    """Read a tagset from json: {"tags": [{"name", "description"}...],
    "catch_all": optional name}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or "tags" not in raw:
        raise TagSetError(f'{path}: expected an object with a "tags" list')
    tags = []
    for item in raw["tags"]:
        if not isinstance(item, dict) or "name" not in item or "description" not in item:
            raise TagSetError(f'{path}: each tag needs "name" and "description"')
        tags.append(Tag(str(item["name"]), str(item["description"])))
    return TagSet(tuple(tags), catch_all=raw.get("catch_all"))


def save_tagset(tagset: TagSet, path: str | Path) -> None:
    payload = {
        "tags": [{"name": t.name, "description": t.description} for t in tagset.tags],
        "catch_all": tagset.catch_all,
    }
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# Course-feedback vocabulary used by the bundled fixtures and as the
# default for multi-label classification.  The descriptions double as
# rater guidance and as prompt context, so they stay verbatim.
DEFAULT_TAGSET = TagSet(
    tags=(
        Tag(
            "Course logistics and fit",
            "course delivery (policy, support), cost, difficulty, time commitment, "
            "grading, credit, schedule, user fit, access, background (e.g., prereqs "
            "and appropriateness of course level)",
        ),
        Tag(
            "Curriculum",
            "course content, curriculum, specific topics, course structure. This "
            "focuses on the content and the pedagogical structure of the content, "
            "including flow and organization. This also includes applied material "
            "such as clinical cases and case studies. Includes references to "
            "pre-recorded discussions between experts or between a doctor and a "
            "patient. Includes specific suggestions for additional courses or content",
        ),
        Tag(
            "Teaching modality",
            "video, visual, interactive, animation, step-by-step, deep dive, "
            "background builder (the format rather than the content/topic)",
        ),
        Tag(
            "Teaching",
            "instructors, quality of teaching and explanations",
        ),
        Tag(
            "Assessment",
            "quizzes, exams",
        ),
        Tag(
            "Resources",
            "note taking tools, study guides, notepads, readings. Includes other "
            "potential static resources like downloadable video transcripts",
        ),
        Tag(
            "Peer and teacher interaction",
            "includes chances for the student to interact with another person in "
            "the course (teacher or student). This includes discussion forums, "
            "teacher-student or student-student interactions. Includes requests "
            "for live sessions with teachers or live office hours",
        ),
        Tag(
            "Other",
            "catch-all for the rarer aspects that we'll encounter and also the "
            "'na', 'thank you', etc. comments that don't really belong in the "
            "above bins. Also for sufficiently general comments like 'all the "
            "course was terrific' that can't be narrowed down to one of the "
            "other categories",
        ),
    ),
    catch_all="Other",
)
