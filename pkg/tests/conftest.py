"""Shared fixtures and corpus builders."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from skillkit.model import (
    Category,
    SkillDocument,
    SkillMetadata,
    SkillPackage,
    build_package,
)

WORDS = (
    "extract convert parse render chart table report pdf csv json yaml image audio "
    "video text corpus index query graph node edge sandbox script shell python data "
    "pipeline backup archive deploy release notes summary email calendar invoice "
    "cluster embed vector keyword search filter merge split clean validate schema "
    "crawl fetch cache token batch stream log metric trace alert dashboard"
).split()

GOOD_INSTRUCTIONS = """Work through the task end to end without skipping verification.

Prerequisites:
- A shell session in the working directory.
- The input files named by the task.

Steps:
1. Inspect the inputs and confirm they match the expected format.
2. Apply the transformation the task describes.
3. Write the output next to the inputs with a clear suffix.
4. Verify the output opens cleanly before reporting success.

Expected runtime: under a minute for typical inputs.
"""


def make_doc(
    name: str = "sample-skill",
    description: str = "A compact sample skill used by the test-suite fixtures",
    category: Category = Category.PRODUCTIVITY,
    tags: list[str] | None = None,
    instructions: str = GOOD_INSTRUCTIONS,
    extra: dict[str, str] | None = None,
) -> SkillDocument:
    return SkillDocument(
        metadata=SkillMetadata(
            name=name,
            description=description,
            category=category,
            tags=tags if tags is not None else ["sample"],
            extra=extra or {},
        ),
        instructions=instructions,
    )


def make_package(
    name: str = "sample-skill",
    description: str = "A compact sample skill used by the test-suite fixtures",
    instructions: str = GOOD_INSTRUCTIONS,
    resources: list[tuple[str, bytes]] | None = None,
    entry: str | None = None,
    tags: list[str] | None = None,
    category: Category = Category.PRODUCTIVITY,
) -> SkillPackage:
    extra = {"entry": entry} if entry else {}
    doc = make_doc(
        name=name,
        description=description,
        category=category,
        tags=tags,
        instructions=instructions,
        extra=extra,
    )
    return build_package(doc, resources or [])


def script_package(
    name: str,
    body: str,
    *,
    entry: str = "run.py",
    description: str | None = None,
) -> SkillPackage:
    instructions = (
        f"Run the bundled `{entry}` script.\n\n"
        "Prerequisites:\n- A python interpreter on PATH.\n\n"
        "Steps:\n"
        f"1. Execute `{entry}` from the package root.\n"
        "2. Check the exit status.\n"
        "3. Read the captured output.\n\n"
        "Expected runtime: under a second.\n"
    )
    return make_package(
        name=name,
        description=description or f"Executes a bundled script for the {name} fixture",
        instructions=instructions,
        resources=[(entry, body.encode())],
        entry=entry,
    )


def random_metadata_doc(rng: random.Random, i: int | None = None) -> SkillDocument:
    """A valid, randomized document for round-trip and dedup fixtures."""
    name_words = rng.sample(WORDS, rng.randint(1, 3))
    if i is not None:
        name_words.append(f"{i:03d}")
    description = " ".join(rng.choice(WORDS) for _ in range(rng.randint(4, 18)))
    tags = sorted(set(rng.sample(WORDS, rng.randint(0, 4))))
    extra = {}
    if rng.random() < 0.4:
        extra["origin"] = rng.choice(("community", "pipeline", "import"))
    if rng.random() < 0.2:
        extra["entry"] = "run.py"
    lines = ["Overview of the generated fixture skill.", "", "Steps:"]
    for n in range(1, rng.randint(2, 6)):
        lines.append(f"{n}. {' '.join(rng.choice(WORDS) for _ in range(rng.randint(2, 7)))}")
    return SkillDocument(
        metadata=SkillMetadata(
            name="-".join(name_words),
            description=description.capitalize(),
            category=rng.choice(list(Category)),
            tags=tags,
            version=f"0.{rng.randint(0, 9)}.{rng.randint(0, 9)}",
            extra=extra,
        ),
        instructions="\n".join(lines) + "\n",
    )


def corpus_with_duplicates(rng: random.Random, unique: int, duplicates: int) -> list[SkillPackage]:
    """unique distinct packages plus duplicates exact copies, shuffled."""
    packages = []
    for i in range(unique):
        doc = random_metadata_doc(rng, i)
        resources = []
        if rng.random() < 0.3:
            resources.append(("run.py", b"print('hi')\n"))
        packages.append(build_package(doc, resources))
    copies = [
        build_package(pkg.document, list(pkg.resources))
        for pkg in rng.sample(packages, duplicates)
    ]
    combined = packages + copies
    rng.shuffle(combined)
    return combined


@pytest.fixture
def store_root(tmp_path: Path) -> Path:
    return tmp_path / "store"
