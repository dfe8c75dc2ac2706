"""skillkit: full-lifecycle registry for agent skill packages.

Skills are directory-shaped bundles (SKILL.md plus optional scripts and
assets). This package creates them from heterogeneous sources, curates
and grades them, links them into a typed relation graph, indexes them for
keyword/vector/hybrid search, serves them over HTTP, and executes their
bundled entry points in a sandbox. Every model-backed step has a
deterministic offline fallback.
"""

__version__ = "0.1.0"
