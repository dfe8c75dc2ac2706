"""Sandboxed execution of a package's entry script.

Runs the declared entry point in a child process with the package
materialized into a throwaway working directory, a scrubbed environment,
and wall-clock plus memory limits enforced by a polling monitor. A global
semaphore bounds how many sandboxes run at once.

Stronger OS-level isolation (namespaces, seccomp) is deployment
configuration, not a default, to keep the runner portable.
"""

from __future__ import annotations

import os
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import SandboxUnavailable
from .model import SkillPackage, extract_package

OUTPUT_CAP = 64 * 1024

_MAX_CONCURRENT = 4
_slots = threading.BoundedSemaphore(_MAX_CONCURRENT)


def configure(max_concurrent: int) -> None:
    """Set the global cap on concurrently running sandboxes."""
    global _slots, _MAX_CONCURRENT
    if max_concurrent < 1:
        raise ValueError("max_concurrent must be >= 1")
    _MAX_CONCURRENT = max_concurrent
    _slots = threading.BoundedSemaphore(max_concurrent)


class SandboxOutcome(str, Enum):
    SUCCEEDED = "succeeded"
    NONZERO_EXIT = "nonzero_exit"
    TIMEOUT = "timeout"
    MEMORY_EXCEEDED = "memory_exceeded"
    NO_ENTRY_POINT = "no_entry_point"


@dataclass
class SandboxLimits:
    wall_ms: int = 5000
    mem_bytes: int = 256 * 1024 * 1024

    def __post_init__(self) -> None:
        if self.wall_ms <= 0 or self.mem_bytes <= 0:
            raise ValueError("sandbox limits must be positive")


@dataclass
class SandboxResult:
    outcome: SandboxOutcome
    exit_code: int | None
    wall_time_ms: int
    peak_memory_bytes: int
    captured_output: str

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "exit_code": self.exit_code,
            "wall_time_ms": self.wall_time_ms,
            "peak_memory_bytes": self.peak_memory_bytes,
            "captured_output": self.captured_output,
        }


def _require_platform() -> None:
    if os.name != "posix":
        raise SandboxUnavailable("sandbox requires a POSIX platform")
    try:
        import psutil  # noqa: F401
    except ImportError as exc:
        raise SandboxUnavailable("psutil is required to enforce memory limits") from exc


def _command_for(entry: str, workdir: Path, args: tuple[str, ...]) -> list[str]:
    script = workdir / entry
    if entry.endswith(".py"):
        return [sys.executable, "-I", str(script), *args]
    if entry.endswith(".sh"):
        return ["/bin/sh", str(script), *args]
    return [str(script), *args]


def _scrubbed_env(workdir: Path) -> dict[str, str]:
    # Minimal whitelist; no proxy vars, no credentials from the parent.
    env = {
        "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
        "HOME": str(workdir),
        "TMPDIR": str(workdir),
        "LANG": "C.UTF-8",
        "PYTHONIOENCODING": "utf-8",
    }
    return env


def run_sandbox(
    pkg: SkillPackage,
    limits: SandboxLimits | None = None,
    args: tuple[str, ...] = (),
) -> SandboxResult:
    """Execute the package's declared entry script under limits.

    Entry discovery is explicit: the ``entry`` frontmatter key names the
    script. No key, or a key naming a file the package does not carry,
    classifies as NO_ENTRY_POINT without starting a process.
    """
    limits = limits or SandboxLimits()
    _require_platform()
    import psutil

    entry = pkg.entry_point
    if not entry or entry not in {p for p, _ in pkg.resources}:
        return SandboxResult(SandboxOutcome.NO_ENTRY_POINT, None, 0, 0, "")

    with _slots, tempfile.TemporaryDirectory(prefix="skillbox-") as tmp:
        workdir = Path(tmp)
        extract_package(pkg, workdir)
        cmd = _command_for(entry, workdir, args)
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                cmd,
                cwd=workdir,
                env=_scrubbed_env(workdir),
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
                start_new_session=True,
            )
        except (OSError, PermissionError):
            wall = int((time.monotonic() - start) * 1000)
            return SandboxResult(SandboxOutcome.NONZERO_EXIT, 127, wall, 0, "entry script could not be started")

        peak = 0
        outcome: SandboxOutcome | None = None
        handle = psutil.Process(proc.pid)
        deadline = start + limits.wall_ms / 1000.0
        while proc.poll() is None:
            try:
                rss = handle.memory_info().rss
                peak = max(peak, rss)
            except psutil.Error:
                break
            if peak > limits.mem_bytes:
                outcome = SandboxOutcome.MEMORY_EXCEEDED
                _kill_tree(proc)
                break
            if time.monotonic() >= deadline:
                outcome = SandboxOutcome.TIMEOUT
                _kill_tree(proc)
                break
            time.sleep(0.005)

        try:
            raw_out = proc.communicate(timeout=5)[0] or b""
        except subprocess.TimeoutExpired:
            _kill_tree(proc)
            raw_out = proc.communicate()[0] or b""
        wall = int((time.monotonic() - start) * 1000)

        if outcome is None:
            outcome = SandboxOutcome.SUCCEEDED if proc.returncode == 0 else SandboxOutcome.NONZERO_EXIT
        if outcome == SandboxOutcome.TIMEOUT:
            wall = max(wall, limits.wall_ms)
        output = raw_out[:OUTPUT_CAP].decode("utf-8", errors="replace")
        exit_code = proc.returncode if outcome in (SandboxOutcome.SUCCEEDED, SandboxOutcome.NONZERO_EXIT) else None
        return SandboxResult(outcome, exit_code, wall, peak, output)


def _kill_tree(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), 9)
    except (ProcessLookupError, PermissionError):
        pass
