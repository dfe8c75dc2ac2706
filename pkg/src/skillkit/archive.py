"""Deterministic package archives.

Plain USTAR tar with entries in root_listing order, zero timestamps,
fixed ownership and mode, so equal packages always produce bit-identical
archive bytes.
"""

from __future__ import annotations

import io
import tarfile

from .errors import MalformedArchive
from .model import (
    SKILL_FILE,
    SkillPackage,
    md5_hex,
    normalize_relpath,
    package_id,
    parse_skill_document,
)

ARCHIVE_MEDIA_TYPE = "application/x-tar"


def _entry(name: str, data: bytes) -> tarfile.TarInfo:
    info = tarfile.TarInfo(name=name)
    info.size = len(data)
    info.mtime = 0
    info.uid = 0
    info.gid = 0
    info.uname = ""
    info.gname = ""
    info.mode = 0o644
    return info


def pack_package(pkg: SkillPackage) -> bytes:
    """Serialize the package to deterministic tar bytes."""
    contents = {SKILL_FILE: pkg.skill_md, **{p: data for p, data in pkg.resources}}
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for name in pkg.root_listing:
            data = contents[name]
            tar.addfile(_entry(name, data), io.BytesIO(data))
    return buf.getvalue()


def unpack_package(data: bytes) -> SkillPackage:
    """Rebuild a package from archive bytes.

    Raises MalformedArchive for unreadable tars, unsafe member paths, or a
    missing SKILL.md; document parse errors propagate with their own types.
    """
    try:
        tar = tarfile.open(fileobj=io.BytesIO(data), mode="r:")
    except tarfile.TarError as exc:
        raise MalformedArchive(f"unreadable archive: {exc}") from exc

    skill_md: bytes | None = None
    resources: list[tuple[str, bytes]] = []
    with tar:
        for member in tar.getmembers():
            if not member.isfile():
                continue
            name = normalize_relpath(member.name)
            if name.startswith("/") or ".." in name.split("/"):
                raise MalformedArchive(f"unsafe member path: {member.name}")
            blob = tar.extractfile(member)
            content = blob.read() if blob else b""
            if name == SKILL_FILE:
                skill_md = content
            else:
                resources.append((name, content))

    if skill_md is None:
        raise MalformedArchive(f"archive has no {SKILL_FILE}")
    document = parse_skill_document(skill_md)
    resources.sort(key=lambda item: item[0])
    listing = sorted({SKILL_FILE, *(p for p, _ in resources)})
    return SkillPackage(
        id=package_id(document.metadata.name, md5_hex(skill_md)),
        document=document,
        skill_md=skill_md,
        resources=resources,
        root_listing=listing,
    )
