"""Directory-tree filesystem view of a FAT32 volume.

A ``HiFatFs`` pairs decoded directory-entry metadata with file contents
and abstracts clusters away entirely.  ``image_to_hifat`` and
``hifat_to_image`` translate between this view and ``Fat32Image``
values; serialization rebuilds the volume's allocation from scratch,
walking directories in insertion order and handing out the lowest free
clusters first.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from .errors import DepthExceededError, IllFormedError, NoSpaceError
from .image import (
    ATTR_ARCHIVE,
    ATTR_DIRECTORY,
    ATTR_VOLUME_ID,
    DIR_ENTRY_SIZE,
    EOC_WRITE,
    FIRST_DATA_CLUSTER,
    DirEntry,
    EntryKind,
    Fat32Image,
    allocate_clusters,
    clear_fat,
    cluster_size,
    count_of_clusters,
    decode_dir_entry,
    encode_dir_entry,
    fat_entry,
    make_dir_entry,
    pack_83_name,
    read_file_contents,
    set_fat_entry,
    write_cluster,
)
from .ladder import WriteStatus

# Guard against directory loops in malformed images.
MAX_DEPTH = 64

DOT = b".          "
DOTDOT = b"..         "


@dataclass(frozen=True)
class HiFatDir:
    """Name-to-node mapping; keys are uppercase 8.3 display names."""

    entries: dict


@dataclass(frozen=True)
class HiFatFile:
    meta: DirEntry
    contents: "bytes | HiFatDir"

    @property
    def is_directory(self) -> bool:
        return isinstance(self.contents, HiFatDir)


@dataclass(frozen=True)
class HiFatFs:
    root: HiFatDir


class ResolveError(Enum):
    MISSING = "missing"
    NOT_A_DIRECTORY = "not-a-directory"


def norm(name: str) -> str:
    return name.upper()


def new_meta(name: str, directory: bool) -> DirEntry:
    """Fresh metadata for an in-memory node (times all zero)."""
    attr = ATTR_DIRECTORY if directory else ATTR_ARCHIVE
    return make_dir_entry(pack_83_name(name), attr, 0, 0)


def make_regular(name: str, contents: bytes = b"") -> HiFatFile:
    meta = replace(new_meta(name, directory=False), file_size=len(contents))
    return HiFatFile(meta, bytes(contents))


def make_directory(name: str, entries: dict | None = None) -> HiFatFile:
    return HiFatFile(new_meta(name, directory=True), HiFatDir(entries or {}))


def empty_fs() -> HiFatFs:
    return HiFatFs(HiFatDir({}))


def tree_from_dict(spec: dict) -> HiFatFs:
    """Build a filesystem from nested dicts of name -> bytes | dict."""

    def build(d: dict) -> dict:
        entries = {}
        for name, value in d.items():
            if isinstance(value, dict):
                entries[norm(name)] = make_directory(name, build(value))
            else:
                entries[norm(name)] = make_regular(name, value)
        return entries

    return HiFatFs(HiFatDir(build(spec)))


# ---------------------------------------------------------------------------
# Tree access.

def resolve(fs: HiFatFs, path: Sequence[str]):
    """Node at path (the root HiFatDir for an empty path), or a ResolveError."""
    node = fs.root
    for name in path:
        entries = _entries_of(node)
        if entries is None:
            return ResolveError.NOT_A_DIRECTORY
        child = entries.get(norm(name))
        if child is None:
            return ResolveError.MISSING
        node = child
    return node


def _entries_of(node) -> dict | None:
    if isinstance(node, HiFatDir):
        return node.entries
    if isinstance(node, HiFatFile) and node.is_directory:
        return node.contents.entries
    return None


def _rebuild(dirnode: HiFatDir, path: Sequence[str], name: str, child) -> HiFatDir:
    """Copy-on-write set (or delete, child=None) of name under path."""
    entries = dict(dirnode.entries)
    if not path:
        if child is None:
            del entries[name]
        else:
            entries[name] = child
        return HiFatDir(entries)
    head = norm(path[0])
    node = entries[head]
    inner = _rebuild(node.contents, path[1:], name, child)
    entries[head] = HiFatFile(node.meta, inner)
    return HiFatDir(entries)


def insert_node(fs: HiFatFs, parent: Sequence[str], name: str, node: HiFatFile) -> HiFatFs:
    return HiFatFs(_rebuild(fs.root, [norm(p) for p in parent], norm(name), node))


def replace_node(fs: HiFatFs, path: Sequence[str], node: HiFatFile) -> HiFatFs:
    if not path:
        raise ValueError("cannot replace the root")
    parts = [norm(p) for p in path]
    return HiFatFs(_rebuild(fs.root, parts[:-1], parts[-1], node))


# ---------------------------------------------------------------------------
# Ladder-style reads and writes, used by the syscall layer and harness.

def splice_bytes(old: bytes, start: int, data: bytes) -> bytes:
    if start > len(old):
        old = old.ljust(start, b"\x00")
    return old[:start] + data + old[start + len(data):]


def read_bytes(fs: HiFatFs, path: Sequence[str], start: int, n: int) -> bytes | None:
    node = resolve(fs, path)
    if not isinstance(node, HiFatFile) or node.is_directory:
        return None
    if start + n > len(node.contents):
        return None
    return node.contents[start:start + n]


def write_bytes(
    fs: HiFatFs, path: Sequence[str], start: int, data: bytes
) -> tuple[HiFatFs, WriteStatus]:
    node = resolve(fs, path)
    if not isinstance(node, HiFatFile) or node.is_directory:
        return fs, WriteStatus.NOT_FOUND
    contents = splice_bytes(node.contents, start, data)
    meta = replace(node.meta, file_size=len(contents))
    return replace_node(fs, path, HiFatFile(meta, contents)), WriteStatus.OK


def iter_regular_paths(fs: HiFatFs):
    """Yield the path of every regular file, in stored order."""

    def walk(entries: dict, base: tuple):
        for name, node in entries.items():
            if node.is_directory:
                yield from walk(node.contents.entries, base + (name,))
            else:
                yield base + (name,)

    yield from walk(fs.root.entries, ())


# ---------------------------------------------------------------------------
# Image -> tree.

def image_to_hifat(img: Fat32Image) -> HiFatFs:
    """Decode the directory tree reachable from the root cluster."""
    data = read_file_contents(img, img.reserved.root_cluster, 0)
    return HiFatFs(HiFatDir(_parse_dir(img, data, depth=0)))


def _parse_dir(img: Fat32Image, data: bytes, depth: int) -> dict:
    if depth > MAX_DEPTH:
        raise DepthExceededError(f"directory nesting beyond {MAX_DEPTH}")
    entries: dict = {}
    for off in range(0, len(data) - DIR_ENTRY_SIZE + 1, DIR_ENTRY_SIZE):
        entry = decode_dir_entry(data[off:off + DIR_ENTRY_SIZE])
        if entry.raw[0] == 0x00:
            break
        if entry.kind is EntryKind.VACANT or entry.attributes & ATTR_VOLUME_ID:
            continue
        if entry.name in (DOT, DOTDOT):
            continue
        key = norm(entry.display_name)
        if key in entries:
            raise IllFormedError(f"duplicate directory entry {key!r}")
        if entry.kind is EntryKind.DIRECTORY:
            sub = read_file_contents(img, entry.first_cluster, 0)
            node = HiFatFile(entry, HiFatDir(_parse_dir(img, sub, depth + 1)))
        elif entry.first_cluster == 0 and entry.file_size == 0:
            node = HiFatFile(entry, b"")
        else:
            node = HiFatFile(entry, read_file_contents(img, entry.first_cluster, entry.file_size))
        entries[key] = node
    return entries


# ---------------------------------------------------------------------------
# Tree -> image.

def _dir_bytes_len(entries: dict, is_root: bool) -> int:
    return DIR_ENTRY_SIZE * (len(entries) + (0 if is_root else 2))


def _clusters_for(length: int, csize: int) -> int:
    return -(-length // csize)


def clusters_needed(fs: HiFatFs, csize: int) -> int:
    """Clusters a serialization of fs will consume.

    Directories cost at least one cluster; empty regular files cost
    none (they are stored with first cluster 0).
    """

    def cost(entries: dict, is_root: bool) -> int:
        total = max(1, _clusters_for(_dir_bytes_len(entries, is_root), csize))
        for node in entries.values():
            if node.is_directory:
                total += cost(node.contents.entries, False)
            else:
                total += _clusters_for(len(node.contents), csize)
        return total

    return cost(fs.root.entries, True)


def _allocate_pinned(img: Fat32Image, first: int, n: int) -> tuple[Fat32Image, list[int]]:
    """Allocate an n-cluster chain whose head is pinned at first."""
    rest = [
        i
        for i in range(FIRST_DATA_CLUSTER, count_of_clusters(img) + FIRST_DATA_CLUSTER)
        if i != first and fat_entry(img, i) == 0
    ]
    if len(rest) < n - 1:
        raise NoSpaceError(f"{n} clusters requested, {1 + len(rest)} free")
    picked = [first] + rest[:n - 1]
    for pos, i in enumerate(picked):
        target = picked[pos + 1] if pos + 1 < len(picked) else EOC_WRITE
        img = set_fat_entry(img, i, target)
    return img, picked


def hifat_to_image(template: Fat32Image, fs: HiFatFs) -> Fat32Image:
    """Serialize fs into a copy of template.

    The template's allocation table is cleared, then chains are handed
    out lowest-first while walking directories depth-first in insertion
    order (each directory's children immediately after the directory
    itself).  Raises NoSpaceError when fs does not fit and
    NameInvalidError for names that are not valid 8.3 short names.
    """
    img = clear_fat(template)
    csize = cluster_size(img)
    root_cluster = img.reserved.root_cluster
    chains: dict[tuple, list[int]] = {}

    img, root_chain = _allocate_pinned(
        img, root_cluster, max(1, _clusters_for(_dir_bytes_len(fs.root.entries, True), csize))
    )
    chains[()] = root_chain

    def allocate(entries: dict, base: tuple) -> Fat32Image:
        nonlocal img
        for name, node in entries.items():
            pack_83_name(name)  # reject non-8.3 names before touching the image
            path = base + (name,)
            if node.is_directory:
                sub = node.contents.entries
                n = max(1, _clusters_for(_dir_bytes_len(sub, False), csize))
                img, chains[path] = allocate_clusters(img, n)
                allocate(sub, path)
            else:
                n = _clusters_for(len(node.contents), csize)
                if n:
                    img, chains[path] = allocate_clusters(img, n)
                else:
                    chains[path] = []
        return img

    img = allocate(fs.root.entries, ())

    def entry_record(name: str, node: HiFatFile, path: tuple) -> bytes:
        chain = chains[path]
        first = chain[0] if chain else 0
        size = 0 if node.is_directory else len(node.contents)
        return encode_dir_entry(
            replace(node.meta, name=pack_83_name(name), first_cluster=first, file_size=size)
        )

    def write_chain(img: Fat32Image, chain: list[int], data: bytes) -> Fat32Image:
        for k, index in enumerate(chain):
            img = write_cluster(img, index, data[k * csize:(k + 1) * csize])
        return img

    def emit(entries: dict, base: tuple) -> Fat32Image:
        nonlocal img
        records = []
        if base:
            own, parent = chains[base][0], chains[base[:-1]][0]
            if base[:-1] == ():
                parent = 0  # ".." names the root with cluster 0
            records.append(encode_dir_entry(make_dir_entry(DOT, ATTR_DIRECTORY, own, 0)))
            records.append(encode_dir_entry(make_dir_entry(DOTDOT, ATTR_DIRECTORY, parent, 0)))
        for name, node in entries.items():
            records.append(entry_record(name, node, base + (name,)))
        img = write_chain(img, chains[base], b"".join(records))
        for name, node in entries.items():
            if node.is_directory:
                img = emit(node.contents.entries, base + (name,))
            elif node.contents:
                img = write_chain(img, chains[base + (name,)], node.contents)
        return img

    return emit(fs.root.entries, ())


# ---------------------------------------------------------------------------
# Order-insensitive equality.

def hifat_equiv(a: HiFatFs, b: HiFatFs) -> bool:
    """Same shape, kinds, contents and sizes; entry order and raw
    metadata bytes are ignored."""

    def dirs_equiv(da: dict, db: dict) -> bool:
        if set(da) != set(db):
            return False
        for name, na in da.items():
            nb = db[name]
            if na.is_directory != nb.is_directory:
                return False
            if na.is_directory:
                if not dirs_equiv(na.contents.entries, nb.contents.entries):
                    return False
            elif (
                na.contents != nb.contents
                or na.meta.file_size != nb.meta.file_size
            ):
                return False
        return True

    return dirs_equiv(a.root.entries, b.root.entries)
