"""POSIX syscall subset over an in-memory directory tree.

State bundles the filesystem with a file table and per-process fd
tables.  Every call returns ``(result, state, errno)``: errno is None
on success and the state is returned unchanged on error, with the
result set to -1.  Errno values follow the Linux x86-64 numbering.
Reads and writes are positional (pread/pwrite); stored offsets stay 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Sequence

from .errors import NameInvalidError
from .hifat import (
    HiFatDir,
    HiFatFile,
    HiFatFs,
    ResolveError,
    clusters_needed,
    empty_fs,
    insert_node,
    make_directory,
    make_regular,
    norm,
    replace_node,
    resolve,
    splice_bytes,
)
from .image import Fat32Image, cluster_size, count_of_clusters


class Errno(IntEnum):
    ENOENT = 2
    EBADF = 9
    EEXIST = 17
    ENOTDIR = 20
    EISDIR = 21
    ENOSPC = 28
    ENAMETOOLONG = 36


class FileKind(Enum):
    REGULAR = "regular"
    DIRECTORY = "directory"


@dataclass(frozen=True)
class StatResult:
    size: int
    kind: FileKind


@dataclass(frozen=True)
class OpenFile:
    path: tuple[str, ...]
    offset: int = 0


@dataclass(frozen=True)
class FsState:
    """Filesystem plus process bookkeeping.

    ``capacity`` optionally names a volume template; when set, pwrite
    refuses growth that could not be serialized into that volume.
    """

    fs: HiFatFs = field(default_factory=empty_fs)
    file_table: dict = field(default_factory=dict)
    fd_tables: dict = field(default_factory=dict)
    capacity: Fat32Image | None = None


DEFAULT_PID = 0


def _norm_path(path: Sequence[str]) -> tuple[str, ...]:
    return tuple(norm(p) for p in path)


def _lowest_unused(taken) -> int:
    n = 0
    while n in taken:
        n += 1
    return n


def _lookup_fd(st: FsState, pid: int, fd: int) -> OpenFile | None:
    index = st.fd_tables.get(pid, {}).get(fd)
    return None if index is None else st.file_table[index]


def lstat(st: FsState, pid: int, path: Sequence[str]):
    node = resolve(st.fs, _norm_path(path))
    if node is ResolveError.MISSING:
        return -1, st, Errno.ENOENT
    if node is ResolveError.NOT_A_DIRECTORY:
        return -1, st, Errno.ENOTDIR
    if isinstance(node, HiFatDir) or node.is_directory:
        return StatResult(0, FileKind.DIRECTORY), st, None
    return StatResult(len(node.contents), FileKind.REGULAR), st, None


def open_(st: FsState, pid: int, path: Sequence[str]):
    """Open the regular file at path; returns the lowest unused fd."""
    path = _norm_path(path)
    node = resolve(st.fs, path)
    if isinstance(node, ResolveError):
        return -1, st, Errno.ENOENT
    if isinstance(node, HiFatDir) or node.is_directory:
        return -1, st, Errno.EISDIR
    index = _lowest_unused(st.file_table)
    fd_table = dict(st.fd_tables.get(pid, {}))
    fd = _lowest_unused(fd_table)
    fd_table[fd] = index
    file_table = dict(st.file_table)
    file_table[index] = OpenFile(path)
    fd_tables = dict(st.fd_tables)
    fd_tables[pid] = fd_table
    return fd, replace(st, file_table=file_table, fd_tables=fd_tables), None


def pread(st: FsState, pid: int, fd: int, count: int, offset: int):
    entry = _lookup_fd(st, pid, fd)
    if entry is None:
        return -1, st, Errno.EBADF
    node = resolve(st.fs, entry.path)
    return node.contents[offset:offset + count], st, None


def pwrite(st: FsState, pid: int, fd: int, buf: bytes, offset: int):
    entry = _lookup_fd(st, pid, fd)
    if entry is None:
        return -1, st, Errno.EBADF
    node = resolve(st.fs, entry.path)
    contents = splice_bytes(node.contents, offset, bytes(buf))
    meta = replace(node.meta, file_size=len(contents))
    fs = replace_node(st.fs, entry.path, HiFatFile(meta, contents))
    if st.capacity is not None:
        csize = cluster_size(st.capacity)
        if clusters_needed(fs, csize) > count_of_clusters(st.capacity):
            return -1, st, Errno.ENOSPC
    return len(buf), replace(st, fs=fs), None


def close(st: FsState, pid: int, fd: int):
    fd_table = st.fd_tables.get(pid, {})
    if fd not in fd_table:
        return -1, st, Errno.EBADF
    index = fd_table[fd]
    fd_table = {k: v for k, v in fd_table.items() if k != fd}
    fd_tables = dict(st.fd_tables)
    fd_tables[pid] = fd_table
    file_table = st.file_table
    if not any(index in table.values() for table in fd_tables.values()):
        file_table = {k: v for k, v in file_table.items() if k != index}
    return 0, replace(st, file_table=file_table, fd_tables=fd_tables), None


def _create(st: FsState, path: Sequence[str], node_for):
    path = _norm_path(path)
    if not path:
        return -1, st, Errno.EEXIST  # the root itself
    parent = resolve(st.fs, path[:-1])
    if parent is ResolveError.MISSING:
        return -1, st, Errno.ENOENT
    if parent is ResolveError.NOT_A_DIRECTORY or (
        isinstance(parent, HiFatFile) and not parent.is_directory
    ):
        return -1, st, Errno.ENOTDIR
    entries = parent.entries if isinstance(parent, HiFatDir) else parent.contents.entries
    name = path[-1]
    if name in entries:
        return -1, st, Errno.EEXIST
    try:
        node = node_for(name)
    except NameInvalidError:
        return -1, st, Errno.ENAMETOOLONG
    fs = insert_node(st.fs, path[:-1], name, node)
    return 0, replace(st, fs=fs), None


def mkdir(st: FsState, pid: int, path: Sequence[str]):
    return _create(st, path, lambda name: make_directory(name))


def mknod(st: FsState, pid: int, path: Sequence[str]):
    return _create(st, path, lambda name: make_regular(name))
