"""Layered in-memory filesystem models.

Six models of increasing concreteness share one operation surface
(``stat`` / ``rdchs`` / ``wrchs``) and differ in how regular-file
contents are stored:

* L1 - directory tree, file contents held as plain strings
* L2 - L1 plus an explicit length field per file
* L3 - contents split into fixed-size blocks on an unbounded disk
* L4 - bounded disk with an allocation vector for free-block tracking
* L5 - L4 plus per-file owner and permission-bits metadata
* L6 - allocation vector replaced by a linked file-allocation table

Every value is immutable; operations return new instances.
``convert_down`` maps an instance of a richer model to the adjacent
simpler one, which the test harness uses to check that reads and
writes commute with conversion.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterator, Sequence

from .errors import (
    BadChainError,
    BadLengthError,
    IllFormedError,
    IndexOutOfRangeError,
)

# Tail padding and write-gap fill character.
FILLER = "\x00"

DEFAULT_BLOCKSIZE = 8

# Abstract end-of-chain marking: any table entry >= EOC_FLOOR terminates a
# chain; EOC_VALUE is what gets written when a chain is built.
EOC_FLOOR = 0x0FFFFFF8
EOC_VALUE = 0x0FFFFFFF

Path = Sequence[str]

LEVEL_NAMES = ("L1", "L2", "L3", "L4", "L5", "L6")

# Adjacent (upper, lower) pairs accepted by convert_down.
CONVERT_PAIRS = (
    ("L2", "L1"),
    ("L3", "L2"),
    ("L4", "L3"),
    ("L5", "L4"),
    ("L6", "L4"),
)


class WriteStatus(Enum):
    OK = "ok"
    NOT_FOUND = "not-found"
    NO_SPACE = "no-space"


# ---------------------------------------------------------------------------
# Model values.  Directory nodes are plain dicts (name -> child); regular
# files are the per-level leaf payloads below.

@dataclass(frozen=True)
class L1Fs:
    root: dict


@dataclass(frozen=True)
class L2File:
    contents: str
    length: int


@dataclass(frozen=True)
class L2Fs:
    root: dict


@dataclass(frozen=True)
class L3File:
    block_indices: tuple[int, ...]
    length: int


@dataclass(frozen=True)
class L3Fs:
    root: dict
    disk: tuple[str, ...]
    blocksize: int = DEFAULT_BLOCKSIZE


@dataclass(frozen=True)
class L4Fs:
    root: dict
    disk: tuple[str, ...]
    alv: tuple[bool, ...]
    blocksize: int = DEFAULT_BLOCKSIZE


@dataclass(frozen=True)
class L5File:
    block_indices: tuple[int, ...]
    length: int
    owner: int
    mode: int


@dataclass(frozen=True)
class L5Fs:
    root: dict
    disk: tuple[str, ...]
    alv: tuple[bool, ...]
    blocksize: int = DEFAULT_BLOCKSIZE


@dataclass(frozen=True)
class L6File:
    first_index: int | None
    length: int


@dataclass(frozen=True)
class L6Fs:
    root: dict
    disk: tuple[str, ...]
    fat: tuple[int, ...]
    blocksize: int = DEFAULT_BLOCKSIZE
    eoc_floor: int = EOC_FLOOR


# ---------------------------------------------------------------------------
# Block arithmetic.

def make_blocks(text: str, blocksize: int = DEFAULT_BLOCKSIZE) -> list[str]:
    """Split text into blocksize-character blocks, padding the tail."""
    if blocksize < 1:
        raise ValueError("blocksize must be >= 1")
    return [
        text[i:i + blocksize].ljust(blocksize, FILLER)
        for i in range(0, len(text), blocksize)
    ]


def unmake_blocks(blocks: Sequence[str], length: int) -> str:
    """Rejoin blocks and trim padding down to the recorded length."""
    if not blocks:
        if length != 0:
            raise BadLengthError(f"no blocks but length {length}")
        return ""
    blocksize = len(blocks[0])
    if length > blocksize * len(blocks):
        raise BadLengthError(f"length {length} exceeds {len(blocks)} blocks")
    if length <= blocksize * (len(blocks) - 1):
        raise BadLengthError(f"length {length} leaves a whole block unused")
    return "".join(blocks)[:length]


def _blocks_needed(length: int, blocksize: int) -> int:
    return -(-length // blocksize)


def splice(old: str, start: int, text: str) -> str:
    """Overwrite old[start:start+len(text)] with text, zero-filling any gap."""
    if start > len(old):
        old = old.ljust(start, FILLER)
    return old[:start] + text + old[start + len(text):]


# ---------------------------------------------------------------------------
# Allocation vector machinery (L4/L5).

def find_n_free_blocks(alv: Sequence[bool], n: int) -> list[int] | None:
    """Lowest n free indices, or None when fewer than n are free."""
    found: list[int] = []
    if n == 0:
        return found
    for i, used in enumerate(alv):
        if not used:
            found.append(i)
            if len(found) == n:
                return found
    return None


def set_indices(
    alv: Sequence[bool], indices: Sequence[int], value: bool
) -> tuple[bool, ...]:
    """Copy of alv with the given indices set to value."""
    marks = list(alv)
    for i in indices:
        if not 0 <= i < len(marks):
            raise IndexOutOfRangeError(f"index {i} not in vector of {len(marks)}")
        marks[i] = value
    return tuple(marks)


def count_free_blocks(alv: Sequence[bool]) -> int:
    return sum(1 for used in alv if not used)


def fa_table_to_alv(fat: Sequence[int]) -> tuple[bool, ...]:
    """Collapse a file-allocation table to a used/free vector.

    Non-zero entries map to used; entries 0 and 1 are reserved and always
    map to used, so both structures expose the same free space.
    """
    return tuple(i < 2 or entry != 0 for i, entry in enumerate(fat))


def l6_file_index_list(
    fat: Sequence[int],
    first: int,
    length: int,
    blocksize: int = DEFAULT_BLOCKSIZE,
    eoc_floor: int = EOC_FLOOR,
) -> list[int]:
    """Follow a chain through the table, starting at first.

    Raises BadChainError on a free entry, a reserved or out-of-range link,
    a revisited index, or a chain too short to cover length characters.
    """
    if first < 2:
        raise BadChainError(f"chain starts at reserved index {first}")
    if first >= len(fat):
        raise BadChainError(f"chain starts out of range at {first}")
    chain: list[int] = []
    seen: set[int] = set()
    current = first
    while True:
        if current in seen:
            raise BadChainError(f"cycle revisits index {current}")
        seen.add(current)
        chain.append(current)
        entry = fat[current]
        if entry >= eoc_floor:
            break
        if entry == 0:
            raise BadChainError(f"chain hits free entry at index {current}")
        if entry < 2:
            raise BadChainError(f"chain links to reserved index {entry}")
        if entry >= len(fat):
            raise BadChainError(f"chain links out of range to {entry}")
        current = entry
    if len(chain) < _blocks_needed(length, blocksize):
        raise BadChainError(
            f"chain of {len(chain)} blocks cannot hold {length} characters"
        )
    return chain


# ---------------------------------------------------------------------------
# Directory-tree plumbing shared by every level.

def _lookup(root: dict, path: Path) -> Any | None:
    node: Any = root
    for name in path:
        if not isinstance(node, dict) or name not in node:
            return None
        node = node[name]
    return node


def _replace_leaf(root: dict, path: Path, leaf: Any) -> dict:
    """Copy-on-write update of the leaf at path (which must exist)."""
    if not path:
        raise ValueError("cannot replace the root")
    head, rest = path[0], path[1:]
    child = root[head]
    updated = dict(root)
    updated[head] = leaf if not rest else _replace_leaf(child, rest, leaf)
    return updated


def _iter_files(root: dict, base: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], Any]]:
    """Yield (path, leaf) for every regular file, in sorted-name order."""
    for name in sorted(root):
        node = root[name]
        if isinstance(node, dict):
            yield from _iter_files(node, base + (name,))
        else:
            yield base + (name,), node


# ---------------------------------------------------------------------------
# Per-level behavior.

class _Level:
    name: str

    def root_of(self, fs: Any) -> dict:
        return fs.root

    def contents(self, fs: Any, leaf: Any) -> str:
        raise NotImplementedError

    def length(self, fs: Any, leaf: Any) -> int:
        raise NotImplementedError

    def write(self, fs: Any, path: Path, leaf: Any, new: str) -> tuple[Any, WriteStatus]:
        raise NotImplementedError

    def validate(self, fs: Any) -> None:
        raise NotImplementedError


class _L1(_Level):
    name = "L1"

    def contents(self, fs, leaf):
        return leaf

    def length(self, fs, leaf):
        return len(leaf)

    def write(self, fs, path, leaf, new):
        return L1Fs(_replace_leaf(fs.root, path, new)), WriteStatus.OK

    def validate(self, fs):
        if not isinstance(fs, L1Fs):
            raise IllFormedError("not an L1 instance")
        _validate_tree(fs.root, lambda leaf: isinstance(leaf, str))


class _L2(_Level):
    name = "L2"

    def contents(self, fs, leaf):
        return leaf.contents

    def length(self, fs, leaf):
        return leaf.length

    def write(self, fs, path, leaf, new):
        replacement = L2File(new, len(new))
        return L2Fs(_replace_leaf(fs.root, path, replacement)), WriteStatus.OK

    def validate(self, fs):
        if not isinstance(fs, L2Fs):
            raise IllFormedError("not an L2 instance")
        _validate_tree(
            fs.root,
            lambda leaf: isinstance(leaf, L2File) and leaf.length == len(leaf.contents),
        )


class _BlockLevel(_Level):
    """Common handling for levels whose files live in disk blocks."""

    def contents(self, fs, leaf):
        blocks = [fs.disk[i] for i in leaf.block_indices]
        return unmake_blocks(blocks, leaf.length)

    def length(self, fs, leaf):
        return leaf.length

    def _other_used(self, fs, path: Path) -> set[int]:
        used: set[int] = set()
        for file_path, leaf in _iter_files(fs.root):
            if tuple(file_path) != tuple(path):
                used.update(self.indices_of(fs, leaf))
        return used

    def indices_of(self, fs, leaf) -> Sequence[int]:
        return leaf.block_indices

    def _write_blocks(
        self, disk: Sequence[str], indices: Sequence[int], blocks: Sequence[str], blocksize: int
    ) -> tuple[str, ...]:
        cells = list(disk)
        top = max(indices, default=-1)
        if top >= len(cells):
            cells.extend([FILLER * blocksize] * (top + 1 - len(cells)))
        for i, block in zip(indices, blocks):
            cells[i] = block
        return tuple(cells)


class _L3(_BlockLevel):
    name = "L3"

    def write(self, fs, path, leaf, new):
        blocks = make_blocks(new, fs.blocksize)
        used = self._other_used(fs, path)
        free = [i for i in range(len(fs.disk)) if i not in used]
        shortfall = len(blocks) - len(free)
        if shortfall > 0:
            free.extend(range(len(fs.disk), len(fs.disk) + shortfall))
        indices = tuple(free[:len(blocks)])
        disk = self._write_blocks(fs.disk, indices, blocks, fs.blocksize)
        root = _replace_leaf(fs.root, path, L3File(indices, len(new)))
        return L3Fs(root, disk, fs.blocksize), WriteStatus.OK

    def validate(self, fs):
        if not isinstance(fs, L3Fs):
            raise IllFormedError("not an L3 instance")
        _validate_disk(fs.disk, fs.blocksize)
        _validate_tree(fs.root, lambda leaf: _block_leaf_ok(leaf, L3File, fs))


class _L4(_BlockLevel):
    name = "L4"

    file_type = L3File

    def _replacement(self, leaf, indices: tuple[int, ...], length: int):
        return L3File(indices, length)

    def _rebuild(self, fs, root, disk, alv):
        return L4Fs(root, disk, alv, fs.blocksize)

    def write(self, fs, path, leaf, new):
        blocks = make_blocks(new, fs.blocksize)
        freed = set_indices(fs.alv, leaf.block_indices, False)
        found = find_n_free_blocks(freed, len(blocks))
        if found is None:
            return fs, WriteStatus.NO_SPACE
        indices = tuple(found)
        disk = self._write_blocks(fs.disk, indices, blocks, fs.blocksize)
        alv = set_indices(freed, indices, True)
        root = _replace_leaf(fs.root, path, self._replacement(leaf, indices, len(new)))
        return self._rebuild(fs, root, disk, alv), WriteStatus.OK

    def validate(self, fs):
        if not isinstance(fs, L4Fs):
            raise IllFormedError("not an L4 instance")
        _validate_bounded(fs, self.file_type)


class _L5(_L4):
    name = "L5"

    file_type = L5File

    def _replacement(self, leaf, indices, length):
        return L5File(indices, length, leaf.owner, leaf.mode)

    def _rebuild(self, fs, root, disk, alv):
        return L5Fs(root, disk, alv, fs.blocksize)

    def validate(self, fs):
        if not isinstance(fs, L5Fs):
            raise IllFormedError("not an L5 instance")
        _validate_bounded(fs, self.file_type)
        for _, leaf in _iter_files(fs.root):
            if leaf.owner < 0 or not 0 <= leaf.mode < 2 ** 12:
                raise IllFormedError(f"bad ownership metadata on {leaf}")


class _L6(_BlockLevel):
    name = "L6"

    def indices_of(self, fs, leaf):
        if leaf.first_index is None:
            return ()
        return l6_file_index_list(
            fs.fat, leaf.first_index, leaf.length, fs.blocksize, fs.eoc_floor
        )

    def contents(self, fs, leaf):
        chain = self.indices_of(fs, leaf)
        needed = _blocks_needed(leaf.length, fs.blocksize)
        blocks = [fs.disk[i] for i in chain[:needed]]
        return unmake_blocks(blocks, leaf.length)

    def write(self, fs, path, leaf, new):
        blocks = make_blocks(new, fs.blocksize)
        table = list(fs.fat)
        for i in self.indices_of(fs, leaf):
            table[i] = 0
        free = [i for i in range(2, len(table)) if table[i] == 0]
        if len(free) < len(blocks):
            return fs, WriteStatus.NO_SPACE
        indices = tuple(free[:len(blocks)])
        for pos, i in enumerate(indices):
            table[i] = indices[pos + 1] if pos + 1 < len(indices) else EOC_VALUE
        disk = self._write_blocks(fs.disk, indices, blocks, fs.blocksize)
        first = indices[0] if indices else None
        root = _replace_leaf(fs.root, path, L6File(first, len(new)))
        return L6Fs(root, disk, tuple(table), fs.blocksize, fs.eoc_floor), WriteStatus.OK

    def validate(self, fs):
        if not isinstance(fs, L6Fs):
            raise IllFormedError("not an L6 instance")
        _validate_disk(fs.disk, fs.blocksize)
        if len(fs.fat) != len(fs.disk):
            raise IllFormedError("table length differs from disk size")

        def leaf_ok(leaf):
            if not isinstance(leaf, L6File) or leaf.length < 0:
                return False
            if leaf.length > 0 and leaf.first_index is None:
                return False
            if leaf.first_index is not None:
                try:
                    self.indices_of(fs, leaf)
                except BadChainError:
                    return False
            return True

        _validate_tree(fs.root, leaf_ok)


LEVELS: dict[str, _Level] = {
    level.name: level for level in (_L1(), _L2(), _L3(), _L4(), _L5(), _L6())
}


def _validate_tree(root: Any, leaf_ok) -> None:
    if not isinstance(root, dict):
        raise IllFormedError(f"directory node expected, got {type(root).__name__}")
    for name, node in root.items():
        if not isinstance(name, str) or not name or "/" in name:
            raise IllFormedError(f"bad entry name {name!r}")
        if isinstance(node, dict):
            _validate_tree(node, leaf_ok)
        elif not leaf_ok(node):
            raise IllFormedError(f"bad regular file {name!r}: {node!r}")


def _validate_disk(disk: Sequence[str], blocksize: int) -> None:
    if blocksize < 1:
        raise IllFormedError("blocksize must be >= 1")
    for i, block in enumerate(disk):
        if not isinstance(block, str) or len(block) != blocksize:
            raise IllFormedError(f"block {i} is not {blocksize} characters")


def _block_leaf_ok(leaf: Any, leaf_type: type, fs: Any) -> bool:
    return (
        isinstance(leaf, leaf_type)
        and leaf.length >= 0
        and leaf.length <= fs.blocksize * len(leaf.block_indices)
        and all(0 <= i < len(fs.disk) for i in leaf.block_indices)
    )


def _validate_bounded(fs: Any, leaf_type: type) -> None:
    _validate_disk(fs.disk, fs.blocksize)
    if len(fs.alv) != len(fs.disk):
        raise IllFormedError("allocation vector length differs from disk size")
    if not all(isinstance(m, bool) for m in fs.alv):
        raise IllFormedError("allocation vector must hold booleans")
    _validate_tree(fs.root, lambda leaf: _block_leaf_ok(leaf, leaf_type, fs))


# ---------------------------------------------------------------------------
# The shared operation surface.

def stat(level: str, fs: Any, path: Path) -> Any | None:
    """Node at path: a leaf payload, a directory dict, or None if absent."""
    return _lookup(LEVELS[level].root_of(fs), path)


def rdchs(level: str, fs: Any, path: Path, start: int, n: int) -> str | None:
    """Read n characters at offset start, or None when that is impossible."""
    model = LEVELS[level]
    node = _lookup(model.root_of(fs), path)
    if node is None or isinstance(node, dict):
        return None
    if start + n > model.length(fs, node):
        return None
    return model.contents(fs, node)[start:start + n]


def wrchs(level: str, fs: Any, path: Path, start: int, text: str) -> tuple[Any, WriteStatus]:
    """Write text at offset start of the regular file at path.

    Returns the new filesystem and a status; the input is returned
    unchanged with NOT_FOUND when path does not name a regular file and
    with NO_SPACE when a bounded level cannot allocate enough blocks.
    """
    model = LEVELS[level]
    node = _lookup(model.root_of(fs), path)
    if node is None or isinstance(node, dict):
        return fs, WriteStatus.NOT_FOUND
    new = splice(model.contents(fs, node), start, text)
    return model.write(fs, tuple(path), node, new)


def fs_p(level: str, fs: Any) -> bool:
    """Shape check: does fs satisfy its level's structural invariants?"""
    try:
        LEVELS[level].validate(fs)
    except IllFormedError:
        return False
    return True


def l4_list_all_indices(fs: L4Fs | L5Fs) -> list[int]:
    """Every file's block indices, concatenated in sorted-name order."""
    indices: list[int] = []
    for _, leaf in _iter_files(fs.root):
        indices.extend(leaf.block_indices)
    return indices


def l4_stricter_fs_p(fs: L4Fs | L5Fs, alv: Sequence[bool] | None = None) -> bool:
    """Well-formed, duplicate-free, and every file block marked used.

    The vector defaults to the one carried by the instance; passing one
    explicitly checks the tree against a different allocation state.
    """
    marks = fs.alv if alv is None else tuple(alv)
    level = "L5" if isinstance(fs, L5Fs) else "L4"
    if not fs_p(level, fs):
        return False
    if not all(isinstance(m, bool) for m in marks):
        return False
    indices = l4_list_all_indices(fs)
    if len(set(indices)) != len(indices):
        return False
    return all(i < len(marks) and marks[i] for i in indices)


# ---------------------------------------------------------------------------
# Conversions down the model ladder.

def convert_down(upper: str, lower: str, fs: Any) -> Any:
    """Map an instance of the upper model to the adjacent lower model."""
    if (upper, lower) not in CONVERT_PAIRS:
        raise ValueError(f"no conversion from {upper} to {lower}")
    LEVELS[upper].validate(fs)
    return _CONVERSIONS[upper, lower](fs)


def _map_leaves(root: dict, fn) -> dict:
    return {
        name: _map_leaves(node, fn) if isinstance(node, dict) else fn(node)
        for name, node in root.items()
    }


def _l2_to_l1(fs: L2Fs) -> L1Fs:
    return L1Fs(_map_leaves(fs.root, lambda leaf: leaf.contents))


def _l3_to_l2(fs: L3Fs) -> L2Fs:
    model = LEVELS["L3"]

    def demote(leaf: L3File) -> L2File:
        return L2File(model.contents(fs, leaf), leaf.length)

    return L2Fs(_map_leaves(fs.root, demote))


def _l4_to_l3(fs: L4Fs) -> L3Fs:
    return L3Fs(fs.root, fs.disk, fs.blocksize)


def _l5_to_l4(fs: L5Fs) -> L4Fs:
    demoted = _map_leaves(
        fs.root, lambda leaf: L3File(leaf.block_indices, leaf.length)
    )
    return L4Fs(demoted, fs.disk, fs.alv, fs.blocksize)


def _l6_to_l4(fs: L6Fs) -> L4Fs:
    def demote(leaf: L6File) -> L3File:
        if leaf.first_index is None:
            return L3File((), leaf.length)
        chain = l6_file_index_list(
            fs.fat, leaf.first_index, leaf.length, fs.blocksize, fs.eoc_floor
        )
        return L3File(tuple(chain), leaf.length)

    return L4Fs(
        _map_leaves(fs.root, demote), fs.disk, fa_table_to_alv(fs.fat), fs.blocksize
    )


_CONVERSIONS = {
    ("L2", "L1"): _l2_to_l1,
    ("L3", "L2"): _l3_to_l2,
    ("L4", "L3"): _l4_to_l3,
    ("L5", "L4"): _l5_to_l4,
    ("L6", "L4"): _l6_to_l4,
}
