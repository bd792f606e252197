"""Seeded generators and property runners for the model stack.

Each check runs N independent trials; every trial derives its own RNG
from (property, level, seed, trial index), so any failure is
reproducible from the seed embedded in the report.  Checks stop at the
first counterexample.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from . import ladder
from .hifat import (
    HiFatFs,
    image_to_hifat,
    hifat_to_image,
    iter_regular_paths,
    read_bytes,
    resolve,
    tree_from_dict,
    write_bytes,
)
from .image import build_blank_image, compliant_fat32_p
from .ladder import (
    EOC_VALUE,
    L1Fs,
    L2File,
    L2Fs,
    L3File,
    L3Fs,
    L4Fs,
    L5File,
    L5Fs,
    L6File,
    L6Fs,
    WriteStatus,
    convert_down,
    count_free_blocks,
    fs_p,
    l4_stricter_fs_p,
    rdchs,
    set_indices,
    stat,
    wrchs,
)
from .syscalls import DEFAULT_PID, FsState, close, open_, pread, pwrite

# Contents include the zero-fill character to stress padding paths.
TEXT_ALPHABET = "abcdefgh0123456789XYZ \x00"

FILE_NAMES = ("ALPHA.TXT", "BETA", "GAMMA.BIN", "DELTA", "KAPPA.LOG", "OMEGA")
DIR_NAMES = ("SUB", "TMP", "VAR", "DEEP")

ROW_LEVELS = ("L1", "L2", "L3", "L4", "L5", "L6", "hifat", "syscall")

COMMUTE_PAIRS = {"L2": "L1", "L3": "L2", "L4": "L3", "L5": "L4", "L6": "L4"}

_GAP_CHANCE = 0.25  # chance of leaving a free block between placed files


@dataclass
class CheckReport:
    name: str
    level: str | None
    trials: int
    passed: bool
    first_failure: str | None = None
    details: dict = field(default_factory=dict)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        scope = f" {self.level}" if self.level else ""
        line = f"{verdict} {self.name}{scope} ({self.trials} trials)"
        if self.first_failure:
            line += f"\n  counterexample: {self.first_failure}"
        return line


# ---------------------------------------------------------------------------
# Instance generation.

def _gen_text(rng: random.Random, max_len: int) -> str:
    return "".join(rng.choices(TEXT_ALPHABET, k=rng.randint(0, max_len)))


def _gen_shape(rng: random.Random, n_files: int) -> dict:
    """Random tree skeleton: "file" marks a regular-file slot."""
    shape: dict = {}
    for _ in range(n_files):
        node = shape
        blocked = False
        for _ in range(rng.randint(0, 3)):
            name = rng.choice(DIR_NAMES)
            child = node.get(name)
            if child is None:
                node[name] = {}
                node = node[name]
            elif isinstance(child, dict):
                node = child
            else:
                blocked = True
                break
        if not blocked:
            name = rng.choice(FILE_NAMES)
            if not isinstance(node.get(name), dict):
                node[name] = "file"
    return shape


def _file_count(shape: dict) -> int:
    return sum(
        _file_count(v) if isinstance(v, dict) else 1 for v in shape.values()
    )


def _shape_paths(shape: dict, base: tuple = ()):
    for name, value in shape.items():
        if isinstance(value, dict):
            yield from _shape_paths(value, base + (name,))
        else:
            yield base + (name,)


def _fill_shape(shape: dict, contents: dict, leaf_fn, base: tuple = ()) -> dict:
    return {
        name: (
            _fill_shape(value, contents, leaf_fn, base + (name,))
            if isinstance(value, dict)
            else leaf_fn(base + (name,), contents[base + (name,)])
        )
        for name, value in shape.items()
    }


def gen_fs(level: str, seed, size_budget: int = 6, min_files: int = 1):
    """Deterministic random instance of the given level.

    Guarantees at least min_files regular files and, at bounded levels,
    an allocation state marking exactly the blocks files hold.
    """
    rng = random.Random(f"fs:{level}:{seed}:{size_budget}:{min_files}")
    hi = max(min_files, min(6, size_budget))
    shape = _gen_shape(rng, rng.randint(min_files, hi))
    pad = 0
    while _file_count(shape) < min_files:
        shape[f"EXTRA{pad}"] = "file"
        pad += 1

    if level in ("L1", "L2"):
        contents = {p: _gen_text(rng, 24) for p in _shape_paths(shape)}
        if level == "L1":
            return L1Fs(_fill_shape(shape, contents, lambda p, c: c))
        return L2Fs(_fill_shape(shape, contents, lambda p, c: L2File(c, len(c))))
    if level == "hifat":
        contents = {
            p: _gen_text(rng, 24).encode("latin-1") for p in _shape_paths(shape)
        }
        spec = _fill_shape(shape, contents, lambda p, c: c)
        return tree_from_dict(_decode_shape(spec))
    if level == "syscall":
        return FsState(fs=gen_fs("hifat", seed, size_budget, min_files))
    return _gen_block_level(level, rng, shape)


def _decode_shape(spec: dict) -> dict:
    # tree_from_dict takes nested dicts already; leaves here are bytes.
    return {
        name: _decode_shape(v) if isinstance(v, dict) else v
        for name, v in spec.items()
    }


def _gen_block_level(level: str, rng: random.Random, shape: dict):
    blocksize = ladder.DEFAULT_BLOCKSIZE
    cursor = 2 if level == "L6" else 0  # table entries 0 and 1 are reserved
    placement: dict[tuple, list[int]] = {}
    contents: dict[tuple, str] = {}
    metadata: dict[tuple, tuple[int, int]] = {}
    for path in _shape_paths(shape):
        text = _gen_text(rng, 12)
        contents[path] = text
        k = -(-len(text) // blocksize)
        placement[path] = list(range(cursor, cursor + k))
        cursor += k
        if rng.random() < _GAP_CHANCE:
            cursor += 1
        metadata[path] = (rng.randrange(10), rng.randrange(2 ** 12))

    size = cursor + rng.randint(0, 4)
    disk = ["#" * blocksize] * size  # unplaced cells hold junk
    for path, indices in placement.items():
        for i, block in zip(indices, ladder.make_blocks(contents[path], blocksize)):
            disk[i] = block

    if level == "L3":
        tree = _fill_shape(
            shape, contents,
            lambda p, c: L3File(tuple(placement[p]), len(c)),
        )
        return L3Fs(tree, tuple(disk), blocksize)
    if level in ("L4", "L5"):
        alv = [False] * size
        for indices in placement.values():
            for i in indices:
                alv[i] = True
        if level == "L4":
            tree = _fill_shape(
                shape, contents,
                lambda p, c: L3File(tuple(placement[p]), len(c)),
            )
            return L4Fs(tree, tuple(disk), tuple(alv), blocksize)
        tree = _fill_shape(
            shape, contents,
            lambda p, c: L5File(tuple(placement[p]), len(c), *metadata[p]),
        )
        return L5Fs(tree, tuple(disk), tuple(alv), blocksize)
    if level == "L6":
        fat = [0] * size
        if size > 0:
            fat[0] = 0x0FFFFFF8
        if size > 1:
            fat[1] = EOC_VALUE
        for indices in placement.values():
            for pos, i in enumerate(indices):
                fat[i] = indices[pos + 1] if pos + 1 < len(indices) else EOC_VALUE
        tree = _fill_shape(
            shape, contents,
            lambda p, c: L6File(placement[p][0] if placement[p] else None, len(c)),
        )
        return L6Fs(tree, tuple(disk), tuple(fat), blocksize)
    raise ValueError(f"unknown level {level!r}")


# ---------------------------------------------------------------------------
# Uniform read/write adapters over the whole stack.

class _Ops:
    """Level-specific hooks shared by the row/compose checks."""

    def __init__(self, level: str):
        self.level = level

    def regular_paths(self, fs) -> list[tuple]:
        if self.level == "syscall":
            return list(iter_regular_paths(fs.fs))
        if self.level == "hifat":
            return list(iter_regular_paths(fs))
        return [p for p, _ in ladder._iter_files(fs.root)]

    def file_length(self, fs, path) -> int:
        if self.level == "syscall":
            return len(resolve(fs.fs, path).contents)
        if self.level == "hifat":
            return len(resolve(fs, path).contents)
        model = ladder.LEVELS[self.level]
        return model.length(fs, stat(self.level, fs, path))

    def text(self, rng: random.Random, max_len: int):
        sample = _gen_text(rng, max_len)
        if self.level in ("hifat", "syscall"):
            return sample.encode("latin-1")
        return sample

    def read(self, fs, path, start, n):
        if self.level == "syscall":
            fd, st, err = open_(fs, DEFAULT_PID, path)
            if err is not None:
                return None
            data, _, err = pread(st, DEFAULT_PID, fd, n, start)
            return None if err is not None else data
        if self.level == "hifat":
            return read_bytes(fs, path, start, n)
        return rdchs(self.level, fs, path, start, n)

    def write(self, fs, path, start, text):
        if self.level == "syscall":
            fd, st, err = open_(fs, DEFAULT_PID, path)
            if err is not None:
                return fs, WriteStatus.NOT_FOUND
            _, st, err = pwrite(st, DEFAULT_PID, fd, text, start)
            if err is not None:
                return fs, WriteStatus.NO_SPACE
            _, st, _ = close(st, DEFAULT_PID, fd)
            return st, WriteStatus.OK
        if self.level == "hifat":
            return write_bytes(fs, path, start, text)
        return wrchs(self.level, fs, path, start, text)

    def validate(self, fs) -> str | None:
        """Re-check the level's invariants; a message means failure."""
        if self.level == "syscall":
            fs = fs.fs
        if self.level in ("syscall", "hifat"):
            for path in iter_regular_paths(fs):
                node = resolve(fs, path)
                if node.meta.file_size != len(node.contents):
                    return f"size field out of sync at {path}"
            return None
        if self.level in ("L4", "L5"):
            if not l4_stricter_fs_p(fs):
                return "allocation invariant broken"
            return None
        return None if fs_p(self.level, fs) else "instance ill-formed"


def _write_until_fits(ops: _Ops, fs, path, start, text):
    """Write, halving the payload on NO_SPACE; '' at offset 0 always fits.

    Returns (state, status, text, start, problem) with the offset and
    payload actually written.
    """
    out, status = ops.write(fs, path, start, text)
    while status is WriteStatus.NO_SPACE:
        if out != fs:
            return out, status, text, start, "state changed on failed write"
        if not text and start == 0:
            return out, status, text, start, "in-place empty write reported no-space"
        # A write can demand space through its payload or through the
        # zero-filled gap up to the offset; shed both.
        text, start = text[: len(text) // 2], 0
        out, status = ops.write(fs, path, start, text)
    return out, status, text, start, None


# ---------------------------------------------------------------------------
# Property checks.

def check_row1(level: str, trials: int, seed: int = 0, write_op=None) -> CheckReport:
    """A write is immediately visible to a same-length read at its spot."""
    ops = _Ops(level)
    write = write_op or ops.write
    report = CheckReport("read-over-write-1", level, trials, True)
    for trial in range(trials):
        iseed = f"{seed}:{trial}"
        rng = random.Random(f"row1:{level}:{iseed}")
        fs = gen_fs(level, iseed)
        path = rng.choice(ops.regular_paths(fs))
        start = rng.randint(0, ops.file_length(fs, path) + 6)
        text = ops.text(rng, 12)

        out, status = write(fs, path, start, text)
        while status is WriteStatus.NO_SPACE and (text or start):
            text, start = text[: len(text) // 2], 0
            out, status = write(fs, path, start, text)
        if status is not WriteStatus.OK:
            report.passed = False
            report.first_failure = f"seed {iseed}: write failed with {status}"
            break
        got = ops.read(out, path, start, len(text))
        if got != text:
            report.passed = False
            report.first_failure = (
                f"seed {iseed}: wrote {text!r} at {path}+{start}, read {got!r}"
            )
            break
        problem = ops.validate(out)
        if problem:
            report.passed = False
            report.first_failure = f"seed {iseed}: {problem}"
            break
    return report


def _other_path(rng: random.Random, ops: _Ops, fs, path1):
    regulars = [p for p in ops.regular_paths(fs) if p != path1]
    roll = rng.random()
    if regulars and roll < 0.7:
        return rng.choice(regulars)
    if roll < 0.85:
        return path1[:-1] + ("GHOST",)
    return ("DEEP",) if path1 != ("DEEP",) else ("GHOST",)


def check_row2(level: str, trials: int, seed: int = 0) -> CheckReport:
    """A write never changes a read at any other path."""
    ops = _Ops(level)
    report = CheckReport("read-over-write-2", level, trials, True)
    for trial in range(trials):
        iseed = f"{seed}:{trial}"
        rng = random.Random(f"row2:{level}:{iseed}")
        fs = gen_fs(level, iseed)
        path1 = rng.choice(ops.regular_paths(fs))
        path2 = _other_path(rng, ops, fs, path1)
        start1 = rng.randint(0, ops.file_length(fs, path1) + 6)
        n1 = rng.randint(0, 14)
        start2 = rng.randint(0, 20)
        text2 = ops.text(rng, 12)

        before = ops.read(fs, path1, start1, n1)
        out, status = ops.write(fs, path2, start2, text2)
        after = ops.read(out, path1, start1, n1)
        if before != after:
            report.passed = False
            report.first_failure = (
                f"seed {iseed}: write at {path2} changed read at {path1}:"
                f" {before!r} -> {after!r}"
            )
            break
        if status is WriteStatus.OK:
            problem = ops.validate(out)
            if problem:
                report.passed = False
                report.first_failure = f"seed {iseed}: {problem}"
                break
    return report


def check_compose(level: str, trials: int, seed: int = 0) -> CheckReport:
    """write p1, write p2 != p1, read p1 still returns the first text."""
    ops = _Ops(level)
    report = CheckReport("write-write-read composition", level, trials, True)
    for trial in range(trials):
        iseed = f"{seed}:{trial}"
        rng = random.Random(f"compose:{level}:{iseed}")
        fs = gen_fs(level, iseed, min_files=2)
        path1, path2 = rng.sample(ops.regular_paths(fs), 2)
        start1 = rng.randint(0, ops.file_length(fs, path1) + 6)
        start2 = rng.randint(0, ops.file_length(fs, path2) + 6)
        text1 = ops.text(rng, 12)
        text2 = ops.text(rng, 12)

        mid, status, text1, start1, problem = _write_until_fits(
            ops, fs, path1, start1, text1
        )
        if problem or status is not WriteStatus.OK:
            report.passed = False
            report.first_failure = f"seed {iseed}: first write: {problem or status}"
            break
        out, status, text2, start2, problem = _write_until_fits(
            ops, mid, path2, start2, text2
        )
        if problem or status is not WriteStatus.OK:
            report.passed = False
            report.first_failure = f"seed {iseed}: second write: {problem or status}"
            break
        got = ops.read(out, path1, start1, len(text1))
        if got != text1:
            report.passed = False
            report.first_failure = (
                f"seed {iseed}: read-back {got!r} != {text1!r} after foreign write"
            )
            break
    return report


def check_commute(upper: str, trials: int, seed: int = 0, convert_op=None) -> CheckReport:
    """Reads and successful writes commute with converting down a level."""
    lower = COMMUTE_PAIRS[upper]
    convert = convert_op or convert_down
    ops = _Ops(upper)
    report = CheckReport("conversion commutation", f"{upper}/{lower}", trials, True)
    for trial in range(trials):
        iseed = f"{seed}:{trial}"
        rng = random.Random(f"commute:{upper}:{iseed}")
        fs_up = gen_fs(upper, iseed)
        fs_lo = convert(upper, lower, fs_up)

        paths = ops.regular_paths(fs_up) + [("GHOST",), ("DEEP",)]
        fail = None
        for path in paths:
            start, n = rng.randint(0, 10), rng.randint(0, 12)
            up_read = rdchs(upper, fs_up, path, start, n)
            lo_read = rdchs(lower, fs_lo, path, start, n)
            if up_read != lo_read:
                fail = (
                    f"seed {iseed}: reads differ at {path}: "
                    f"{up_read!r} (upper) vs {lo_read!r} (lower)"
                )
                break
        if fail:
            report.passed = False
            report.first_failure = fail
            break

        path = rng.choice(paths)
        start = rng.randint(0, 16)
        text = _gen_text(rng, 12)
        up_out, up_status = wrchs(upper, fs_up, path, start, text)
        lo_out, lo_status = wrchs(lower, fs_lo, path, start, text)
        if up_status is WriteStatus.OK:
            if lo_status is not WriteStatus.OK:
                report.passed = False
                report.first_failure = (
                    f"seed {iseed}: upper write ok, lower write {lo_status}"
                )
                break
            converted = convert(upper, lower, up_out)
            if converted != lo_out:
                report.passed = False
                report.first_failure = (
                    f"seed {iseed}: write square does not commute at {path}"
                )
                break
            problem = ops.validate(up_out)
            if problem:
                report.passed = False
                report.first_failure = f"seed {iseed}: {problem}"
                break
        elif up_status is WriteStatus.NOT_FOUND and lo_status is not WriteStatus.NOT_FOUND:
            report.passed = False
            report.first_failure = f"seed {iseed}: miss statuses differ at {path}"
            break
    return report


def check_space_iff(trials: int, seed: int = 0) -> CheckReport:
    """Bounded write succeeds iff enough blocks are free once the
    target's own blocks are returned; the bound comes from independent
    ceiling arithmetic."""
    report = CheckReport("allocation iff free space", "L4", trials, True)
    success = failure = 0
    for trial in range(trials):
        iseed = f"{seed}:{trial}"
        rng = random.Random(f"space:{iseed}")
        fs = gen_fs("L4", iseed)
        path = rng.choice([p for p, _ in ladder._iter_files(fs.root)])
        leaf = stat("L4", fs, path)
        start = rng.randint(0, leaf.length + 10)
        text = _gen_text(rng, rng.choice([4, 12, 40, 80]))

        new_length = max(leaf.length, start + len(text))
        needed = (new_length + fs.blocksize - 1) // fs.blocksize
        free_after = count_free_blocks(
            set_indices(fs.alv, leaf.block_indices, False)
        )
        expected_ok = free_after >= needed

        out, status = wrchs("L4", fs, path, start, text)
        if (status is WriteStatus.OK) != expected_ok:
            report.passed = False
            report.first_failure = (
                f"seed {iseed}: status {status} but oracle says "
                f"free={free_after} needed={needed}"
            )
            break
        if status is WriteStatus.OK:
            success += 1
            if not l4_stricter_fs_p(out):
                report.passed = False
                report.first_failure = f"seed {iseed}: invariant broken after write"
                break
        else:
            failure += 1
            if out != fs:
                report.passed = False
                report.first_failure = f"seed {iseed}: failed write changed state"
                break
    report.details = {"succeeded": success, "refused": failure}
    return report


# ---------------------------------------------------------------------------
# Differential run of syscall scripts with and without image round trips.

_STACK_TEMPLATE = build_blank_image(64, 512)

_SCRIPT_OPS = ("mknod", "mkdir", "open", "close", "pread", "pwrite", "lstat")


def _script_step(rng: random.Random, known_paths: list, fds: list):
    op = rng.choice(_SCRIPT_OPS)
    if op in ("mknod", "mkdir", "open", "lstat"):
        if known_paths and rng.random() < 0.6:
            path = rng.choice(known_paths)
        else:
            base = rng.choice(DIR_NAMES)
            leaf = rng.choice(FILE_NAMES)
            path = rng.choice([(leaf,), (base, leaf), (base,)])
        return op, {"path": path}
    fd = rng.choice(fds) if fds and rng.random() < 0.7 else rng.randrange(6)
    if op == "close":
        return op, {"fd": fd}
    if op == "pread":
        return op, {"fd": fd, "count": rng.randint(0, 80), "offset": rng.randint(0, 320)}
    data = _gen_text(rng, 60).encode("latin-1")
    return op, {"fd": fd, "buf": data, "offset": rng.randint(0, 300)}


def _apply(op: str, st: FsState, args: dict):
    from . import syscalls

    table = {
        "mknod": lambda: syscalls.mknod(st, DEFAULT_PID, args["path"]),
        "mkdir": lambda: syscalls.mkdir(st, DEFAULT_PID, args["path"]),
        "open": lambda: open_(st, DEFAULT_PID, args["path"]),
        "close": lambda: close(st, DEFAULT_PID, args["fd"]),
        "pread": lambda: pread(st, DEFAULT_PID, args["fd"], args["count"], args["offset"]),
        "pwrite": lambda: pwrite(st, DEFAULT_PID, args["fd"], args["buf"], args["offset"]),
        "lstat": lambda: syscalls.lstat(st, DEFAULT_PID, args["path"]),
    }
    return table[op]()


def check_concrete_stack(scripts: int, seed: int = 0, max_steps: int = 20) -> CheckReport:
    """Run random syscall scripts twice: directly, and with the tree
    pushed through a disk image between steps.  Observable results must
    match call for call."""
    report = CheckReport("image round-trip differential", "syscall", scripts, True)
    for script in range(scripts):
        iseed = f"{seed}:{script}"
        rng = random.Random(f"stack:{iseed}")
        plain = FsState(capacity=_STACK_TEMPLATE)
        staged = FsState(capacity=_STACK_TEMPLATE)
        known_paths: list = []
        fds: list = []
        for step in range(rng.randint(1, max_steps)):
            op, args = _script_step(rng, known_paths, fds)
            res_a, plain, err_a = _apply(op, plain, args)
            res_b, staged, err_b = _apply(op, staged, args)
            if (res_a, err_a) != (res_b, err_b):
                report.passed = False
                report.first_failure = (
                    f"seed {iseed} step {step}: {op}{args} gave "
                    f"{(res_a, err_a)} directly but {(res_b, err_b)} via image"
                )
                return report
            if op in ("mknod", "mkdir") and err_a is None:
                known_paths.append(args["path"])
            if op == "open" and err_a is None:
                fds.append(res_a)

            img = hifat_to_image(_STACK_TEMPLATE, staged.fs)
            if not compliant_fat32_p(img, relaxed=True):
                report.passed = False
                report.first_failure = f"seed {iseed} step {step}: image not compliant"
                return report
            staged = replace(staged, fs=image_to_hifat(img))
    return report


# ---------------------------------------------------------------------------
# Dispatch used by the command-line entry point.

DEFAULT_TRIALS = {
    "row1": 1000,
    "row2": 1000,
    "compose": 500,
    "commute": 500,
    "space": 1000,
    "stack": 200,
}


def run_check(prop: str, level: str | None, trials: int | None, seed: int = 0) -> CheckReport:
    n = trials if trials is not None else DEFAULT_TRIALS[prop]
    if prop == "row1":
        return check_row1(level or "L1", n, seed)
    if prop == "row2":
        return check_row2(level or "L1", n, seed)
    if prop == "compose":
        return check_compose(level or "L1", n, seed)
    if prop == "commute":
        if level not in COMMUTE_PAIRS:
            raise ValueError(f"commutation needs an upper level, not {level!r}")
        return check_commute(level, n, seed)
    if prop == "space":
        return check_space_iff(n, seed)
    if prop == "stack":
        return check_concrete_stack(n, seed)
    raise ValueError(f"unknown property {prop!r}")
