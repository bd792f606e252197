import pytest

from fatbench.hifat import tree_from_dict
from fatbench.image import build_blank_image
from fatbench.syscalls import (
    DEFAULT_PID as PID,
    Errno,
    FileKind,
    FsState,
    StatResult,
    close,
    lstat,
    mkdir,
    mknod,
    open_,
    pread,
    pwrite,
)

from conftest import DEMO_TREE


@pytest.fixture
def st(demo_fs):
    return FsState(fs=demo_fs)


def test_lstat_directory(st):
    result, st, err = lstat(st, PID, ["tmp"])
    assert err is None
    assert result == StatResult(0, FileKind.DIRECTORY)


def test_lstat_regular_size(st):
    result, _, err = lstat(st, PID, ["tmp", "ticket1.txt"])
    assert err is None
    assert result.kind is FileKind.REGULAR
    assert result.size == len(DEMO_TREE["tmp"]["ticket1.txt"])


def test_lstat_missing(st):
    result, out, err = lstat(st, PID, ["nope"])
    assert (result, err) == (-1, Errno.ENOENT)
    assert out is st


def test_lstat_through_file(st):
    result, _, err = lstat(st, PID, ["vmlinuz", "x"])
    assert (result, err) == (-1, Errno.ENOTDIR)


def test_open_allocates_lowest_fds(st):
    fd0, st, err = open_(st, PID, ["vmlinuz"])
    assert (fd0, err) == (0, None)
    fd1, st, err = open_(st, PID, ["initrd.img"])
    assert (fd1, err) == (1, None)


def test_open_missing_and_directory(st):
    result, _, err = open_(st, PID, ["ghost"])
    assert (result, err) == (-1, Errno.ENOENT)
    result, _, err = open_(st, PID, ["tmp"])
    assert (result, err) == (-1, Errno.EISDIR)


def test_open_close_open_reuses_fd(st):
    fd0, st, _ = open_(st, PID, ["vmlinuz"])
    fd1, st, _ = open_(st, PID, ["initrd.img"])
    _, st, err = close(st, PID, fd0)
    assert err is None
    fd2, st, _ = open_(st, PID, ["tmp", "ticket1.txt"])
    assert fd2 == fd0


def test_pread_substring():
    state = FsState(fs=tree_from_dict({"f": b"hello"}))
    fd, state, _ = open_(state, PID, ["f"])
    data, _, err = pread(state, PID, fd, 3, 1)
    assert (data, err) == (b"ell", None)


def test_pread_short_and_empty_at_eof():
    state = FsState(fs=tree_from_dict({"f": b"hello"}))
    fd, state, _ = open_(state, PID, ["f"])
    assert pread(state, PID, fd, 100, 3)[0] == b"lo"
    assert pread(state, PID, fd, 4, 5)[0] == b""
    assert pread(state, PID, fd, 4, 99)[0] == b""


def test_pread_bad_fd(st):
    result, _, err = pread(st, PID, 7, 1, 0)
    assert (result, err) == (-1, Errno.EBADF)


def test_pwrite_then_pread(st):
    fd, st, _ = open_(st, PID, ["vmlinuz"])
    n, st, err = pwrite(st, PID, fd, b"hi", 0)
    assert (n, err) == (2, None)
    assert pread(st, PID, fd, 2, 0)[0] == b"hi"


def test_pwrite_sparse_gap():
    state = FsState(fs=tree_from_dict({"f": b""}))
    fd, state, _ = open_(state, PID, ["f"])
    n, state, err = pwrite(state, PID, fd, b"tail", 4)
    assert (n, err) == (4, None)
    result, _, _ = lstat(state, PID, ["f"])
    assert result.size == 8
    assert pread(state, PID, fd, 8, 0)[0] == b"\x00\x00\x00\x00tail"


def test_pwrite_does_not_disturb_other_files(st):
    fd1, st, _ = open_(st, PID, ["initrd.img"])
    before = pread(st, PID, fd1, 50, 0)[0]
    fd2, st, _ = open_(st, PID, ["tmp", "ticket2.txt"])
    _, st, _ = pwrite(st, PID, fd2, b"NEW", 5)
    assert pread(st, PID, fd1, 50, 0)[0] == before


def test_pwrite_updates_file_size(st):
    from fatbench.hifat import resolve

    fd, st, _ = open_(st, PID, ["tmp", "ticket1.txt"])
    _, st, _ = pwrite(st, PID, fd, b"x" * 40, 10)
    node = resolve(st.fs, ("TMP", "TICKET1.TXT"))
    assert node.meta.file_size == len(node.contents) == 50


def test_pwrite_enospc_with_capacity():
    template = build_blank_image(4, 512)
    state = FsState(fs=tree_from_dict({"f": b""}), capacity=template)
    fd, state, _ = open_(state, PID, ["f"])
    n, state, err = pwrite(state, PID, fd, b"x" * 1024, 0)  # 2 clusters: fits
    assert (n, err) == (1024, None)
    before = state
    result, state, err = pwrite(state, PID, fd, b"y" * 2048, 0)  # 4 > 3 free
    assert (result, err) == (-1, Errno.ENOSPC)
    assert state is before


def test_close_twice(st):
    fd, st, _ = open_(st, PID, ["vmlinuz"])
    result, st, err = close(st, PID, fd)
    assert (result, err) == (0, None)
    result, st, err = close(st, PID, fd)
    assert (result, err) == (-1, Errno.EBADF)


def test_pread_after_close(st):
    fd, st, _ = open_(st, PID, ["vmlinuz"])
    _, st, _ = close(st, PID, fd)
    result, _, err = pread(st, PID, fd, 1, 0)
    assert (result, err) == (-1, Errno.EBADF)


def test_close_drops_file_table_entry(st):
    fd, st, _ = open_(st, PID, ["vmlinuz"])
    assert len(st.file_table) == 1
    _, st, _ = close(st, PID, fd)
    assert st.file_table == {}


def test_mkdir_then_lstat(st):
    result, st, err = mkdir(st, PID, ["a"])
    assert (result, err) == (0, None)
    stat_result, _, _ = lstat(st, PID, ["a"])
    assert stat_result.kind is FileKind.DIRECTORY


def test_mkdir_exists(st):
    result, out, err = mkdir(st, PID, ["tmp"])
    assert (result, err) == (-1, Errno.EEXIST)
    assert out is st


def test_mkdir_missing_parent(st):
    result, _, err = mkdir(st, PID, ["nope", "a"])
    assert (result, err) == (-1, Errno.ENOENT)


def test_mkdir_parent_is_file(st):
    result, _, err = mkdir(st, PID, ["vmlinuz", "a"])
    assert (result, err) == (-1, Errno.ENOTDIR)


def test_mknod_then_lstat(st):
    result, st, err = mknod(st, PID, ["a"])
    assert (result, err) == (0, None)
    stat_result, _, _ = lstat(st, PID, ["a"])
    assert stat_result == StatResult(0, FileKind.REGULAR)


def test_mknod_exists(st):
    result, _, err = mknod(st, PID, ["vmlinuz"])
    assert (result, err) == (-1, Errno.EEXIST)


def test_mknod_name_too_long(st):
    result, _, err = mknod(st, PID, ["twelvecharss"])
    assert (result, err) == (-1, Errno.ENAMETOOLONG)


def test_syscall_read_over_write(st):
    fd, st, _ = open_(st, PID, ["tmp", "ticket2.txt"])
    _, st, _ = pwrite(st, PID, fd, b"overwrite", 3)
    assert pread(st, PID, fd, 9, 3)[0] == b"overwrite"


def test_fd_tables_are_per_process(st):
    fd_a, st, _ = open_(st, PID, ["vmlinuz"])
    fd_b, st, _ = open_(st, 1, ["initrd.img"])
    assert fd_a == fd_b == 0
    assert pread(st, 1, fd_b, 7, 0)[0] == b"ramdisk"
    result, _, err = pread(st, 2, 0, 1, 0)
    assert (result, err) == (-1, Errno.EBADF)


def test_errno_values_match_linux():
    assert Errno.ENOENT == 2
    assert Errno.EBADF == 9
    assert Errno.EEXIST == 17
    assert Errno.ENOTDIR == 20
    assert Errno.EISDIR == 21
    assert Errno.ENOSPC == 28
    assert Errno.ENAMETOOLONG == 36
