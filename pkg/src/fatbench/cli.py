"""Command-line surface: volume report, file copy, image creation, checks.

Exit codes: 0 success, 1 operation refused (non-compliant volume or a
named errno), 2 unusable input (parse failure, bad geometry, usage).
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

from .errors import FatBenchError, NoSpaceError
from .harness import COMMUTE_PAIRS, ROW_LEVELS, run_check
from .hifat import image_to_hifat, hifat_to_image
from .image import (
    Fat32Image,
    build_blank_image,
    cluster_size,
    compliant_fat32_p,
    count_free_clusters,
    count_of_clusters,
    parse_image,
    serialize_image,
)
from .syscalls import DEFAULT_PID, Errno, FileKind, FsState, lstat, mknod, open_, pread, pwrite


def _plural(n: int, word: str) -> str:
    return f"{n} {word}" if n == 1 else f"{n} {word}s"


def volume_report(img: Fat32Image, verbose: bool = False) -> str:
    """Field summary in the shape of a formatter's verbose output."""
    r = img.reserved
    media = r.raw[21]
    lines = [
        f"logical sector size is {r.bytes_per_sector},",
        f"using 0x{media:02x} media descriptor, with {r.total_sectors_32} sectors;",
        "filesystem has {} and {} per cluster.".format(
            _plural(r.num_fats, "32-bit FAT"),
            _plural(r.sectors_per_cluster, "sector"),
        ),
        "FAT size is {}, and provides {} clusters.".format(
            _plural(r.fat_size_32, "sector"), count_of_clusters(img)
        ),
        f"There are {r.reserved_sector_count} reserved sectors.",
        f"Root cluster is {r.root_cluster}.",
    ]
    if verbose:
        lines.append(f"Cluster size is {cluster_size(img)} bytes.")
        lines.append(f"{count_free_clusters(img)} clusters are free.")
    return "\n".join(lines) + "\n"


def cmd_info(path: str, verbose: bool, relaxed: bool) -> int:
    try:
        data = _read_file(path)
        img = parse_image(data, check_compliance=False)
    except (OSError, FatBenchError) as exc:
        print(f"info: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(volume_report(img, verbose))
    return 0 if compliant_fat32_p(img, relaxed=relaxed) else 1


def _read_file(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


def _write_file_atomic(path: str, data: bytes) -> None:
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fatbench-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def split_image_path(arg: str) -> tuple[str, tuple[str, ...]] | None:
    """IMG:/inner/path -> (IMG, components); None for plain host paths."""
    image_file, sep, inner = arg.partition(":")
    if sep and inner.startswith("/"):
        return image_file, tuple(c for c in inner.split("/") if c)
    return None


def _errno_exit(op: str, err: Errno) -> int:
    print(f"cp: {op}: {err.name}", file=sys.stderr)
    return 1


def _copy_from_image(src_img: str, inner: tuple[str, ...], relaxed: bool) -> bytes | int:
    try:
        img = parse_image(_read_file(src_img), relaxed=relaxed)
    except (OSError, FatBenchError) as exc:
        print(f"cp: {src_img}: {exc}", file=sys.stderr)
        return 2
    st = FsState(fs=image_to_hifat(img))
    result, st, err = lstat(st, DEFAULT_PID, inner)
    if err is not None:
        return _errno_exit("/".join(inner), err)
    if result.kind is FileKind.DIRECTORY:
        return _errno_exit("/".join(inner), Errno.EISDIR)
    fd, st, err = open_(st, DEFAULT_PID, inner)
    if err is not None:
        return _errno_exit("/".join(inner), err)
    data, _, err = pread(st, DEFAULT_PID, fd, result.size, 0)
    if err is not None:
        return _errno_exit("/".join(inner), err)
    return data


def _copy_into_image(data: bytes, dst_img: str, inner: tuple[str, ...], relaxed: bool) -> int:
    try:
        img = parse_image(_read_file(dst_img), relaxed=relaxed)
    except (OSError, FatBenchError) as exc:
        print(f"cp: {dst_img}: {exc}", file=sys.stderr)
        return 2
    if not inner:
        return _errno_exit(dst_img, Errno.EISDIR)
    st = FsState(fs=image_to_hifat(img), capacity=img)
    _, st, err = mknod(st, DEFAULT_PID, inner)
    if err is not None and err is not Errno.EEXIST:
        return _errno_exit("/".join(inner), err)
    fd, st, err = open_(st, DEFAULT_PID, inner)
    if err is not None:
        return _errno_exit("/".join(inner), err)
    _, st, err = pwrite(st, DEFAULT_PID, fd, data, 0)
    if err is not None:
        return _errno_exit("/".join(inner), err)
    try:
        out = hifat_to_image(img, st.fs)
    except NoSpaceError:
        return _errno_exit("/".join(inner), Errno.ENOSPC)
    _write_file_atomic(dst_img, serialize_image(out))
    return 0


def cmd_cp(src: str, dst: str, relaxed: bool) -> int:
    src_spec = split_image_path(src)
    dst_spec = split_image_path(dst)
    if src_spec and dst_spec:
        print("cp: at most one side may be an image path", file=sys.stderr)
        return 2

    if src_spec:
        payload = _copy_from_image(src_spec[0], src_spec[1], relaxed)
        if isinstance(payload, int):
            return payload
    else:
        try:
            payload = _read_file(src)
        except FileNotFoundError:
            return _errno_exit(src, Errno.ENOENT)
        except IsADirectoryError:
            return _errno_exit(src, Errno.EISDIR)

    if dst_spec:
        return _copy_into_image(payload, dst_spec[0], dst_spec[1], relaxed)
    try:
        _write_file_atomic(dst, payload)
    except OSError as exc:
        print(f"cp: {dst}: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_mkimage(out_path: str, clusters: int, csize: int) -> int:
    try:
        img = build_blank_image(clusters, csize)
    except ValueError as exc:
        print(f"mkimage: {exc}", file=sys.stderr)
        return 2
    _write_file_atomic(out_path, serialize_image(img))
    return 0


def cmd_check(prop: str, level: str | None, trials: int | None, seed: int) -> int:
    try:
        report = run_check(prop, level, trials, seed)
    except ValueError as exc:
        print(f"check: {exc}", file=sys.stderr)
        return 2
    print(report.summary())
    for key, value in report.details.items():
        print(f"  {key}: {value}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fatbench",
        description="FAT32 workbench: inspect and build volumes, copy files, run property checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    info = sub.add_parser("info", help="print the volume field summary")
    info.add_argument("image")
    info.add_argument("-v", "--verbose", action="store_true")
    info.add_argument("--relaxed", action="store_true",
                      help="accept desk-scale volumes below the 65525-cluster floor")

    cp = sub.add_parser("cp", help="copy a file; IMG:/inner paths reach into a volume")
    cp.add_argument("src")
    cp.add_argument("dst")
    cp.add_argument("--relaxed", action="store_true")

    mk = sub.add_parser("mkimage", help="write a blank volume")
    mk.add_argument("-n", "--clusters", type=int, required=True)
    mk.add_argument("-s", "--cluster-size", type=int, required=True)
    mk.add_argument("image")

    check = sub.add_parser("check", help="run a property check")
    check.add_argument("--prop", required=True,
                       choices=["row1", "row2", "compose", "commute", "space", "stack"])
    check.add_argument("--level", choices=list(ROW_LEVELS),
                       help="model level; for commute, the upper level of the pair")
    check.add_argument("--trials", type=int)
    check.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "info":
        return cmd_info(args.image, args.verbose, args.relaxed)
    if args.command == "cp":
        return cmd_cp(args.src, args.dst, args.relaxed)
    if args.command == "mkimage":
        return cmd_mkimage(args.image, args.clusters, args.cluster_size)
    return cmd_check(args.prop, args.level, args.trials, args.seed)


if __name__ == "__main__":
    sys.exit(main())
