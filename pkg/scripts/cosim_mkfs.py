#!/usr/bin/env python3
"""Co-simulate against a live mkfs.fat, where one is installed.

Formats a scratch FAT32 volume with ``mkfs.fat -v``, then checks that
the geometry fields our parser decodes match the numbers the tool
reports, and that our own volume report stays in sync with the
committed goldens.  Exits 0 on agreement, 1 on any mismatch, and 3 when
mkfs.fat is not available (nothing checked).
"""

import pathlib
import re
import shutil
import subprocess
import sys
import tempfile

REPO = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))
sys.path.insert(0, str(REPO / "tests"))

from fatbench.cli import volume_report  # noqa: E402
from fatbench.image import count_of_clusters, parse_image  # noqa: E402


def mkfs_reported_fields(output: str) -> dict:
    """Pull the numbers out of mkfs.fat -v prose."""
    patterns = {
        "bytes_per_sector": r"logical sector size is (\d+)",
        "total_sectors_32": r"with (\d+) sectors",
        "num_fats": r"filesystem has (\d+)",
        "sectors_per_cluster": r"and (\d+) sectors? per cluster",
        "fat_size_32": r"FAT size is (\d+) sectors?",
        "count_of_clusters": r"provides (\d+) clusters",
        "reserved_sector_count": r"(\d+) reserved sectors",
    }
    found = {}
    for field, pattern in patterns.items():
        match = re.search(pattern, output)
        if match:
            found[field] = int(match.group(1))
    return found


def main() -> int:
    tool = shutil.which("mkfs.fat") or shutil.which("mkfs.vfat")
    if tool is None:
        print("mkfs.fat not installed; skipping live co-simulation")
        return 3

    with tempfile.TemporaryDirectory() as scratch:
        volume = pathlib.Path(scratch) / "live.img"
        # 36 MiB guarantees a genuine FAT32 volume (>= 65525 clusters).
        volume.write_bytes(bytes(36 * 1024 * 1024))
        result = subprocess.run(
            [tool, "-v", "-F", "32", "-S", "512", "-s", "1", str(volume)],
            capture_output=True,
            text=True,
            check=True,
        )
        reported = mkfs_reported_fields(result.stdout + result.stderr)
        img = parse_image(volume.read_bytes())

        decoded = {
            "bytes_per_sector": img.reserved.bytes_per_sector,
            "total_sectors_32": img.reserved.total_sectors_32,
            "num_fats": img.reserved.num_fats,
            "sectors_per_cluster": img.reserved.sectors_per_cluster,
            "fat_size_32": img.reserved.fat_size_32,
            "count_of_clusters": count_of_clusters(img),
            "reserved_sector_count": img.reserved.reserved_sector_count,
        }
        failures = 0
        for field, value in reported.items():
            ours = decoded[field]
            tag = "ok" if ours == value else "MISMATCH"
            if ours != value:
                failures += 1
            print(f"{tag:8s} {field}: mkfs.fat says {value}, parser says {ours}")
        if not reported:
            print("could not extract any fields from mkfs.fat output:")
            print(result.stdout + result.stderr)
            return 1
        print()
        print("our report for the same volume:")
        print(volume_report(img), end="")

    goldens = sorted((REPO / "tests" / "fixtures").glob("*.info.txt"))
    from demo_volume import build_demo_image, build_empty64_image  # noqa: E402

    builders = {"demo8": build_demo_image, "empty64": build_empty64_image}
    for golden in goldens:
        name = golden.name.split(".")[0]
        fresh = volume_report(builders[name]())
        if fresh != golden.read_text():
            print(f"MISMATCH committed golden {golden.name} is stale")
            failures += 1
        else:
            print(f"ok       golden {golden.name} matches a fresh build")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
