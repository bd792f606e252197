#!/usr/bin/env python3
"""Regenerate the committed fixture volumes and their info goldens.

Everything here is deterministic, so reruns reproduce the committed
bytes exactly.
"""

import pathlib
import sys

REPO = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from demo_volume import build_demo_image, build_empty64_image  # noqa: E402

from fatbench.cli import volume_report  # noqa: E402
from fatbench.image import serialize_image  # noqa: E402


def main() -> int:
    fixtures = REPO / "tests" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    for name, img in [
        ("empty64", build_empty64_image()),
        ("demo8", build_demo_image()),
    ]:
        (fixtures / f"{name}.img").write_bytes(serialize_image(img))
        (fixtures / f"{name}.info.txt").write_text(volume_report(img))
        print(f"wrote {name}.img and {name}.info.txt")
    return 0


if __name__ == "__main__":
    sys.exit(main())
