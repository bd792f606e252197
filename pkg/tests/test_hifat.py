import random
import struct

import pytest

from fatbench.errors import BadChainError, DepthExceededError, NameInvalidError, NoSpaceError
from fatbench.hifat import (
    HiFatDir,
    HiFatFile,
    ResolveError,
    clusters_needed,
    empty_fs,
    hifat_equiv,
    hifat_to_image,
    image_to_hifat,
    iter_regular_paths,
    make_directory,
    make_regular,
    read_bytes,
    resolve,
    splice_bytes,
    tree_from_dict,
    write_bytes,
)
from fatbench.image import (
    build_blank_image,
    count_free_clusters,
    count_of_clusters,
    get_clusterchain,
    make_dir_entry,
    parse_image,
    serialize_image,
    write_cluster,
)
from fatbench.ladder import WriteStatus

from conftest import (
    DEMO_TREE,
    INITRD_BYTES,
    TICKET1_BYTES,
    TICKET2_BYTES,
    VMLINUZ_BYTES,
)


def test_demo_tree_chain_layout(demo_img):
    # Allocation order is root first, then files and directories in
    # insertion order, descending into a directory as soon as it is
    # allocated.
    assert get_clusterchain(demo_img, 2) == [2]
    hifat = image_to_hifat(demo_img)
    entries = hifat.root.entries
    assert list(entries) == ["VMLINUZ", "INITRD.IMG", "TMP"]
    assert entries["VMLINUZ"].meta.first_cluster == 3
    assert get_clusterchain(demo_img, 3) == [3, 4]
    assert entries["INITRD.IMG"].meta.first_cluster == 5
    assert entries["TMP"].meta.first_cluster == 6
    tmp = entries["TMP"].contents.entries
    assert tmp["TICKET1.TXT"].meta.first_cluster == 7
    assert tmp["TICKET2.TXT"].meta.first_cluster == 8
    assert count_free_clusters(demo_img) == 1


def test_demo_tree_round_trip(demo_fs, demo_img):
    assert hifat_equiv(image_to_hifat(demo_img), demo_fs)


def test_decoded_contents_match(demo_img):
    hifat = image_to_hifat(demo_img)
    assert hifat.root.entries["VMLINUZ"].contents == VMLINUZ_BYTES
    assert hifat.root.entries["INITRD.IMG"].contents == INITRD_BYTES
    tmp = hifat.root.entries["TMP"].contents.entries
    assert tmp["TICKET1.TXT"].contents == TICKET1_BYTES


def test_empty_image_empty_tree():
    img = build_blank_image(8, 512)
    assert image_to_hifat(img) == empty_fs()


def test_cyclic_root_chain_rejected():
    from fatbench.image import set_fat_entry

    img = build_blank_image(8, 512)
    img = set_fat_entry(img, 2, 3)
    img = set_fat_entry(img, 3, 2)
    with pytest.raises(BadChainError):
        image_to_hifat(img)


def test_directory_loop_hits_depth_limit():
    # A root entry pointing back at the root cluster recurses forever.
    img = build_blank_image(8, 512)
    entry = make_dir_entry(b"LOOP       ", 0x10, img.reserved.root_cluster, 0)
    from fatbench.image import encode_dir_entry

    img = write_cluster(img, 2, encode_dir_entry(entry))
    with pytest.raises(DepthExceededError):
        image_to_hifat(img)


def test_no_space_when_tree_exceeds_template(demo_fs):
    # The demo tree needs 7 clusters plus the root; a 4-cluster volume
    # cannot hold it.
    with pytest.raises(NoSpaceError):
        hifat_to_image(build_blank_image(4, 512), demo_fs)


def test_name_invalid_rejected():
    # Constructors validate names up front ...
    with pytest.raises(NameInvalidError):
        tree_from_dict({"way_too_long_name.txt": b"x"})
    # ... and the serializer re-checks trees assembled by hand.
    from fatbench.hifat import HiFatFs

    rogue = HiFatFile(make_regular("OK").meta, b"x")
    fs = HiFatFs(HiFatDir({"WAY_TOO_LONG_NAME.TXT": rogue}))
    with pytest.raises(NameInvalidError):
        hifat_to_image(build_blank_image(8, 512), fs)


def test_serialized_image_still_parses(demo_img):
    data = serialize_image(demo_img)
    assert serialize_image(parse_image(data, relaxed=True)) == data


def test_cluster_conservation(demo_fs, demo_img):
    consumed = count_of_clusters(demo_img) - count_free_clusters(demo_img)
    assert consumed == clusters_needed(demo_fs, 512) == 7


def test_clusters_needed_empty_files_are_free():
    fs = tree_from_dict({"a": b"", "b": b"x" * 513, "d": {}})
    # root + empty file (0) + two-cluster file + one-cluster directory
    assert clusters_needed(fs, 512) == 1 + 0 + 2 + 1
    img = hifat_to_image(build_blank_image(8, 512), fs)
    back = image_to_hifat(img)
    assert back.root.entries["A"].contents == b""
    assert back.root.entries["A"].meta.first_cluster == 0


def test_round_trip_random_trees():
    rng = random.Random(404)
    names = ["A.TXT", "B", "LOG.BIN", "NOTES", "Z99.DAT"]
    dirs = ["SUB", "DEEP", "TMP"]
    for trial in range(20):
        spec: dict = {}
        cursor = spec
        for name in rng.sample(dirs, rng.randint(0, 2)):
            cursor[name] = {}
            if rng.random() < 0.5:
                cursor = cursor[name]
        for name in rng.sample(names, rng.randint(1, 4)):
            cursor[name] = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 1200)))
        fs = tree_from_dict(spec)
        img = hifat_to_image(build_blank_image(24, 512), fs)
        assert hifat_equiv(image_to_hifat(img), fs), f"trial {trial}"


def test_round_trip_preserves_entry_order(demo_img):
    twice = hifat_to_image(build_blank_image(8, 512), image_to_hifat(demo_img))
    assert serialize_image(twice) == serialize_image(demo_img)


def test_hifat_equiv_semantics(demo_fs):
    assert hifat_equiv(demo_fs, demo_fs)
    reordered = tree_from_dict(
        {
            "tmp": {"ticket2.txt": TICKET2_BYTES, "ticket1.txt": TICKET1_BYTES},
            "initrd.img": INITRD_BYTES,
            "vmlinuz": VMLINUZ_BYTES,
        }
    )
    assert hifat_equiv(demo_fs, reordered)
    changed = tree_from_dict({**DEMO_TREE, "vmlinuz": b"different"})
    assert not hifat_equiv(demo_fs, changed)
    missing = tree_from_dict({"vmlinuz": VMLINUZ_BYTES})
    assert not hifat_equiv(demo_fs, missing)


def test_resolve_cases(demo_fs):
    assert isinstance(resolve(demo_fs, []), HiFatDir)
    node = resolve(demo_fs, ["tmp", "ticket1.txt"])
    assert isinstance(node, HiFatFile) and node.contents == TICKET1_BYTES
    assert resolve(demo_fs, ["TMP", "TICKET1.TXT"]) == node  # case-insensitive
    assert resolve(demo_fs, ["nope"]) is ResolveError.MISSING
    assert resolve(demo_fs, ["vmlinuz", "x"]) is ResolveError.NOT_A_DIRECTORY


def test_read_write_bytes(demo_fs):
    assert read_bytes(demo_fs, ["tmp", "ticket1.txt"], 0, 5) == b"first"
    assert read_bytes(demo_fs, ["tmp", "ticket1.txt"], 10, 10) is None
    assert read_bytes(demo_fs, ["tmp"], 0, 0) is None
    fs2, status = write_bytes(demo_fs, ["vmlinuz"], 3, b"PATCH")
    assert status is WriteStatus.OK
    assert read_bytes(fs2, ["vmlinuz"], 3, 5) == b"PATCH"
    assert read_bytes(fs2, ["initrd.img"], 0, 4) == read_bytes(demo_fs, ["initrd.img"], 0, 4)
    node = resolve(fs2, ["vmlinuz"])
    assert node.meta.file_size == len(node.contents) == len(VMLINUZ_BYTES)
    _, status = write_bytes(demo_fs, ["missing"], 0, b"x")
    assert status is WriteStatus.NOT_FOUND


def test_splice_bytes_gap():
    assert splice_bytes(b"ab", 4, b"z") == b"ab\x00\x00z"
    assert splice_bytes(b"hello", 1, b"xy") == b"hxylo"


def test_iter_regular_paths(demo_fs):
    assert list(iter_regular_paths(demo_fs)) == [
        ("VMLINUZ",),
        ("INITRD.IMG",),
        ("TMP", "TICKET1.TXT"),
        ("TMP", "TICKET2.TXT"),
    ]


