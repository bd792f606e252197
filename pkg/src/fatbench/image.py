"""Bit-faithful FAT32 volume codec.

A parsed volume keeps every input byte: the whole reserved area, each
file-allocation-table copy, the data-region clusters, and any slack
after the last cluster, so ``serialize_image(parse_image(b)) == b``
for any accepted input.  Field layout follows the Microsoft FAT32
specification (little-endian, boot signature 0x55AA at offset 510).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from enum import Enum

from .errors import (
    BadChainError,
    BadSignatureError,
    FieldOverflowError,
    IndexOutOfRangeError,
    NameInvalidError,
    NoSpaceError,
    NonCompliantError,
    ReservedIndexError,
    SizeMismatchError,
    TruncatedImageError,
)

MIN_BYTES_PER_SECTOR = 512

# The FAT32 discriminant from the Microsoft specification.  Desk-scale
# test images are far smaller, so every entry point that applies the
# compliance predicate accepts relaxed=True, lowering the floor to 1.
MIN_COUNT_OF_CLUSTERS = 65525
MIN_COUNT_OF_CLUSTERS_RELAXED = 1

FIRST_DATA_CLUSTER = 2

# Table entries are 32-bit words whose low 28 bits carry the value; the
# top nibble is preserved across writes.
FAT_ENTRY_MASK = 0x0FFFFFFF
FAT_ENTRY_BYTES = 4

# Any entry in [EOC_LOW, EOC_HIGH] terminates a chain; EOC_WRITE is the
# value written when a chain is built.
EOC_LOW = 0x0FFFFFF8
EOC_HIGH = 0x0FFFFFFF
EOC_WRITE = 0x0FFFFFFF

DIR_ENTRY_SIZE = 32
ENTRY_FREE = 0x00
ENTRY_DELETED = 0xE5

ATTR_READ_ONLY = 0x01
ATTR_HIDDEN = 0x02
ATTR_SYSTEM = 0x04
ATTR_VOLUME_ID = 0x08
ATTR_DIRECTORY = 0x10
ATTR_ARCHIVE = 0x20

BOOT_SIGNATURE = b"\x55\xaa"


# ---------------------------------------------------------------------------
# Reserved area.

@dataclass(frozen=True)
class ReservedArea:
    """Decoded geometry fields plus the raw reserved-area bytes.

    Everything not modeled below (OEM string, media byte, FSInfo and
    backup boot sectors, boot code) rides along verbatim in ``raw``.
    """

    raw: bytes
    bytes_per_sector: int
    sectors_per_cluster: int
    reserved_sector_count: int
    num_fats: int
    fat_size_32: int
    root_cluster: int
    total_sectors_32: int

    @classmethod
    def decode(cls, raw: bytes) -> "ReservedArea":
        return cls(
            raw=bytes(raw),
            bytes_per_sector=struct.unpack_from("<H", raw, 11)[0],
            sectors_per_cluster=raw[13],
            reserved_sector_count=struct.unpack_from("<H", raw, 14)[0],
            num_fats=raw[16],
            total_sectors_32=struct.unpack_from("<I", raw, 32)[0],
            fat_size_32=struct.unpack_from("<I", raw, 36)[0],
            root_cluster=struct.unpack_from("<I", raw, 44)[0],
        )

    def encode(self) -> bytes:
        buf = bytearray(self.raw)
        struct.pack_into("<H", buf, 11, self.bytes_per_sector)
        buf[13] = self.sectors_per_cluster
        struct.pack_into("<H", buf, 14, self.reserved_sector_count)
        buf[16] = self.num_fats
        struct.pack_into("<I", buf, 32, self.total_sectors_32)
        struct.pack_into("<I", buf, 36, self.fat_size_32)
        struct.pack_into("<I", buf, 44, self.root_cluster)
        return bytes(buf)


@dataclass(frozen=True)
class Fat32Image:
    """In-memory FAT32 volume: reserved area, FAT copies, data clusters.

    ``clusters[0]`` holds cluster index 2 (the first data cluster);
    ``tail`` keeps any bytes past the last whole cluster.
    """

    reserved: ReservedArea
    fats: tuple[bytes, ...]
    clusters: tuple[bytes, ...]
    tail: bytes = b""


def cluster_size(img: Fat32Image) -> int:
    return img.reserved.bytes_per_sector * img.reserved.sectors_per_cluster


def count_of_clusters(img: Fat32Image) -> int:
    """Data-region cluster count implied by the reserved-area fields."""
    r = img.reserved
    data_sectors = (
        r.total_sectors_32
        - r.reserved_sector_count
        - r.num_fats * r.fat_size_32
    )
    return data_sectors // r.sectors_per_cluster


def compliant_fat32_p(img: Fat32Image, *, relaxed: bool = False) -> bool:
    """The operability predicate applied before file operations."""
    floor = MIN_COUNT_OF_CLUSTERS_RELAXED if relaxed else MIN_COUNT_OF_CLUSTERS
    r = img.reserved
    return (
        r.bytes_per_sector >= MIN_BYTES_PER_SECTOR
        and r.sectors_per_cluster >= 1
        and count_of_clusters(img) >= floor
        and r.root_cluster >= FIRST_DATA_CLUSTER
    )


# ---------------------------------------------------------------------------
# Whole-volume codec.

def parse_image(
    data: bytes, *, relaxed: bool = False, check_compliance: bool = True
) -> Fat32Image:
    """Decode a volume, preserving every byte for lossless round trips.

    Raises TruncatedImageError when the input is shorter than its own
    geometry demands, BadSignatureError when the 0x55AA boot signature
    is missing, and NonCompliantError when the geometry cannot be
    sliced at all or (with check_compliance) the compliance predicate
    fails.
    """
    if len(data) < MIN_BYTES_PER_SECTOR:
        raise TruncatedImageError(f"{len(data)} bytes is shorter than a boot sector")
    if data[510:512] != BOOT_SIGNATURE:
        raise BadSignatureError("missing 0x55AA boot signature")
    reserved = ReservedArea.decode(data[:512])

    bps = reserved.bytes_per_sector
    spc = reserved.sectors_per_cluster
    if bps < 1 or spc < 1 or reserved.num_fats < 1 or reserved.fat_size_32 < 1:
        raise NonCompliantError("geometry fields make the volume unsliceable")
    reserved_bytes = reserved.reserved_sector_count * bps
    if reserved_bytes < 512:
        raise NonCompliantError("reserved area smaller than the boot sector")

    fat_bytes = reserved.fat_size_32 * bps
    data_offset = reserved_bytes + reserved.num_fats * fat_bytes
    data_sectors = (
        reserved.total_sectors_32
        - reserved.reserved_sector_count
        - reserved.num_fats * reserved.fat_size_32
    )
    n_clusters = max(0, data_sectors // spc)
    csize = bps * spc
    data_end = data_offset + n_clusters * csize
    required = max(reserved.total_sectors_32 * bps, data_end)
    if len(data) < required:
        raise TruncatedImageError(
            f"{len(data)} bytes but geometry demands {required}"
        )

    reserved = replace(reserved, raw=data[:reserved_bytes])
    fats = tuple(
        data[reserved_bytes + k * fat_bytes:reserved_bytes + (k + 1) * fat_bytes]
        for k in range(reserved.num_fats)
    )
    clusters = tuple(
        data[data_offset + k * csize:data_offset + (k + 1) * csize]
        for k in range(n_clusters)
    )
    img = Fat32Image(reserved, fats, clusters, tail=data[data_end:])
    if check_compliance and not compliant_fat32_p(img, relaxed=relaxed):
        raise NonCompliantError("image fails the compliance predicate")
    return img


def serialize_image(img: Fat32Image) -> bytes:
    return b"".join(
        (img.reserved.encode(), *img.fats, *img.clusters, img.tail)
    )


# ---------------------------------------------------------------------------
# Table access.

def _entry_limit(img: Fat32Image) -> int:
    physical = len(img.fats[0]) // FAT_ENTRY_BYTES
    return min(count_of_clusters(img) + FIRST_DATA_CLUSTER, physical)


def fat_entry(img: Fat32Image, i: int) -> int:
    """Low 28 bits of entry i in the first table copy."""
    if not 0 <= i < _entry_limit(img):
        raise IndexOutOfRangeError(f"table entry {i} out of range")
    word = struct.unpack_from("<I", img.fats[0], i * FAT_ENTRY_BYTES)[0]
    return word & FAT_ENTRY_MASK


def set_fat_entry(img: Fat32Image, i: int, value: int) -> Fat32Image:
    """Rewrite entry i in every table copy, preserving the top nibble."""
    if i < FIRST_DATA_CLUSTER:
        raise ReservedIndexError(f"table entry {i} is reserved")
    if not i < _entry_limit(img):
        raise IndexOutOfRangeError(f"table entry {i} out of range")
    if not 0 <= value <= FAT_ENTRY_MASK:
        raise FieldOverflowError(f"{value:#x} does not fit in 28 bits")
    fats = []
    for fat in img.fats:
        buf = bytearray(fat)
        word = struct.unpack_from("<I", buf, i * FAT_ENTRY_BYTES)[0]
        struct.pack_into(
            "<I", buf, i * FAT_ENTRY_BYTES, (word & ~FAT_ENTRY_MASK) | value
        )
        fats.append(bytes(buf))
    return replace(img, fats=tuple(fats))


def clear_fat(img: Fat32Image) -> Fat32Image:
    """Mark every non-reserved entry free, in every table copy."""
    limit = _entry_limit(img)
    fats = []
    for fat in img.fats:
        buf = bytearray(fat)
        for i in range(FIRST_DATA_CLUSTER, limit):
            word = struct.unpack_from("<I", buf, i * FAT_ENTRY_BYTES)[0]
            struct.pack_into("<I", buf, i * FAT_ENTRY_BYTES, word & ~FAT_ENTRY_MASK)
        fats.append(bytes(buf))
    return replace(img, fats=tuple(fats))


def is_eoc(value: int) -> bool:
    return EOC_LOW <= value <= EOC_HIGH


def get_clusterchain(img: Fat32Image, first: int) -> list[int]:
    """Indices of the chain starting at first, ending on an EOC entry."""
    limit = _entry_limit(img)
    if not FIRST_DATA_CLUSTER <= first < limit:
        raise BadChainError(f"chain start {first} out of range")
    chain: list[int] = []
    seen: set[int] = set()
    current = first
    while True:
        if current in seen:
            raise BadChainError(f"cycle revisits cluster {current}")
        seen.add(current)
        chain.append(current)
        entry = fat_entry(img, current)
        if is_eoc(entry):
            return chain
        if entry == 0:
            raise BadChainError(f"chain hits free entry at cluster {current}")
        if not FIRST_DATA_CLUSTER <= entry < limit:
            raise BadChainError(f"chain links out of range to {entry}")
        current = entry


def read_cluster(img: Fat32Image, index: int) -> bytes:
    slot = index - FIRST_DATA_CLUSTER
    if not 0 <= slot < len(img.clusters):
        raise IndexOutOfRangeError(f"cluster {index} outside the data region")
    return img.clusters[slot]


def write_cluster(img: Fat32Image, index: int, data: bytes) -> Fat32Image:
    """Replace one cluster; short data is zero-padded to cluster size."""
    csize = cluster_size(img)
    if len(data) > csize:
        raise FieldOverflowError(f"{len(data)} bytes exceed cluster size {csize}")
    slot = index - FIRST_DATA_CLUSTER
    if not 0 <= slot < len(img.clusters):
        raise IndexOutOfRangeError(f"cluster {index} outside the data region")
    cells = list(img.clusters)
    cells[slot] = data.ljust(csize, b"\x00")
    return replace(img, clusters=tuple(cells))


def read_file_contents(img: Fat32Image, first: int, file_size: int) -> bytes:
    """Bytes of the chain at first, truncated to file_size.

    A size of zero follows the directory-file convention and returns
    the whole chain untruncated.
    """
    chain = get_clusterchain(img, first)
    if file_size > cluster_size(img) * len(chain):
        raise SizeMismatchError(
            f"{file_size} bytes recorded but chain holds {len(chain)} clusters"
        )
    data = b"".join(read_cluster(img, i) for i in chain)
    return data if file_size == 0 else data[:file_size]


def count_free_clusters(img: Fat32Image) -> int:
    return sum(
        1
        for i in range(FIRST_DATA_CLUSTER, _entry_limit(img))
        if fat_entry(img, i) == 0
    )


def allocate_clusters(img: Fat32Image, n: int) -> tuple[Fat32Image, list[int]]:
    """Link the n lowest free entries into a fresh chain.

    Raises NoSpaceError, leaving the image unreferenced, when fewer
    than n entries are free.
    """
    free = [
        i
        for i in range(FIRST_DATA_CLUSTER, _entry_limit(img))
        if fat_entry(img, i) == 0
    ]
    if len(free) < n:
        raise NoSpaceError(f"{n} clusters requested, {len(free)} free")
    picked = free[:n]
    for pos, i in enumerate(picked):
        target = picked[pos + 1] if pos + 1 < len(picked) else EOC_WRITE
        img = set_fat_entry(img, i, target)
    return img, picked


# ---------------------------------------------------------------------------
# Directory entries.

class EntryKind(Enum):
    VACANT = "vacant"
    REGULAR = "regular"
    DIRECTORY = "directory"


@dataclass(frozen=True)
class DirEntry:
    """One 32-byte directory record with its decoded views.

    Time fields are not interpreted; they survive in ``raw`` and are
    written back verbatim by the encoder.
    """

    raw: bytes
    name: bytes
    attributes: int
    first_cluster: int
    file_size: int

    @property
    def kind(self) -> EntryKind:
        if self.raw[0] in (ENTRY_FREE, ENTRY_DELETED):
            return EntryKind.VACANT
        if self.attributes & ATTR_DIRECTORY:
            return EntryKind.DIRECTORY
        return EntryKind.REGULAR

    @property
    def display_name(self) -> str:
        return unpack_83_name(self.name)


def decode_dir_entry(raw: bytes) -> DirEntry:
    if len(raw) != DIR_ENTRY_SIZE:
        raise ValueError(f"directory entries are 32 bytes, got {len(raw)}")
    hi = struct.unpack_from("<H", raw, 20)[0]
    lo = struct.unpack_from("<H", raw, 26)[0]
    return DirEntry(
        raw=bytes(raw),
        name=bytes(raw[0:11]),
        attributes=raw[11],
        first_cluster=(hi << 16) | lo,
        file_size=struct.unpack_from("<I", raw, 28)[0],
    )


def encode_dir_entry(entry: DirEntry) -> bytes:
    if len(entry.name) != 11:
        raise FieldOverflowError("short name must be exactly 11 bytes")
    if not 0 <= entry.attributes < 0x100:
        raise FieldOverflowError("attribute byte out of range")
    # The stored field is two 16-bit halves; accept the full 32-bit range
    # so any decoded entry re-encodes to its original bytes.
    if not 0 <= entry.first_cluster < 2 ** 32:
        raise FieldOverflowError("first cluster does not fit in 4 bytes")
    if not 0 <= entry.file_size < 2 ** 32:
        raise FieldOverflowError("file size does not fit in 4 bytes")
    buf = bytearray(entry.raw)
    buf[0:11] = entry.name
    buf[11] = entry.attributes
    struct.pack_into("<H", buf, 20, entry.first_cluster >> 16)
    struct.pack_into("<H", buf, 26, entry.first_cluster & 0xFFFF)
    struct.pack_into("<I", buf, 28, entry.file_size)
    return bytes(buf)


def make_dir_entry(
    name: bytes, attributes: int, first_cluster: int, file_size: int
) -> DirEntry:
    """Fresh entry over a zeroed record (all time fields zero)."""
    entry = DirEntry(
        raw=bytes(DIR_ENTRY_SIZE),
        name=name,
        attributes=attributes,
        first_cluster=first_cluster,
        file_size=file_size,
    )
    return decode_dir_entry(encode_dir_entry(entry))


# ---------------------------------------------------------------------------
# 8.3 short names.

_VALID_83_CHARS = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789$%'-_@~`!(){}^#&"
)


def is_valid_83(name: str) -> bool:
    name = name.upper()
    if name in (".", "..") or not name:
        return False
    base, dot, ext = name.partition(".")
    if not 1 <= len(base) <= 8 or len(ext) > 3 or (dot and not ext):
        return False
    return all(c in _VALID_83_CHARS for c in base + ext)


def pack_83_name(name: str) -> bytes:
    """Display form to the 11-byte space-padded on-disk form."""
    if not is_valid_83(name):
        raise NameInvalidError(f"{name!r} is not a valid 8.3 name")
    base, _, ext = name.upper().partition(".")
    return base.ljust(8).encode("ascii") + ext.ljust(3).encode("ascii")


def unpack_83_name(raw: bytes) -> str:
    base = raw[0:8].decode("latin-1").rstrip(" ")
    ext = raw[8:11].decode("latin-1").rstrip(" ")
    return f"{base}.{ext}" if ext else base


# ---------------------------------------------------------------------------
# Blank-volume construction (stands in for an external formatter).

def build_blank_image(
    cluster_count: int,
    cluster_size_bytes: int,
    *,
    bytes_per_sector: int = 512,
    num_fats: int = 2,
    reserved_sectors: int = 32,
) -> Fat32Image:
    """A relaxed-compliant empty volume with its root directory at cluster 2.

    Raises ValueError when the requested geometry cannot be expressed.
    """
    if bytes_per_sector < MIN_BYTES_PER_SECTOR:
        raise ValueError("bytes per sector must be at least 512")
    if cluster_size_bytes % bytes_per_sector or cluster_size_bytes < bytes_per_sector:
        raise ValueError("cluster size must be a positive multiple of the sector size")
    if cluster_count < 1 or num_fats < 1 or reserved_sectors < 1:
        raise ValueError("cluster count, FAT count and reserved sectors must be positive")
    spc = cluster_size_bytes // bytes_per_sector
    fat_size = -(-(FAT_ENTRY_BYTES * (cluster_count + 2)) // bytes_per_sector)
    total = reserved_sectors + num_fats * fat_size + cluster_count * spc

    boot = bytearray(512)
    boot[0:3] = b"\xeb\x58\x90"
    boot[3:11] = b"FATBENCH"
    struct.pack_into("<H", boot, 11, bytes_per_sector)
    boot[13] = spc
    struct.pack_into("<H", boot, 14, reserved_sectors)
    boot[16] = num_fats
    boot[21] = 0xF8  # fixed-disk media byte
    struct.pack_into("<H", boot, 24, 32)  # sectors per track
    struct.pack_into("<H", boot, 26, 64)  # heads
    struct.pack_into("<I", boot, 32, total)
    struct.pack_into("<I", boot, 36, fat_size)
    struct.pack_into("<I", boot, 44, FIRST_DATA_CLUSTER)
    boot[64] = 0x80  # drive number
    boot[66] = 0x29  # extended boot signature
    boot[71:82] = b"NO NAME    "
    boot[82:90] = b"FAT32   "
    boot[510:512] = BOOT_SIGNATURE

    raw = bytes(boot) + bytes((reserved_sectors * bytes_per_sector) - 512)
    fat = bytearray(fat_size * bytes_per_sector)
    struct.pack_into("<I", fat, 0, 0x0FFFFFF8)  # media echo
    struct.pack_into("<I", fat, 4, EOC_WRITE)
    struct.pack_into("<I", fat, 8, EOC_WRITE)  # empty root chain
    return Fat32Image(
        reserved=ReservedArea.decode(raw),
        fats=(bytes(fat),) * num_fats,
        clusters=(bytes(cluster_size_bytes),) * cluster_count,
        tail=b"",
    )
