"""FAT32 workbench: layered filesystem models, a bit-faithful volume
codec, a POSIX syscall subset, and a property-check harness."""

from .errors import (
    BadChainError,
    BadLengthError,
    BadSignatureError,
    DepthExceededError,
    FatBenchError,
    FieldOverflowError,
    IllFormedError,
    IndexOutOfRangeError,
    NameInvalidError,
    NoSpaceError,
    NonCompliantError,
    ReservedIndexError,
    SizeMismatchError,
    TruncatedImageError,
)
from .harness import (
    CheckReport,
    check_commute,
    check_compose,
    check_concrete_stack,
    check_row1,
    check_row2,
    check_space_iff,
    gen_fs,
    run_check,
)
from .hifat import (
    HiFatDir,
    HiFatFile,
    HiFatFs,
    hifat_equiv,
    hifat_to_image,
    image_to_hifat,
    tree_from_dict,
)
from .image import (
    DirEntry,
    EntryKind,
    Fat32Image,
    ReservedArea,
    allocate_clusters,
    build_blank_image,
    compliant_fat32_p,
    count_free_clusters,
    count_of_clusters,
    decode_dir_entry,
    encode_dir_entry,
    fat_entry,
    get_clusterchain,
    is_eoc,
    parse_image,
    read_file_contents,
    serialize_image,
    set_fat_entry,
)
from .ladder import (
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
    fa_table_to_alv,
    find_n_free_blocks,
    l4_list_all_indices,
    l4_stricter_fs_p,
    l6_file_index_list,
    make_blocks,
    rdchs,
    set_indices,
    stat,
    unmake_blocks,
    wrchs,
)
from .syscalls import (
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

__version__ = "0.1.0"
