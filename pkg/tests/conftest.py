import pytest

from fatbench.hifat import tree_from_dict

from demo_volume import (  # noqa: F401  (re-exported for test modules)
    DEMO_TREE,
    INITRD_BYTES,
    TICKET1_BYTES,
    TICKET2_BYTES,
    VMLINUZ_BYTES,
    build_demo_image,
)


@pytest.fixture
def demo_fs():
    return tree_from_dict(DEMO_TREE)


@pytest.fixture
def demo_img():
    # Eight data clusters: exactly one (index 9) is left free.
    return build_demo_image()
