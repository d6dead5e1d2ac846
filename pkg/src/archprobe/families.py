"""Candidate architectures and their families.

The built-in candidate set is the 36 torchvision v0.10 classification
architectures, grouped into nine families. The family of a label is what
"close miss" metrics (family top-1) are computed against; extension
architectures can be added through a user-supplied family map.
"""

from __future__ import annotations

from .errors import UnknownArchitectureError

# Torchvision v0.10 classification architectures, in release-listing order.
ARCHITECTURES: tuple[str, ...] = (
    "AlexNet",
    "ResNet18",
    "ResNet34",
    "ResNet50",
    "ResNet101",
    "ResNet152",
    "ResNext50_32x4d",
    "ResNext101_32x8d",
    "Wide_ResNet50_2",
    "Wide_ResNet101_2",
    "VGG11",
    "VGG11_bn",
    "VGG13",
    "VGG13_bn",
    "VGG16",
    "VGG16_bn",
    "VGG19",
    "VGG19_bn",
    "SqueezeNet1_0",
    "SqueezeNet1_1",
    "DenseNet121",
    "DenseNet169",
    "DenseNet201",
    "DenseNet161",
    "GoogleNet",
    "MobileNet_v2",
    "MobileNet_v3_large",
    "MobileNet_v3_small",
    "MnasNet0_5",
    "MnasNet0_75",
    "MnasNet1_0",
    "MnasNet1_3",
    "ShuffleNet_v2_x0_5",
    "ShuffleNet_v2_x1_0",
    "ShuffleNet_v2_x1_5",
    "ShuffleNet_v2_x2_0",
)

FAMILIES: tuple[str, ...] = (
    "AlexNet",
    "ResNet",
    "VGG",
    "SqueezeNet",
    "DenseNet",
    "GoogLeNet",
    "MobileNet",
    "MnasNet",
    "ShuffleNet",
)

# ResNext and Wide_ResNet variants are ResNet-family members; GoogleNet is
# the lone GoogLeNet-family member (note the capitalization difference).
_PREFIX_TO_FAMILY = (
    ("ResNet", "ResNet"),
    ("ResNext", "ResNet"),
    ("Wide_ResNet", "ResNet"),
    ("VGG", "VGG"),
    ("SqueezeNet", "SqueezeNet"),
    ("DenseNet", "DenseNet"),
    ("GoogleNet", "GoogLeNet"),
    ("MobileNet", "MobileNet"),
    ("MnasNet", "MnasNet"),
    ("ShuffleNet", "ShuffleNet"),
    ("AlexNet", "AlexNet"),
)

FAMILY_MAP: dict[str, str] = {}
for _arch in ARCHITECTURES:
    for _prefix, _family in _PREFIX_TO_FAMILY:
        if _arch.startswith(_prefix):
            FAMILY_MAP[_arch] = _family
            break


def family_of(arch: str, family_map: dict[str, str] | None = None) -> str:
    """Return the family of an architecture label.

    ``family_map`` extends (and may override) the built-in table for
    user-added candidate architectures.
    """
    if family_map is not None and arch in family_map:
        return family_map[arch]
    try:
        return FAMILY_MAP[arch]
    except KeyError:
        raise UnknownArchitectureError(
            f"no family mapping for architecture {arch!r}"
        ) from None


def family_counts() -> dict[str, int]:
    counts = {fam: 0 for fam in FAMILIES}
    for arch in ARCHITECTURES:
        counts[FAMILY_MAP[arch]] += 1
    return counts
