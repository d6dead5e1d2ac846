import pytest

from archprobe.errors import UnknownArchitectureError
from archprobe.families import ARCHITECTURES, FAMILIES, FAMILY_MAP, family_counts, family_of


def test_candidate_set_has_36_unique_names():
    assert len(ARCHITECTURES) == 36
    assert len(set(ARCHITECTURES)) == 36


def test_every_architecture_maps_to_one_family():
    for arch in ARCHITECTURES:
        assert family_of(arch) in FAMILIES


def test_family_examples():
    assert family_of("ResNet18") == "ResNet"
    assert family_of("ResNet34") == "ResNet"
    assert family_of("GoogleNet") == "GoogLeNet"
    assert family_of("ResNet18") != family_of("GoogleNet")


def test_wide_and_next_variants_are_resnet_family():
    # forced by the per-family cardinalities: the ResNet family has nine
    # members, which only works if ResNext and Wide_ResNet variants count
    assert family_of("Wide_ResNet50_2") == "ResNet"
    assert family_of("ResNext101_32x8d") == "ResNet"


def test_family_cardinalities():
    # independent enumeration over the candidate list
    counts = {}
    for arch in ARCHITECTURES:
        counts[FAMILY_MAP[arch]] = counts.get(FAMILY_MAP[arch], 0) + 1
    assert counts == {
        "AlexNet": 1,
        "ResNet": 9,
        "VGG": 8,
        "SqueezeNet": 2,
        "DenseNet": 4,
        "GoogLeNet": 1,
        "MobileNet": 3,
        "MnasNet": 4,
        "ShuffleNet": 4,
    }
    assert family_counts() == counts
    assert sum(counts.values()) == 36


def test_unknown_architecture_raises():
    with pytest.raises(UnknownArchitectureError):
        family_of("TotallyNovelNet")


def test_user_family_map_extends_and_overrides():
    assert family_of("MyNet", {"MyNet": "ResNet"}) == "ResNet"
    assert family_of("ResNet18", {"ResNet18": "Custom"}) == "Custom"
