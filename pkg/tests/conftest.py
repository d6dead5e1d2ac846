import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def quadro_log():
    return FIXTURES / "googlenet_imagenet_quadro.csv"


@pytest.fixture(scope="session")
def sequential_trace():
    return (FIXTURES / "trace_sequential.json").read_text()


@pytest.fixture(scope="session")
def branching_trace():
    return (FIXTURES / "trace_branching.json").read_text()


@pytest.fixture(scope="session")
def small_corpus():
    """6 classes x 8 train profiles, strongly separable."""
    from archprobe import synth

    spec = synth.PerturbationSpec(noise_rel=0.02)
    return synth.generate_corpus(6, 8, spec, seed=11)


@pytest.fixture(scope="session")
def small_test_corpus():
    from archprobe import synth

    spec = synth.PerturbationSpec(noise_rel=0.02)
    return synth.generate_corpus(6, 4, spec, seed=11, role="test", rep_offset=8)
