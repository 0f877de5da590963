import numpy as np
import pytest

from spikecode import harness


@pytest.fixture(scope="session")
def default_corpus():
    """The default 4-class synthetic corpus (seed 42), shared across tests."""
    spec = harness.SyntheticSpec(seed=42)
    clips, manifest = harness.generate_synthetic(spec)
    return clips, manifest


@pytest.fixture(scope="session")
def default_dataset(default_corpus):
    clips, manifest = default_corpus
    return harness.load_dataset(manifest, clips)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
