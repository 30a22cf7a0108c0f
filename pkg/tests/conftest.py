import numpy as np
import pytest

from retrievalkit import EmbeddingSet, LabelTable


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_set(rng):
    return EmbeddingSet(rng.standard_normal((20, 6)).astype(np.float32),
                        source_tag="fixture")


def make_labels(values):
    return LabelTable(tuple((i, f"img_{i:04d}", int(v))
                            for i, v in enumerate(values)))


@pytest.fixture
def cluster_fixture(rng):
    from oracles import gaussian_clusters
    data, labels = gaussian_clusters(rng)
    return EmbeddingSet(data, source_tag="clusters"), make_labels(labels)
