import sys

import numpy as np
import pytest

from tensorparse.io import FeatureConfig, featurize
from tensorparse.synthetic import generate_embeddings, generate_treebank
from tensorparse.trainer import init_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy_treebank():
    return generate_treebank(10, seed=3, max_len=8)


@pytest.fixture(scope="session")
def toy_embeddings():
    return generate_embeddings(8, seed=4)


@pytest.fixture(scope="session")
def toy_features(toy_treebank, toy_embeddings):
    fc = FeatureConfig.from_sentences(toy_treebank, toy_embeddings.width)
    return fc, [featurize(s, toy_embeddings, fc.pos_vocab) for s in toy_treebank]


def random_model(features, hidden, layers, seed, scale=None):
    """Glorot-initialized model, or uniform(-scale, scale) on every parameter."""
    params = init_model(features, hidden, layers, seed)
    if scale is None:
        return params
    r = np.random.default_rng(seed + 1)
    flat = {k: r.uniform(-scale, scale, v.shape) for k, v in params.flatten().items()}
    return type(params).from_flat(flat)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[key])
