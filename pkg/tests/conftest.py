import os

import pytest

from tagmt.mt.model import ModelConfig
from tagmt.mt.train import train
from tagmt.toy import make_copy_task

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def fixture_path(*parts):
    return os.path.join(FIXTURES, *parts)


TINY_CONFIG = ModelConfig(
    layers=2,
    heads=2,
    model_dim=32,
    ff_dim=64,
    dropout=0.0,
    label_smoothing=0.1,
    max_steps=350,
    validation_interval=50,
    learning_rate=3e-3,
    warmup_steps=25,
    batch_size=32,
    max_len=16,
    seed=5,
)


@pytest.fixture(scope="session")
def copy_checkpoint():
    """A small trained copy-task model shared by decode/checkpoint tests."""
    pairs = make_copy_task(520, seed=21)
    return train(TINY_CONFIG, pairs[:500], pairs[500:])
