import pytest

from replaydet.pipeline.config import parse_config
from replaydet.pipeline.synth import synth_corpus

TINY_CONFIG = """\
# two cheap kinds, small models: exercises every stage in a few seconds
kinds = MFCC,LFCC
components = 2
em_iterations = 3
split_iterations = 2
ae_code_dim = 8
ae_epochs = 2
ae_batch_size = 32
max_frames = 3000
ae_max_frames = 2000
"""


@pytest.fixture(scope="session")
def tiny_cfg():
    return parse_config(TINY_CONFIG)


@pytest.fixture(scope="session")
def tiny_config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "tiny.cfg"
    path.write_text(TINY_CONFIG)
    return path


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return synth_corpus(root, size=40, seed=3)
