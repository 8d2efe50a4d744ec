import pytest

from encoderkit import build_tiny_encoder, write_sentences


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    return str(build_tiny_encoder(tmp_path_factory.mktemp("tiny-encoder")))


@pytest.fixture
def sentences_tsv(tmp_path):
    return write_sentences(tmp_path / "sentences.tsv")
