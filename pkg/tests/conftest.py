import numpy as np
import pytest

from offlang.corpus import Document, Label, LabeledDataset


def make_dataset(texts_labels, name="fixture"):
    docs = [Document(f"d{i}", t, Label(int(y)) if y is not None else None)
            for i, (t, y) in enumerate(texts_labels)]
    return LabeledDataset(docs, name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_file(tmp_path):
    def _write(name, content):
        p = tmp_path / name
        p.write_text(content, encoding="utf-8")
        return p
    return _write
