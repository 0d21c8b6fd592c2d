import json

import numpy as np
import pytest

from sparsescene.scene import Instance, InstanceMask
from sparsescene.vocab import (AttributeDef, AttributeVocab, ClassDef,
                               ClassVocab)


def rect(x0, y0, x1, y1):
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=np.float64)


def rect_instance(iid, cid, x0, y0, x1, y1, score=1.0, attrs=None):
    return Instance(id=iid, class_id=cid, score=score,
                    mask=InstanceMask([rect(x0, y0, x1, y1)]),
                    attributes=set(attrs or ()))


CLASSES = [
    ClassDef(1, "car", "foreground", frozenset({"vehicle"})),
    ClassDef(2, "window", "background"),
    ClassDef(3, "headlight", "background", frozenset({"light"})),
    ClassDef(4, "tree", "background"),
    ClassDef(5, "bus", "foreground"),
    ClassDef(6, "road", "background"),
    ClassDef(7, "person", "foreground"),
]

ATTRIBUTES = [AttributeDef(i, name) for i, name in enumerate(
    ["red", "blue", "rusty", "wet", "leafless", "shiny", "black", "white"])]


@pytest.fixture
def class_vocab():
    return ClassVocab(CLASSES)


@pytest.fixture
def attr_vocab():
    return AttributeVocab(ATTRIBUTES)


@pytest.fixture
def vocab_files(tmp_path, class_vocab, attr_vocab):
    vocab_path = tmp_path / "classes.json"
    attrs_path = tmp_path / "attributes.json"
    vocab_path.write_text(json.dumps(class_vocab.to_json()))
    attrs_path.write_text(json.dumps(attr_vocab.to_json()))
    return vocab_path, attrs_path
