"""Binary tensor container: byte layout, round trips, corruption handling."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylebrush.container import (
    load_tensor_container,
    read_tensor_container,
    save_tensor_container,
    write_tensor_container,
)
from stylebrush.errors import ContainerFormatError

names = st.text(
    alphabet=st.characters(min_codepoint=ord("a"), max_codepoint=ord("z")),
    min_size=1, max_size=12,
)
shapes = st.lists(st.integers(1, 4), min_size=0, max_size=4)


def tensor_dicts():
    def build(pairs):
        rng = np.random.default_rng(len(pairs))
        return {
            name: rng.standard_normal(shape).astype(np.float32)
            for name, shape in dict(pairs).items()
        }
    return st.lists(st.tuples(names, shapes), min_size=0,
                    max_size=5).map(build)


@settings(max_examples=40, deadline=None)
@given(tensor_dicts())
def test_round_trip(tensors):
    back = read_tensor_container(write_tensor_container(tensors))
    assert set(back) == set(tensors)
    for name, arr in tensors.items():
        assert back[name].shape == arr.shape
        assert np.array_equal(back[name], arr)


def test_file_round_trip(tmp_path):
    tensors = {"enc.stage1.conv1.kernel": np.ones((2, 1, 3, 3), np.float32)}
    path = tmp_path / "w.istc"
    save_tensor_container(tensors, path)
    back = load_tensor_container(path)
    assert np.array_equal(back["enc.stage1.conv1.kernel"],
                          tensors["enc.stage1.conv1.kernel"])


def test_empty_container():
    assert read_tensor_container(write_tensor_container({})) == {}


def test_bad_magic():
    blob = bytearray(write_tensor_container({"a": np.zeros(2, np.float32)}))
    blob[:4] = b"XXXX"
    with pytest.raises(ContainerFormatError):
        read_tensor_container(bytes(blob))


def test_bad_version():
    blob = bytearray(write_tensor_container({"a": np.zeros(2, np.float32)}))
    struct.pack_into("<I", blob, 4, 99)
    with pytest.raises(ContainerFormatError):
        read_tensor_container(bytes(blob))


def test_duplicate_names_rejected():
    one = write_tensor_container({"a": np.zeros(2, np.float32)})
    # Splice the single entry in twice under the same header count of 2.
    header = one[:8] + struct.pack("<I", 2)
    entry = one[12:]
    with pytest.raises(ContainerFormatError):
        read_tensor_container(header + entry + entry)


def test_trailing_bytes_rejected():
    blob = write_tensor_container({"a": np.zeros(2, np.float32)})
    with pytest.raises(ContainerFormatError):
        read_tensor_container(blob + b"\x00")


def test_every_truncation_fails():
    blob = write_tensor_container({
        "a": np.arange(6, dtype=np.float32).reshape(2, 3),
        "b": np.zeros(1, np.float32),
    })
    for cut in range(len(blob)):
        with pytest.raises(ContainerFormatError):
            read_tensor_container(blob[:cut])


def test_unknown_dtype_rejected():
    blob = bytearray(write_tensor_container({"a": np.zeros(1, np.float32)}))
    # dtype byte sits right after the 4-byte name length and 1-byte name.
    offset = 12 + 4 + 1
    blob[offset] = 7
    with pytest.raises(ContainerFormatError):
        read_tensor_container(bytes(blob))


def test_write_casts_to_float32():
    src = np.array([0.1, 0.2], dtype=np.float64)
    back = read_tensor_container(write_tensor_container({"a": src}))
    assert back["a"].dtype == np.float32
    assert np.array_equal(back["a"], src.astype(np.float32))
