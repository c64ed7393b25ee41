import struct

import numpy as np
import pytest

from esefn.checkpoint import MAGIC, decode_tensors, encode_tensors, load_checkpoint, save_checkpoint
from esefn.errors import FormatError
from esefn.fusion import EseFnParams, predict


@pytest.fixture(params=[("ese", "ese"), ("se", "se"), ("ese", None), (None, "se")])
def model(request, rng):
    modal, channel = request.param
    m = EseFnParams.create(10, 12, 16, 4, rng, modal=modal, channel=channel)
    for _, p in m.named_parameters():
        p.data[...] = rng.normal(size=p.shape)
    return m


def test_save_load_save_is_byte_identical(model, tmp_path):
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(model, a)
    save_checkpoint(load_checkpoint(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_loaded_model_predicts_identically(model, tmp_path, rng):
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    f_r, f_s = rng.normal(size=(6, 10)), rng.normal(size=(6, 12))
    for a, b in zip(predict(f_r, f_s, model), predict(f_r, f_s, loaded)):
        assert np.array_equal(a.data, b.data)


def test_layout_matches_format():
    blob = encode_tensors([("w", np.array([[1.0, 2.0]])), ("s", np.array(3.0))])
    expected = (
        b"ESEFNCKP" + struct.pack("<II", 1, 2)
        + struct.pack("<H", 1) + b"w" + struct.pack("<BII", 2, 1, 2) + struct.pack("<2d", 1.0, 2.0)
        + struct.pack("<H", 1) + b"s" + struct.pack("<B", 0) + struct.pack("<d", 3.0)
    )
    assert blob == expected
    out = decode_tensors(blob)
    assert out["w"].shape == (1, 2) and out["s"].shape == ()


def test_bad_magic(model, tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    path.write_bytes(b"XXXXXXXX" + path.read_bytes()[8:])
    with pytest.raises(FormatError, match="offset 0"):
        load_checkpoint(path)


def test_bad_version():
    blob = bytearray(encode_tensors([("a", np.zeros(2))]))
    blob[8:12] = struct.pack("<I", 2)
    with pytest.raises(FormatError, match="version 2 at offset 8"):
        decode_tensors(bytes(blob))


@pytest.mark.parametrize("cut", [4, 10, 14, 17, 20, 30])
def test_truncation_names_offset(cut):
    blob = encode_tensors([("ab", np.arange(4.0))])
    with pytest.raises(FormatError, match="offset"):
        decode_tensors(blob[:cut])


def test_trailing_bytes():
    with pytest.raises(FormatError, match="trailing"):
        decode_tensors(encode_tensors([("a", np.zeros(1))]) + b"\0")


def test_missing_tensor(model, tmp_path):
    named = [(n, p.data) for n, p in model.named_parameters() if n != "head_rs.bias"]
    path = tmp_path / "m.ckpt"
    path.write_bytes(encode_tensors(named))
    with pytest.raises(FormatError, match="head_rs.bias"):
        load_checkpoint(path)


def test_inconsistent_shapes(model, tmp_path):
    named = [(n, np.zeros((3, 3)) if n == "head_rs.weight" else p.data) for n, p in model.named_parameters()]
    path = tmp_path / "m.ckpt"
    path.write_bytes(encode_tensors(named))
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_magic_constant():
    assert MAGIC == b"ESEFNCKP" and len(MAGIC) == 8
