import json

import numpy as np
import pytest

from channel_coherence.channels import amplitude_damping, random_channel, same_map
from channel_coherence.io import (
    ChannelFormatError,
    channel_from_dict,
    channel_to_dict,
    dumps_channel,
    loads_channel,
    read_channel,
    write_channel,
)
from channel_coherence.numerics import DimensionError


def test_round_trip_exact(tmp_path):
    ch = random_channel(2, 3, 2, seed=4)
    path = tmp_path / "ch.json"
    write_channel(ch, path, name="r")
    back = read_channel(path)
    assert back.name == "r"
    assert all(np.array_equal(a, b) for a, b in zip(ch.kraus, back.kraus))


def test_dumps_is_deterministic():
    ch = amplitude_damping(0.3)
    assert dumps_channel(ch) == dumps_channel(amplitude_damping(0.3))
    assert same_map(loads_channel(dumps_channel(ch)), ch)


def test_entry_layout():
    d = channel_to_dict(amplitude_damping(1.0))
    assert d["dim_in"] == 2 and d["dim_out"] == 2
    assert d["kraus"][1][0][1] == [1.0, 0.0]


@pytest.mark.parametrize(
    "text",
    [
        '{"dim_in": 2',
        "[]",
        '{"dim_in": 2, "dim_out": 2}',
        '{"dim_in": 2, "dim_out": 2, "kraus": []}',
        '{"dim_in": 2, "dim_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0]]]]}',
        '{"dim_in": 2, "dim_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [NaN, 0]]]]}',
        '{"dim_in": 2, "dim_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], "x"]]]}',
        '{"dim_in": 2, "dim_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0, 0]]]]}',
        '{"dim_in": 0, "dim_out": 2, "kraus": [[[[1, 0]]]]}',
    ],
)
def test_malformed_rejected(text):
    with pytest.raises(ChannelFormatError):
        loads_channel(text)


def test_shape_mismatch_is_dimension_error():
    obj = {"dim_in": 3, "dim_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]}
    with pytest.raises(DimensionError):
        channel_from_dict(obj)


def test_non_utf8_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_bytes(b"\xff\xfe\x00")
    with pytest.raises(ChannelFormatError):
        read_channel(path)


def test_infinity_rejected():
    text = json.dumps({"dim_in": 1, "dim_out": 1, "kraus": [[[[float("inf"), 0]]]]})
    with pytest.raises(ChannelFormatError):
        loads_channel(text)
