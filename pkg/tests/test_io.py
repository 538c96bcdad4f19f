import json
import math

import numpy as np

from rholab import io


def test_json_plain_and_sorted():
    text = io.to_json({"b": np.float64(1.5), "a": np.arange(3), "c": math.inf, 2: np.int64(4)})
    assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5, "c": "inf", "2": 4}
    assert text.index('"2"') < text.index('"a"') < text.index('"b"')


def test_csv_columns_and_extras():
    text = io.to_csv([{"x": 1, "y": np.float64(0.5), "z": "ignored"}], ["x", "y"])
    assert text == "x,y\n1,0.5\n"


def test_write_rows_json(tmp_path):
    p = tmp_path / "sub" / "r.json"
    io.write_rows([{"x": 1, "y": 2}], ["x"], p, "json")
    assert json.loads(p.read_text()) == [{"x": 1}]


def test_emit_stdout(capsys):
    io.emit("hello\n", "-")
    assert capsys.readouterr().out == "hello\n"
