import os

import pytest
import yaml

from digrowth.config import (
    dump_network,
    list_fixtures,
    load_network,
    load_params,
    parse_network,
    write_atomic,
)
from digrowth.errors import ValidationError

FIXTURES = ["birds_sink", "birds_source", "e33", "kol18", "section33", "section44"]


def test_fixture_list():
    assert list_fixtures() == FIXTURES


@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip(name, tmp_path):
    net = load_network(name)
    path = tmp_path / "net.yaml"
    path.write_text(dump_network(net, name))
    again = load_network(path)
    assert again == net
    assert load_network(yaml.safe_load(path.read_text())) == net


def test_fixture_shapes():
    shapes = {name: (load_network(name).n, load_network(name).p) for name in FIXTURES}
    assert shapes == {
        "birds_sink": (2, 2),
        "birds_source": (2, 2),
        "e33": (3, 3),
        "kol18": (4, 4),
        "section33": (3, 3),
        "section44": (3, 2),
    }


def test_overrides():
    net = load_network("e33", {"s": -1.0})
    assert net.layers[0].growth == (1.0, -1.0, -1.0)
    assert load_params("e33") == {"r": 1.0, "s": -0.9}


def test_negated_param_and_fraction():
    doc = {
        "sites": 2,
        "params": {"a": 0.5},
        "seasons": [
            {"end_fraction": "1/3", "growth": ["-a", "a"], "links": ["1->2:2"]},
            {"end_fraction": 1, "growth": [0, "2/5"]},
        ],
    }
    net = parse_network(doc)
    assert net.breakpoints == (0.0, 1 / 3, 1.0)
    assert net.layers[0].growth == (-0.5, 0.5)
    assert net.layers[0].links == ((0, 1, 2.0),)
    assert net.layers[1].growth == (0.0, 0.4)


def test_errors_are_collected():
    doc = {
        "sites": ["a", "b"],
        "seasons": [
            {"end_fraction": 0.5, "growth": ["x", 1], "links": ["a->c", "a-b"]},
            {"end_fraction": 1.0, "growth": "oops"},
        ],
    }
    with pytest.raises(ValidationError) as info:
        parse_network(doc, {"nope": 1.0})
    text = "\n".join(info.value.problems)
    for fragment in ("override nope", "growth[0]", "unknown site 'c'", "from->to", "expected a list"):
        assert fragment in text


def test_bad_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("sites: [a, b\n")
    with pytest.raises(ValidationError, match="not valid YAML"):
        load_network(path)


def test_missing_file():
    with pytest.raises(OSError):
        load_network("/nonexistent/net.yaml")


def test_write_atomic(tmp_path):
    target = tmp_path / "out.csv"
    write_atomic(target, "a,b\n1,2\n")
    assert target.read_text() == "a,b\n1,2\n"
    write_atomic(target, "new\n")
    assert target.read_text() == "new\n"
    assert os.listdir(tmp_path) == ["out.csv"]


def test_write_atomic_failure_leaves_nothing(tmp_path):
    with pytest.raises(OSError):
        write_atomic(tmp_path / "missing" / "x.csv", "data")
    assert not (tmp_path / "missing").exists()
