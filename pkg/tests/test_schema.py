import json
from fractions import Fraction

import pytest

from hodge_convolution.errors import DescriptorParseError
from hodge_convolution.hypergeometric import HypergeometricSpec, make_hypergeometric, make_kummer
from hodge_convolution.models import Absent, Aggregate, JordanBlock, Point
from hodge_convolution.schema import parse_module, parse_module_obj, serialize_module


def kummer_doc(a="2/5", b="3/5"):
    return {
        "name": "L(2/5)",
        "h": {"0": 1},
        "delta": {"0": -1},
        "points": [
            {"at": "0", "blocks": [{"p": 0, "a": a, "l": 1}]},
            {"at": "inf", "blocks": [{"p": 0, "a": b, "l": 1}]},
        ],
        "flags": {"irreducible": True, "nonconstant": True, "minimal_extension": True},
    }


def test_parse_kummer_descriptor():
    m = parse_module(json.dumps(kummer_doc()))
    assert m.rank == 1
    assert m.delta.as_dict() == {0: -1}
    assert m.infinity_blocks() == (JordanBlock(0, Fraction(3, 5), 1),)


def test_residue_out_of_range():
    with pytest.raises(DescriptorParseError, match="residue out of range"):
        parse_module_obj(kummer_doc(a="7/5"))


def test_unknown_field_rejected():
    doc = kummer_doc()
    doc["colour"] = "red"
    with pytest.raises(DescriptorParseError, match="unknown field"):
        parse_module_obj(doc)


def test_invalid_json():
    with pytest.raises(DescriptorParseError, match="invalid JSON"):
        parse_module(b"{not json")


def test_point_needs_exactly_one_form():
    doc = kummer_doc()
    doc["points"][0]["aggregate"] = {"nu_nonzero": [], "mu_zero": []}
    with pytest.raises(DescriptorParseError):
        parse_module_obj(doc)


def test_duplicate_points_rejected():
    doc = kummer_doc()
    doc["points"].append({"at": "0/1", "blocks": [{"p": 0, "a": "1/2", "l": 1}]})
    with pytest.raises(DescriptorParseError, match="duplicate"):
        parse_module_obj(doc)


def test_float_residue_rejected():
    doc = kummer_doc()
    doc["points"][0]["blocks"][0]["a"] = 0.4
    with pytest.raises(DescriptorParseError):
        parse_module_obj(doc)


def test_aggregate_and_unknown_points():
    doc = {
        "name": "P",
        "h": {"0": 1, "1": 1},
        "delta": "unknown",
        "points": [
            {"at": "1", "unknown": True, "omega": 1},
            {"at": "2", "aggregate": {"nu_nonzero": [{"p": 0, "a": "1/3", "mult": 1}], "mu_zero": [{"p": 1, "mult": 1}]}},
            {"at": "inf", "blocks": [{"p": 1, "a": "1/4", "l": 2}]},
        ],
    }
    m = parse_module_obj(doc)
    assert m.delta is None
    assert m.at(Point(Fraction(1))) == Absent(1)
    agg = m.at(Point(Fraction(2)))
    assert isinstance(agg, Aggregate)
    assert agg.nu_nonzero[(0, Fraction(1, 3))] == 1
    assert agg.mu_zero[1] == 1


def test_serialize_parses_back():
    for m in (make_kummer("2/5"), make_hypergeometric(HypergeometricSpec(3, Fraction(1, 4)))):
        assert parse_module(serialize_module(m)) == m


def test_serialize_is_stable_text():
    text = serialize_module(make_kummer("1/3"))
    assert text.endswith("\n")
    obj = json.loads(text)
    assert obj["points"][0] == {"at": "0", "blocks": [{"p": 0, "a": "1/3", "l": 1, "mult": 1}]}
    assert obj["h1par"] == {}
