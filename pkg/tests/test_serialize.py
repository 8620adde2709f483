import json
from fractions import Fraction as F

import pytest

from pwc import attractor, detect_markov, refine, symbolic_model
from pwc.serialize import (
    ConfigError,
    MapOptions,
    attractor_to_json,
    cells_to_json,
    dumps_canonical,
    load_map,
    map_from_json,
    map_to_json,
    markov_report_to_json,
    model_to_json,
)

from corpus import e1, e2, e3, markov_corpus


def config_e1():
    return {
        "domain": {"lo": ["0"], "hi": ["1"]},
        "elements": [{"lo": ["0"], "hi": ["1/2"]},
                     {"lo": ["1/2"], "hi": ["1"]}],
        "pieces": [{"scale": ["1/2"], "offset": ["1/8"]},
                   {"scale": ["1/4"], "offset": ["1/2"]}],
    }


class TestRoundTrip:
    def test_corpus_maps_survive(self):
        for name, f in markov_corpus():
            g, options = map_from_json(map_to_json(f))
            assert g == f, name
            assert options == MapOptions()

    def test_parse_of_handwritten_config(self):
        f, _ = map_from_json(config_e1())
        assert f == e1()

    def test_integer_rationals_accepted(self):
        cfg = config_e1()
        cfg["domain"] = {"lo": [0], "hi": [1]}
        f, _ = map_from_json(cfg)
        assert f == e1()

    def test_boundary_rule_defaults_to_min_index(self):
        f, _ = map_from_json(config_e1())
        assert f.boundary_rule == "min_index"

    def test_options_parsed(self):
        cfg = config_e1()
        cfg["options"] = {"sigma": "1/4", "epsilon_fattening": "1/32"}
        _, options = map_from_json(cfg)
        assert options.sigma == F(1, 4)
        assert options.epsilon_fattening == F(1, 32)


class TestErrorCollection:
    def test_all_problems_reported_at_once(self):
        cfg = config_e1()
        cfg["domain"]["lo"] = ["1/0"]
        cfg["pieces"][1]["scale"] = ["0.25"]
        cfg["boundary_rule"] = "nearest"
        with pytest.raises(ConfigError) as exc:
            map_from_json(cfg)
        msgs = "\n".join(exc.value.errors)
        assert len(exc.value.errors) == 3
        assert "domain" in msgs
        assert "pieces[1]" in msgs
        assert "boundary_rule" in msgs

    def test_zero_denominator_rejected(self):
        cfg = config_e1()
        cfg["elements"][0]["hi"] = ["1/0"]
        with pytest.raises(ConfigError):
            map_from_json(cfg)

    def test_float_literals_rejected(self):
        cfg = config_e1()
        cfg["pieces"][0]["offset"] = [0.125]
        with pytest.raises(ConfigError) as exc:
            map_from_json(cfg)
        assert any("pieces[0]" in e for e in exc.value.errors)

    def test_count_mismatch(self):
        cfg = config_e1()
        cfg["pieces"] = cfg["pieces"][:1]
        with pytest.raises(ConfigError) as exc:
            map_from_json(cfg)
        assert any("1 pieces for 2 elements" in e for e in exc.value.errors)

    def test_missing_sections(self):
        with pytest.raises(ConfigError) as exc:
            map_from_json({})
        assert len(exc.value.errors) >= 3

    def test_top_level_must_be_object(self):
        with pytest.raises(ConfigError):
            map_from_json([1, 2])

    def test_bad_sigma(self):
        cfg = config_e1()
        cfg["options"] = {"sigma": "2"}
        with pytest.raises(ConfigError) as exc:
            map_from_json(cfg)
        assert any("sigma" in e for e in exc.value.errors)


class TestLoadMap:
    def test_load_from_file(self, tmp_path):
        path = tmp_path / "map.json"
        path.write_text(dumps_canonical(config_e1()))
        f, _ = load_map(str(path))
        assert f == e1()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            load_map(str(tmp_path / "absent.json"))
        assert "cannot read" in exc.value.errors[0]

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError) as exc:
            load_map(str(path))
        assert "invalid JSON" in exc.value.errors[0]


class TestReportJson:
    def test_markov_report(self):
        doc = markov_report_to_json(detect_markov(e1(), 10))
        assert doc["stabilised"] is True
        assert doc["stabilisation_time"] == 1
        json.dumps(doc)  # must be serialisable as-is

    def test_markov_failure_carries_witness(self):
        doc = markov_report_to_json(detect_markov(e2(), 5))
        assert doc["stabilised"] is False
        assert doc["touching_facet"]["value"] == "1/2"

    def test_attractor_doc(self):
        doc = attractor_to_json(attractor(e1()))
        assert doc["min_distance_to_boundary"] == "1/6"
        points = {tuple(orb["points"][0]) for orb in doc["orbits"]}
        assert points == {("1/4",), ("2/3",)}
        assert doc["orbits"][0]["points_approx"]
        json.dumps(doc)

    def test_model_doc(self):
        doc = model_to_json(symbolic_model(e3(), 1))
        assert doc["next_map"] == [2, 2]
        assert doc["wandering"] == [1]
        json.dumps(doc)

    def test_cells_doc(self):
        doc = cells_to_json(refine(e3(), 2))
        assert doc["depth"] == 2
        assert doc["cell_count"] == 2
        assert [tuple(c["word"]) for c in doc["cells"]] == [(1, 2), (2, 2)]
        json.dumps(doc)


class TestCanonicalDump:
    def test_sorted_keys_and_trailing_newline(self):
        text = dumps_canonical({"b": 1, "a": 2})
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_stable_across_dict_orderings(self):
        a = dumps_canonical({"x": 1, "y": [1, 2]})
        b = dumps_canonical({"y": [1, 2], "x": 1})
        assert a == b
