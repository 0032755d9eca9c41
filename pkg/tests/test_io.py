import json
import math

import pytest

from conftest import BETA_C_S3, MODELS
from critpin.errors import ModelError
from critpin.io import load_model, model_from_dict
from critpin.thermo import Regime, classify


@pytest.mark.parametrize("name,regime", [
    ("critical_s3", Regime.CRITICAL),
    ("critical_log_k1", Regime.CRITICAL),
    ("localized", Regime.LOCALIZED),
    ("delocalized", Regime.DELOCALIZED),
    ("finite_bernoulli", Regime.LOCALIZED),
])
def test_reference_models(name, regime):
    m = load_model(MODELS / f"{name}.json")
    assert m.name == name
    assert classify(m).regime is regime


def test_critical_keyword_resolves_beta():
    m = load_model(MODELS / "localized.json")
    assert m.potential.beta == pytest.approx(BETA_C_S3 + 0.5, abs=1e-14)


def test_rounded_beta_literal_is_off_critical():
    doc = {"waiting": {"family": "power", "kappa": 2.0},
           "potential": {"kind": "constant", "beta": -0.18393}, "reward": {"kind": "count"}}
    assert classify(model_from_dict(doc)).regime is Regime.LOCALIZED


def _write(tmp_path, text):
    p = tmp_path / "m.json"
    p.write_text(text)
    return p


def test_schema_error_is_line_anchored(tmp_path):
    text = '{\n  "waiting": {"family": "power", "kappa": 2.0},\n  "potential": {"kind": "constant", "beta": 0.0},\n  "reward": {"kind": "vector"}\n}\n'
    with pytest.raises(ModelError, match=r"m\.json:4: \.reward\.kind"):
        load_model(_write(tmp_path, text))


def test_negative_kappa_rejected(tmp_path):
    text = '{\n  "waiting": {\n    "family": "power",\n    "kappa": -1.0\n  },\n  "potential": {"kind": "constant", "beta": 0.0},\n  "reward": {"kind": "count"}\n}\n'
    with pytest.raises(ModelError, match=r"m\.json:4: \.waiting\.kappa"):
        load_model(_write(tmp_path, text))


def test_invalid_json_reports_position(tmp_path):
    with pytest.raises(ModelError, match=r"m\.json:2:\d+: invalid JSON"):
        load_model(_write(tmp_path, '{\n  "waiting": ,\n}'))


def test_domain_error_reports_section(tmp_path):
    doc = {"waiting": {"family": "finite", "mass": [[2, 0.5], [4, 0.5]]},
           "potential": {"kind": "constant", "beta": 0.0}, "reward": {"kind": "count"}}
    with pytest.raises(ModelError, match=r"m\.json:2: waiting: .*periodic"):
        load_model(_write(tmp_path, json.dumps(doc, indent=1)))


@pytest.mark.parametrize("doc", [
    {"waiting": {"family": "power", "kappa": 2.0, "extra": 1}, "potential": {"kind": "constant", "beta": 0}, "reward": {"kind": "count"}},
    {"waiting": {"family": "finite", "mass": [[1, 1.0]]}, "potential": {"kind": "constant", "beta": "critical"}, "reward": {"kind": "count"}},
    {"waiting": {"family": "power", "kappa": 2.0}, "potential": {"kind": "constant", "beta": 0.1, "offset": 1}, "reward": {"kind": "count"}},
    {"waiting": {"family": "power", "kappa": 2.0}, "potential": {"kind": "constant", "beta": 0}},
    {"waiting": {"family": "finite", "mass": [[1.5, 1.0]]}, "potential": {"kind": "constant", "beta": 0}, "reward": {"kind": "count"}},
    {"waiting": {"family": "power", "kappa": 2.0}, "potential": {"kind": "constant", "beta": 0}, "reward": {"kind": "table", "values": [[1, 2]]}},
])
def test_invalid_documents(doc):
    with pytest.raises(ModelError):
        model_from_dict(doc)


def test_hybrid_and_table_documents():
    doc = {"waiting": {"family": "hybrid", "head": [[1, 0.2], [2, 0.1]],
                       "tail": {"kappa": 1.5, "log_power": 1.0, "scale": 0.5}, "tail_start": 3},
           "potential": {"kind": "table", "beta": -0.2, "values": [[1, 0.4]]},
           "reward": {"kind": "table", "values": [[1, 2.0]], "slope": 0.5, "intercept": -1.0}}
    m = model_from_dict(doc)
    assert m.waiting.pmf(2) == 0.1 and m.waiting.pmf(3) == pytest.approx(0.5 * math.log(math.e + 3) / 3 ** 2.5)
    assert m.potential(1) == 0.4 and m.potential(7) == -0.2
    assert m.reward(1) == 2.0 and m.reward(4) == 1.0
