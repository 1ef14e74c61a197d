import json

import numpy as np
import pytest

from cauchydirac import scenario
from cauchydirac.fields import DEFAULT_SPINOR
from cauchydirac.scenario import ConfigError


def _problems(raw):
    with pytest.raises(ConfigError) as err:
        scenario.from_dict(raw)
    return dict(err.value.problems)


def test_canonical_scenario():
    sc = scenario.canonical()
    assert sc.grid().n == 32 and sc.grid().extent == 4.0
    assert sc.foliation().is_flat
    assert sc.potential().name == "bump"
    chi = sc.datum()
    assert np.allclose(chi.values[(16, 16, 16)], np.exp(-1) * DEFAULT_SPINOR)
    assert sc.solver["t1"] == 2.0


def test_minimal_config_takes_defaults():
    sc = scenario.loads('{"schema_version": 1, "name": "tiny", "grid": {"n": 8, "extent": 2.0}}')
    assert sc.grid().n == 8
    assert sc.solver["steps"] == scenario.DEFAULTS["solver"]["steps"]
    assert sc.budgets["unitarity_drift"] == 1e-3


def test_steep_plane_names_slope():
    probs = _problems({"schema_version": 1, "name": "x",
                       "surface": {"family": "tilted", "params": {"slope": [1.2, 0, 0]}}})
    assert "surface.params.slope" in probs


def test_odd_grid_and_reversed_times():
    probs = _problems({"schema_version": 1, "name": "x", "grid": {"n": 15},
                       "solver": {"t0": 1.0, "t1": 0.5}})
    assert "grid.n" in probs and "solver.t1" in probs


def test_support_must_fit_box():
    probs = _problems({"schema_version": 1, "name": "x", "grid": {"n": 8, "extent": 1.0},
                       "datum": {"radius": 1.0}})
    assert "datum.radius" in probs


def test_unknown_keys_and_suites():
    probs = _problems({"schema_version": 1, "name": "x", "colour": "red", "checks": ["algebra", "magic"]})
    assert "colour" in probs and "checks[1]" in probs


def test_wrong_schema_version():
    assert "schema_version" in _problems({"schema_version": 2, "name": "x"})


def test_covariance_section_validated():
    probs = _problems({"schema_version": 1, "name": "x", "covariance": {"axis": 4, "sizes": [24, 16]}})
    assert "covariance.axis" in probs and "covariance.sizes" in probs


def test_syntax_error_reports_position():
    with pytest.raises(ConfigError) as err:
        scenario.loads('{"schema_version": 1,\n "name": }', source="bad.json")
    assert "line 2" in str(err.value)


def test_error_message_carries_line_number(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"schema_version": 1, "name": "x",\n "mass": -1}\n')
    with pytest.raises(ConfigError) as err:
        scenario.load(path)
    assert "mass" in str(err.value) and "line 2" in str(err.value)


def test_spinor_accepts_pairs():
    sc = scenario.from_dict({"schema_version": 1, "name": "x", "grid": {"n": 8, "extent": 2.0},
                             "datum": {"spinor": [[1, 0], [0, 1], 0, 0]}})
    u = sc.datum().values[(4, 4, 4)]
    assert u[1] / u[0] == pytest.approx(1j)


def test_relaxing_foliation_and_gaussian_datum():
    sc = scenario.from_dict({
        "schema_version": 1, "name": "curved", "grid": {"n": 8, "extent": 3.0},
        "foliation": {"kind": "relaxing-bump", "amplitude": 0.3, "width": 1.0, "relax_time": 0.5},
        "datum": {"kind": "gaussian", "width": 0.5},
    })
    fol = sc.foliation()
    assert fol.name == "relaxing-bump" and not fol.is_flat
    chi = sc.datum()
    assert np.allclose(chi.surface.height(np.zeros(3)), fol.height(0.0, np.zeros(3)))


def test_describe_is_json(tmp_path):
    sc = scenario.canonical()
    text = json.dumps(sc.describe(), sort_keys=True)
    again = scenario.loads(text)
    assert again.describe() == sc.describe()
