import json

import numpy as np
import pytest

from leobh.estimator import EstimatorMixin
from leobh.predictor import TrafficPredictor
from leobh.scenario import Normalizers, Scenario, small_scenario, table2_scenario


def test_table2_defaults():
    sc = table2_scenario()
    assert sc.n_sats == 12 and sc.cells_per_sat == 19 and sc.n_cells_total == 168
    assert sc.n_beams == 4
    assert sc.p_tot_w == pytest.approx(10 ** 3.9)   # 39 dBW
    assert sc.p_max_w == pytest.approx(1000.0)      # 30 dBW
    assert sc.bh_period_slots == 64
    assert sc.slot_s == pytest.approx(2e-3)


@pytest.mark.parametrize("bad", [
    dict(n_beams=0),
    dict(n_beams=20),                       # K > C
    dict(cells_per_sat=10),                 # not centered-hexagonal
    dict(n_cells_total=500),                # > N*C
    dict(p_max_w=9000.0),                   # P_max > P_tot
    dict(alpha=1.5),
    dict(beta=-0.1),
    dict(t_ttl_slots=0),
    dict(bandwidth_hz=0.0),
    dict(t_rx_k=-1.0),
])
def test_invalid_scenarios_rejected(bad):
    with pytest.raises(ValueError):
        table2_scenario(**bad)


def test_json_roundtrip(tmp_path):
    sc = small_scenario(alpha=0.7, rng_seed=11)
    path = tmp_path / "s.json"
    sc.to_json(path)
    doc = json.loads(path.read_text())
    assert set(doc) == set(Scenario.__dataclass_fields__)
    back = Scenario.from_json(path)
    assert back == sc


def test_unknown_json_keys_rejected(tmp_path):
    sc = small_scenario()
    doc = sc.to_dict()
    doc["mystery_knob"] = 3
    with pytest.raises(ValueError, match="mystery_knob"):
        Scenario.from_dict(doc)


def test_normalizer_defaults_derived():
    sc = table2_scenario()
    nz = sc.normalizers
    per_beam = sc.bandwidth_hz * np.log2(1.0 + sc.peak_sinr()) * sc.slot_s
    assert nz.th_max == pytest.approx(sc.n_beams * per_beam)
    assert nz.j_max == sc.t_ttl_slots
    assert nz.q_max == pytest.approx(sc.t_ttl_slots * nz.th_max)


def test_normalizer_overrides_respected():
    sc = table2_scenario(normalizers=Normalizers(q_max=1.0, j_max=2.0, th_max=3.0))
    assert (sc.normalizers.q_max, sc.normalizers.j_max,
            sc.normalizers.th_max) == (1.0, 2.0, 3.0)


def test_peak_sinr_within_expected_range():
    # single nadir beam at P_max: about 13.4 dB at the 12-satellite defaults
    sc = table2_scenario()
    assert 10 * np.log10(sc.peak_sinr()) == pytest.approx(13.4, abs=0.1)


# ---------------------------------------------------------------- estimators

def test_get_params_matches_init():
    est = TrafficPredictor(window=16, hidden=8, epochs=3, lr=1e-3, seed=4)
    assert est.get_params() == {"window": 16, "hidden": 8, "epochs": 3,
                                "lr": 1e-3, "seed": 4}


def test_set_params_roundtrip_and_validation():
    est = TrafficPredictor()
    est.set_params(window=8, epochs=1)
    assert est.window == 8 and est.epochs == 1
    with pytest.raises(ValueError, match="invalid parameter"):
        est.set_params(not_a_param=1)


def test_params_clone_equivalence():
    a = TrafficPredictor(window=8, hidden=4, epochs=2, seed=3)
    b = TrafficPredictor(**a.get_params())
    assert isinstance(a, EstimatorMixin)
    assert a.get_params() == b.get_params()
    assert "window=8" in repr(a)
