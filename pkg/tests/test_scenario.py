import dataclasses
import json

import pytest

from irsbeam.errors import ScenarioParseError, ScenarioValidationError
from irsbeam.scenario import (AnglePair, digest, from_dict, load_scenario,
                              replace, to_dict, validate)
from tests.conftest import SCENARIOS


class TestDefaults:
    def test_empty_dict_fills_documented_defaults(self):
        scn = from_dict({})
        assert scn.m_y == 48 and scn.m_z == 48
        assert scn.f_c_hz == pytest.approx(3.5e9)
        assert scn.delta_db == pytest.approx(10.0)
        assert scn.sigma == pytest.approx(20.0)
        assert scn.xi == pytest.approx(0.001)
        assert scn.zeta == 10
        assert scn.g_t_db == pytest.approx(14.5)
        assert scn.g_db == pytest.approx(4.0)
        assert scn.incident == AnglePair(-45.0, 144.0)
        assert scn.reflect_phi_deg == (-90.0, 90.0)
        assert scn.reflect_theta_deg == (90.0, 180.0)
        region = scn.mask.mainlobe[0]
        assert region.phi_deg == (-15.0, 15.0)
        assert region.theta_deg == (110.0, 140.0)
        assert scn.mask.sample_step_deg == pytest.approx(10.0)
        assert scn.mask.gap_deg == pytest.approx(10.0)

    def test_sizes_only_equals_full_default(self):
        assert from_dict({"m_y": 48, "m_z": 48}) == from_dict({})

    def test_golden_default_file_matches_builtin(self):
        scn = load_scenario(SCENARIOS / "default.json")
        assert scn == from_dict({})
        assert digest(scn) == digest(from_dict({}))

    def test_half_wavelength_spacing_default(self):
        scn = from_dict({})
        lam = 299792458.0 / 3.5e9
        assert scn.spacing_m[0] == pytest.approx(lam / 2, rel=1e-12)
        assert scn.spacing_m[1] == pytest.approx(lam / 2, rel=1e-12)

    def test_cached_linear_conversions(self):
        scn = from_dict({})
        assert scn.g_t_linear == pytest.approx(10 ** 1.45, rel=1e-12)
        assert scn.g_linear == pytest.approx(10 ** 0.4, rel=1e-12)
        assert scn.delta_linear == pytest.approx(10.0, rel=1e-12)


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["default.json", "table1_4x4.json",
                                      "trapezoid_16x16.json", "parabolic_16x16.json"])
    def test_serialize_parse_identity(self, name):
        scn = load_scenario(SCENARIOS / name)
        again = from_dict(to_dict(scn))
        assert again == scn  # field-by-field dataclass equality
        assert digest(again) == digest(scn)

    def test_digest_changes_with_any_field(self):
        scn = from_dict({})
        assert digest(replace(scn, delta_db=9.0)) != digest(scn)
        assert digest(replace(scn, m_y=47)) != digest(scn)

    def test_scenario_is_immutable(self):
        scn = from_dict({})
        with pytest.raises(dataclasses.FrozenInstanceError):
            scn.m_y = 3


class TestValidation:
    def test_default_is_clean(self):
        assert validate(from_dict({})) == []

    @pytest.mark.parametrize("overrides,field", [
        ({"m_y": 0}, "m_y"),
        ({"m_z": -2}, "m_z"),
        ({"delta_db": -3.0}, "delta_db"),
        ({"sigma": 0.0}, "sigma"),
        ({"xi": 0.0}, "xi"),
        ({"zeta": 0}, "zeta"),
        ({"f_c_hz": 0.0}, "f_c_hz"),
        ({"incident_theta_deg": 200.0}, "incident"),
        ({"incident_phi_deg": 250.0}, "incident"),
        ({"d_y_m": -0.01}, "d_y_m"),
        ({"max_sca_iters": 0}, "max_sca_iters"),
        ({"objective_mode": "log"}, "objective_mode"),
    ])
    def test_invalid_field_named_in_error(self, overrides, field):
        with pytest.raises(ScenarioValidationError) as err:
            from_dict(overrides)
        assert field in str(err.value)

    def test_unknown_keys_fail_loudly(self):
        with pytest.raises(ScenarioValidationError) as err:
            from_dict({"m_ies": 4})
        assert "m_ies" in str(err.value)
        with pytest.raises(ScenarioValidationError) as err:
            from_dict({"mask": {"mainlobes": []}})
        assert "mainlobes" in str(err.value)

    def test_unknown_region_kind(self):
        with pytest.raises(ScenarioValidationError) as err:
            from_dict({"mask": {"mainlobe_regions": [{"kind": "blob"}]}})
        assert "kind" in str(err.value)

    def test_incident_outside_element_support(self):
        # elevation 180 deg points along -z: the element pattern is zero there
        with pytest.raises(ScenarioValidationError) as err:
            from_dict({"incident_theta_deg": 180.0})
        assert "incident" in str(err.value)
        # grazing azimuth has the same problem
        with pytest.raises(ScenarioValidationError):
            from_dict({"incident_phi_deg": 90.0, "incident_theta_deg": 144.0})

    def test_root_must_be_object(self):
        with pytest.raises(ScenarioParseError):
            from_dict([1, 2])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioParseError):
            load_scenario(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioParseError):
            load_scenario(path)

    def test_every_violation_reported_at_once(self):
        with pytest.raises(ScenarioValidationError) as err:
            from_dict({"m_y": 0, "delta_db": -1.0})
        message = str(err.value)
        assert "m_y" in message and "delta_db" in message


class TestReplace:
    def test_replace_revalidates(self):
        scn = from_dict({})
        with pytest.raises(ScenarioValidationError):
            replace(scn, m_y=0)

    def test_replace_changes_only_named_fields(self):
        scn = from_dict({})
        other = replace(scn, m_y=16, m_z=16)
        assert other.m_y == 16 and other.m_z == 16
        assert other.mask == scn.mask and other.delta_db == scn.delta_db


def test_scenario_files_are_valid_json():
    for path in sorted(SCENARIOS.glob("*.json")):
        with open(path, encoding="utf-8") as fh:
            json.load(fh)
        load_scenario(path)
