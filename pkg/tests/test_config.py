import json

import pytest

from ocsim.config import (
    ScenarioValidationError,
    canonical_payload,
    default_scenario_payload,
    load_scenario,
    parse_scenario,
    scenario_hash,
)


def small_payload(**overrides):
    payload = default_scenario_payload()
    payload["population"]["population_size"] = 500
    payload["population"]["oc_seed"]["member_count"] = 10
    payload["horizon_ticks"] = 24
    payload.update(overrides)
    return payload


class TestParsing:
    def test_default_scenario_parses(self):
        cfg = parse_scenario(default_scenario_payload())
        assert cfg.population.population_size == 10000
        assert cfg.horizon_ticks == 120
        assert cfg.h == 2
        assert cfg.policies == ()

    def test_hash_stable_across_parses(self):
        a = parse_scenario(small_payload())
        b = parse_scenario(small_payload())
        assert scenario_hash(a) == scenario_hash(b)

    def test_hash_changes_with_any_parameter(self):
        base = scenario_hash(parse_scenario(small_payload()))
        assert scenario_hash(parse_scenario(small_payload(seed=2))) != base
        assert scenario_hash(parse_scenario(small_payload(h=3))) != base

    def test_negative_h_names_field(self):
        with pytest.raises(ScenarioValidationError) as err:
            parse_scenario(small_payload(h=-1))
        assert any(path == "h" for path, _ in err.value.errors)

    def test_bad_distribution_names_table(self):
        from ocsim.distributions import load_builtin_bundle, table_to_json

        inline = {name: table_to_json(t) for name, t in load_builtin_bundle().items()}
        inline["gender"]["bins"] = [
            {"label": "F", "mass": 0.5},
            {"label": "M", "mass": 0.4},
        ]
        payload = small_payload()
        payload["population"]["distributions"] = {"inline": inline}
        with pytest.raises(ScenarioValidationError) as err:
            parse_scenario(payload)
        assert any("gender" in path for path, _ in err.value.errors)

    def test_unknown_policy_kind_lists_accepted(self):
        payload = small_payload(policies=[{"kind": "midnight_basketball", "start_tick": 0, "end_tick": 10}])
        with pytest.raises(ScenarioValidationError) as err:
            parse_scenario(payload)
        joined = " ".join(m for _, m in err.value.errors)
        assert "law_enforcement" in joined

    def test_multiple_errors_reported_together(self):
        payload = small_payload(h=9, recovery_fraction=3.0)
        with pytest.raises(ScenarioValidationError) as err:
            parse_scenario(payload)
        paths = {p for p, _ in err.value.errors}
        assert {"h", "recovery_fraction"} <= paths

    def test_load_from_file_with_bundle_dir(self, tmp_path):
        from ocsim.distributions import load_builtin_bundle, save_bundle

        save_bundle(load_builtin_bundle(), tmp_path / "tables")
        payload = small_payload()
        payload["population"]["distributions"] = {"bundle": "tables"}
        (tmp_path / "scenario.json").write_text(json.dumps(payload))
        cfg = load_scenario(tmp_path / "scenario.json")
        assert cfg.population.population_size == 500

    def test_missing_file_diagnostic(self, tmp_path):
        with pytest.raises(ScenarioValidationError):
            load_scenario(tmp_path / "absent.json")

    def test_canonical_payload_reparses_to_same_hash(self):
        cfg = parse_scenario(small_payload())
        payload = canonical_payload(cfg)
        again = parse_scenario(json.loads(json.dumps(payload)))
        assert scenario_hash(again) == scenario_hash(cfg)
