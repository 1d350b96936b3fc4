# utils/test_config.py

import json
import math

import pytest

from utils.config import load_run_config, parse_run_config, resolve_config_path
from utils.schema import ConfigError


def minimal(**overrides) -> dict:
    data = {
        "n_atoms": 2,
        "optical": [{"h_r_mhz": 34.0, "h_l_mhz": 34.0, "gamma_mhz": 2.6, "kappa_mhz": 4.1}],
        "microwave": {"g_mhz": 0.05, "delta_over_g": 5.0},
    }
    data.update(overrides)
    return data


def test_frequencies_converted_once():
    run = parse_run_config(minimal())
    mw = run.microwave_params()
    assert mw.g == pytest.approx(2 * math.pi * 0.05)
    assert mw.delta == pytest.approx(5 * 2 * math.pi * 0.05)
    assert run.optical_params()[0].kappa == pytest.approx(2 * math.pi * 4.1)


def test_single_optical_entry_is_shared():
    run = parse_run_config(minimal())
    assert len(run.optical_params(3)) == 3
    assert run.microwave_params(3).n_atoms == 3


def test_optical_count_mismatch():
    data = minimal(optical=[{"h_r_mhz": 1.0, "h_l_mhz": 1.0}] * 2)
    with pytest.raises(ConfigError) as err:
        parse_run_config(data).optical_params(3)
    assert err.value.key_path == "optical"


def test_unknown_key_reports_path():
    data = minimal()
    data["microwave"]["g_mhz_typo"] = 1.0
    with pytest.raises(ConfigError) as err:
        parse_run_config(data)
    assert err.value.key_path == "microwave.g_mhz_typo"


@pytest.mark.parametrize(
    "microwave",
    [
        {"g_mhz": 0.05},
        {"g_mhz": 0.05, "delta_over_g": 5.0, "delta_mhz": 0.25},
    ],
)
def test_exactly_one_detuning(microwave):
    with pytest.raises(ConfigError, match="exactly one"):
        parse_run_config(minimal(microwave=microwave))


def test_negative_rate_rejected():
    data = minimal(optical=[{"h_r_mhz": 1.0, "h_l_mhz": 1.0, "kappa_mhz": -1.0}])
    with pytest.raises(ConfigError) as err:
        parse_run_config(data)
    assert err.value.key_path.startswith("optical.0")


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(str(tmp_path / "missing.json"))
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="object"):
        load_run_config(str(listing))


def test_config_dir_from_environment(tmp_path, monkeypatch):
    base = tmp_path / "configs"
    base.mkdir()
    (base / "run.json").write_text(json.dumps(minimal()), encoding="utf-8")
    work = tmp_path / "work"
    work.mkdir()
    monkeypatch.chdir(work)
    monkeypatch.setenv("CAVITYBELL_CONFIG_DIR", str(base))
    assert resolve_config_path("run.json") == base / "run.json"
    assert load_run_config("run.json").n_atoms == 2
