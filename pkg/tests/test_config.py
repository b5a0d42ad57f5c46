"""Config schema validation and the builders that turn configs into objects."""

import json
import math

import pytest

from sta_trapkit.config import (
    AMU,
    build_pair,
    build_protocol,
    build_state,
    load_config,
    require_blocks,
    validate_config,
)
from sta_trapkit.errors import ConfigError
from sta_trapkit.protocol import ProtocolKind

TWO_PI = 2.0 * math.pi


def base_cfg(**extra):
    cfg = {"trap": {"f0_hz": 3e6, "ff_hz": 1e6, "tf_s": 20e-9, "mass_amu": 40.0}}
    cfg.update(extra)
    return cfg


def test_minimal_config_validates():
    cfg = base_cfg()
    assert validate_config(cfg) is cfg


def test_full_config_validates():
    cfg = base_cfg(
        protocol={"kind": "shortcut", "extra_coeffs": [[6, 1.5], [7, -0.2]]},
        state={"thermal": {"T_K": 2e-3}},
        sim={
            "rf_hz": 100e6,
            "fz_hz": 100e3,
            "lead_periods": 3.0,
            "trail_s": 1e-6,
            "escape_radius_m": 1e-4,
            "ic": {"x_m": 3e-8, "vy_ms": 0.5},
        },
        sweep={"tf_s": [2e-8, 5e-8], "protocols": ["shortcut", "linear"]},
        optimize={"n_extra": 1, "p": 16, "grid": 4001},
        cycle={"T_cold_K": 5e-4},
        output={"dir": "out"},
    )
    validate_config(cfg)


def test_unknown_top_level_key_rejected():
    cfg = base_cfg(bogus=1)
    with pytest.raises(ConfigError, match="<root>"):
        validate_config(cfg)


def test_unknown_block_key_rejected_with_path():
    cfg = base_cfg()
    cfg["trap"]["bogus"] = 1.0
    with pytest.raises(ConfigError, match="trap"):
        validate_config(cfg)


def test_missing_required_field_names_block_and_field():
    cfg = base_cfg()
    del cfg["trap"]["f0_hz"]
    with pytest.raises(ConfigError) as err:
        validate_config(cfg)
    assert "trap" in str(err.value)
    assert "f0_hz" in str(err.value)


def test_nonpositive_frequency_rejected():
    cfg = base_cfg()
    cfg["trap"]["ff_hz"] = 0.0
    with pytest.raises(ConfigError, match="trap.ff_hz"):
        validate_config(cfg)


def test_state_must_pick_exactly_one():
    cfg = base_cfg(state={"thermal": {"T_K": 1e-3}, "coherent": {"re": 1.0, "im": 0.0}})
    with pytest.raises(ConfigError, match="state"):
        validate_config(cfg)
    with pytest.raises(ConfigError, match="state"):
        validate_config(base_cfg(state={}))


def test_extra_coeff_index_below_six_rejected():
    cfg = base_cfg(protocol={"extra_coeffs": [[5, 1.0]]})
    with pytest.raises(ConfigError, match="minimum of 6"):
        validate_config(cfg)


def test_unknown_protocol_kind_rejected():
    with pytest.raises(ConfigError, match="protocol.kind"):
        validate_config(base_cfg(protocol={"kind": "bang"}))
    with pytest.raises(ConfigError, match="sweep"):
        validate_config(base_cfg(sweep={"tf_s": [1e-8], "protocols": ["bang"]}))


def test_optimize_grid_floor():
    with pytest.raises(ConfigError, match="optimize.grid"):
        validate_config(base_cfg(optimize={"grid": 500}))


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "nope.json")


def test_load_config_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(p)


def test_load_config_non_object(tmp_path):
    p = tmp_path / "arr.json"
    p.write_text("[1, 2, 3]")
    with pytest.raises(ConfigError, match="JSON object"):
        load_config(p)


def test_load_config_round_trip(tmp_path):
    cfg = base_cfg(state={"coherent": {"re": 1.0, "im": -0.5}})
    p = tmp_path / "run.json"
    p.write_text(json.dumps(cfg))
    assert load_config(p) == cfg


def test_require_blocks_lists_missing():
    with pytest.raises(ConfigError, match="sim, cycle"):
        require_blocks(base_cfg(), "trap", "sim", "cycle")
    require_blocks(base_cfg(), "trap")


def test_build_pair_units():
    pair = build_pair(base_cfg())
    assert pair.omega0 == pytest.approx(TWO_PI * 3e6, rel=1e-12)
    assert pair.omegaf == pytest.approx(TWO_PI * 1e6, rel=1e-12)
    assert pair.tf == 20e-9
    assert pair.mass == pytest.approx(40.0 * AMU, rel=1e-12)


def test_build_pair_tf_override():
    pair = build_pair(base_cfg(), tf=5e-8)
    assert pair.tf == 5e-8


def test_build_protocol_default_is_shortcut():
    cfg = base_cfg()
    pair = build_pair(cfg)
    prot, b = build_protocol(cfg, pair)
    assert prot.kind is ProtocolKind.SHORTCUT
    assert b is not None
    assert b(0.0) == pytest.approx(1.0, abs=1e-12)
    gamma = math.sqrt(pair.omega0 / pair.omegaf)
    assert b(pair.tf) == pytest.approx(gamma, rel=1e-12)


def test_build_protocol_extra_coeffs_change_schedule():
    cfg = base_cfg(protocol={"extra_coeffs": [[6, 2.0]]})
    pair = build_pair(cfg)
    prot, b = build_protocol(cfg, pair)
    base_prot, _ = build_protocol(base_cfg(), pair)
    mid = 0.5 * pair.tf
    assert prot.omega_sq(mid) != pytest.approx(base_prot.omega_sq(mid), rel=1e-6)
    # boundary conditions still hold
    assert b(pair.tf) == pytest.approx(math.sqrt(pair.omega0 / pair.omegaf), rel=1e-9)
    assert abs(b.db(pair.tf)) < 1e-6 * abs(b(pair.tf)) / pair.tf


def test_build_protocol_other_kinds():
    cfg = base_cfg()
    pair = build_pair(cfg)
    lin, blin = build_protocol(cfg, pair, kind="linear")
    assert lin.kind is ProtocolKind.LINEAR and blin is None
    assert lin.omega_sq(0.0) == pytest.approx(pair.omega0**2, rel=1e-12)
    assert lin.omega_sq(pair.tf) == pytest.approx(pair.omegaf**2, rel=1e-12)
    sm, _ = build_protocol(cfg, pair, kind="smooth")
    assert sm.kind is ProtocolKind.SMOOTH
    const, _ = build_protocol(cfg, pair, kind="constant")
    assert const.kind is ProtocolKind.CONSTANT
    assert const.omega_sq(0.7 * pair.tf) == pytest.approx(pair.omega0**2, rel=1e-12)


def test_build_protocol_kind_argument_beats_config():
    cfg = base_cfg(protocol={"kind": "linear"})
    pair = build_pair(cfg)
    prot, _ = build_protocol(cfg, pair)
    assert prot.kind is ProtocolKind.LINEAR
    prot2, _ = build_protocol(cfg, pair, kind="constant")
    assert prot2.kind is ProtocolKind.CONSTANT


def test_build_protocol_unknown_kind():
    cfg = base_cfg()
    pair = build_pair(cfg)
    with pytest.raises(ConfigError, match="unknown protocol kind"):
        build_protocol(cfg, pair, kind="bang")


def test_build_state_thermal():
    cfg = base_cfg(state={"thermal": {"T_K": 2e-3}})
    pair = build_pair(cfg)
    state = build_state(cfg, pair)
    assert state.x1 == 0.0 and state.x2 == 0.0
    assert state.purity < 0.1  # 2 mK at 3 MHz is far above ground


def test_build_state_coherent():
    cfg = base_cfg(state={"coherent": {"re": 1.5, "im": -0.5}})
    pair = build_pair(cfg)
    state = build_state(cfg, pair)
    l0 = math.sqrt(1.054571817e-34 / (2.0 * pair.mass * pair.omega0))
    assert state.x1 == pytest.approx(2.0 * l0 * 1.5, rel=1e-9)
    assert state.purity == pytest.approx(1.0, rel=1e-9)


def test_build_state_requires_block():
    with pytest.raises(ConfigError, match="state"):
        build_state(base_cfg(), build_pair(base_cfg()))
