from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from neel.config import SCHEMA, RunConfig, dump, parse_config
from neel.errors import ParseError, ValidationError

DATA = Path(__file__).parent / "data"


def test_empty_text_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    for sec, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            assert cfg[f"{sec}.{key}"] == default


def test_odd_N_rejected():
    with pytest.raises(ValidationError) as info:
        parse_config("grid.N = 4095")
    assert info.value.key == "grid.N"


def test_golden_file_dump_is_byte_identical():
    cfg = parse_config((DATA / "golden.cfg").read_text())
    assert dump(cfg) == (DATA / "golden_dump.cfg").read_text()
    assert cfg["output.directory"] == "runs/golden #1"
    assert cfg["solver.max_newton"] == 6


@given(st.floats(1e-3, 1e3, allow_nan=False), st.floats(-0.1, 0.1, allow_nan=False),
       st.floats(1e-14, 1e-2, allow_nan=False), st.sampled_from([16, 64, 4096]))
def test_roundtrip_is_bit_exact(L, eps, tol, N):
    text = f"grid.L = {L!r}\ngrid.N = {N}\nphysics.epsilon = {eps!r}\nsolver.tol_orbit = {tol!r}\n"
    cfg = parse_config(text)
    again = parse_config(dump(cfg))
    assert again == cfg
    assert again["grid.L"] == L and again["physics.epsilon"] == eps and again["solver.tol_orbit"] == tol


@pytest.mark.parametrize("text, line", [
    ("[grid]\nL = 1\nM = 3\n", 3),
    ("[nope]\n", 1),
    ("grid.L = 2\ngrid.L = 3\n", 2),
    ("L = 2\n", 1),
    ("[grid]\nN = four\n", 2),
    ("[grid\n", 1),
    ("[physics]\nallow_large_epsilon = maybe\n", 2),
    ("[grid]\njust words\n", 2),
])
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.line == line


@pytest.mark.parametrize("text, key", [
    ("physics.epsilon = 0.2", "physics.epsilon"),
    ("physics.nu = 0", "physics.nu"),
    ("solver.tol_static = -1e-8", "solver.tol_static"),
    ("solver.dt = 0.3", "solver.dt"),
    ("solver.snapshots = 3", "solver.snapshots"),
    ("physics.forcing_kind = custom_samples", "physics.forcing_kind"),
    ("grid.L = nan", "grid.L"),
    ("output.precision = 18", "output.precision"),
])
def test_validation_errors(text, key):
    with pytest.raises(ValidationError) as info:
        parse_config(text)
    assert info.value.key == key


def test_epsilon_cap_override_flag():
    cfg = parse_config("physics.epsilon = 0.2\nphysics.allow_large_epsilon = true")
    assert cfg["physics.epsilon"] == 0.2


def test_overrides_replace_file_values():
    cfg = parse_config("grid.N = 64", overrides=["grid.N=128", "physics.epsilon = 0.005"])
    assert cfg["grid.N"] == 128 and cfg["physics.epsilon"] == 0.005
    with pytest.raises(ParseError):
        parse_config("", overrides=["N=128"])
    with pytest.raises(ParseError):
        parse_config("", overrides=["grid.N"])


def test_dump_uses_repr_floats():
    cfg = parse_config("grid.L = 0.1")
    assert "L = 0.1\n" in dump(cfg)
    third = 1 / 3
    assert parse_config(f"physics.nu = {third!r}")["physics.nu"] == third
