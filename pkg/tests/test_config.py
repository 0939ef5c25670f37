import pytest
from hypothesis import given, strategies as st

from nlsnf.config import PARAMS, ConfigError, load_config, parse_value


def test_defaults_resolve_for_every_command():
    for cmd in PARAMS:
        cfg = load_config(cmd)
        assert set(cfg.to_dict()) == {"command"} | {p.name for p in PARAMS[cmd]}


def test_file_then_flags(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[simulate]\nLs = 4 8 16\nN = 6\nwith_q = yes\n\n[count]\ntable = divisor\n")
    cfg = load_config("simulate", ini, {"N": "5"})
    assert cfg.Ls == (4, 8, 16) and cfg.N == 5 and cfg.with_q is True
    assert load_config("count", ini).table == "divisor"
    assert load_config("chains", ini).d == 2


@pytest.mark.parametrize("cmd,over", [
    ("verify-vanishing", {"d": "9"}),
    ("verify-vanishing", {"d": "x"}),
    ("scaling", {"ell": "1.0"}),
    ("simulate", {"eps": "0"}),
    ("simulate", {"dt": "nan"}),
    ("simulate", {"scheme": "euler"}),
    ("count", {"table": "constrained", "tree": "4"}),
    ("coeff", {"resonant": "maybe"}),
    ("chains", {"bogus": "1"}),
])
def test_invalid_configs(cmd, over):
    with pytest.raises(ConfigError):
        load_config(cmd, None, over)


def test_eps_zero_with_t_max_is_allowed():
    cfg = load_config("simulate", None, {"eps": "0", "t_max": "10"})
    assert cfg.eps == (0.0,)


def test_unknown_key_in_file(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[coeff]\nfoo = 1\n")
    with pytest.raises(ConfigError):
        load_config("coeff", ini)
    with pytest.raises(ConfigError):
        load_config("coeff", tmp_path / "missing.ini")


@given(st.lists(st.integers(-1000, 1000), max_size=6))
def test_int_list_round_trip(xs):
    p = next(p for p in PARAMS["scaling"] if p.name == "Ls")
    assert parse_value(p, " ".join(map(str, xs))) == tuple(xs)
    assert parse_value(p, ",".join(map(str, xs))) == tuple(xs)
