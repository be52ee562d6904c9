import json

import pytest

from fracp import ConfigError
from fracp.config import load_config, parse_config


def test_defaults_are_the_reference_setup():
    cfg = parse_config({})
    assert (cfg.params.N, cfg.params.s, cfg.params.p) == (2, 0.5, 2.0)
    assert (cfg.nonlinearity.m, cfg.nonlinearity.q) == (1.0, 3.0)
    assert cfg.solve.grid == cfg.grid
    assert cfg.echo["params"] == {"N": 2, "s": 0.5, "p": 2.0}


def test_integers_widen_to_floats():
    cfg = parse_config({"params": {"s": 0.25, "p": 3}, "nonlinearity": {"q": 4}, "operator": {"x_radius": 1}})
    assert cfg.params.p == 3.0 and isinstance(cfg.params.p, float)


@pytest.mark.parametrize(
    "doc, path",
    [
        ({"bogus": {}}, "bogus"),
        ({"params": {"N": 2, "k": 1}}, "params.k"),
        ({"params": {"N": 2.5}}, "params.N"),
        ({"params": {"s": 1.2}}, "params.s"),
        ({"params": {"p": True}}, "params.p"),
        ({"nonlinearity": {"q": 5.0}}, "nonlinearity.q"),
        ({"nonlinearity": {"family": "cubic"}}, "nonlinearity.family"),
        ({"solve": {"max_iters": 0}}, "solve"),
        ({"solve": {"grid": {}}}, "solve.grid"),
        ({"input": {"kind": "file"}}, "input.path"),
        ({"input": {"kind": "spline"}}, "input.kind"),
        ({"input": {"width": 0.0}}, "input.width"),
        ({"operator": {"x_radius": [0.0, -1.0]}}, "operator.x_radius[1]"),
        ({"ibp_check": {"lam": 0}}, "ibp_check.lam"),
        ({"limit_study": {"lambdas": [0.2, 0.4]}}, "limit_study.lambdas"),
        ({"limit_study": {"lambdas": [0.2, "x"]}}, "limit_study.lambdas[1]"),
        ({"kernel": {"n_g": 0}}, "kernel.n_g"),
        ({"params": [1, 2]}, "params"),
    ],
)
def test_errors_name_the_field(doc, path):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.path.startswith(path)


def test_toml_and_json_agree(tmp_path):
    (tmp_path / "a.toml").write_text('[params]\ns = 0.3\np = 2.5\n[grid]\nM = 32\nRmax = 8.0\n')
    (tmp_path / "a.json").write_text(json.dumps({"params": {"s": 0.3, "p": 2.5}, "grid": {"M": 32, "Rmax": 8.0}}))
    a, b = load_config(tmp_path / "a.toml"), load_config(tmp_path / "a.json")
    assert a.echo == b.echo
    assert a.base_dir == tmp_path


def test_syntax_error_and_missing_file(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[params\n")
    with pytest.raises(ConfigError, match="syntax"):
        load_config(bad)
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.toml")


def test_shipped_configs_parse(configs_dir):
    files = sorted(configs_dir.glob("*.toml"))
    assert files
    for f in files:
        load_config(f)
