import math

import pytest

from trapres.config import parse_config_text, resolved_as_json
from trapres.errors import NotCritical, ParseError


def test_defaults_and_derived_h():
    cfg = parse_config_text("")
    assert cfg.spec.spec.h == pytest.approx(1 / math.sqrt(2))
    assert "channel.h" in cfg.derived
    assert cfg.eps_ladder == (0.02, 0.01, 0.005, 0.0025)
    assert resolved_as_json(cfg)["channel"]["h"] == pytest.approx(1 / math.sqrt(2))


def test_values_read():
    cfg = parse_config_text("[channel]\neps = 0.005  # note\n[oracle]\nbasis = 4\nweighted = no\n"
                            "[sweep]\neps = 0.02, 0.01, 0.005, 0.0025, 0.00125\n")
    assert cfg.spec.spec.eps == 0.005
    assert cfg.truncation.basis == 4 and cfg.truncation.weighted is False
    assert len(cfg.eps_ladder) == 5


@pytest.mark.parametrize("text,line", [
    ("[trap]\na = 2\nbogus = 1\n", 3),
    ("[nope]\n", 1),
    ("\n[oracle]\nbasis = four\n", 3),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as ei:
        parse_config_text(text)
    assert ei.value.line == line


def test_explicit_h_checked():
    with pytest.raises(NotCritical):
        parse_config_text("[channel]\nh = 0.8\n")
