"""Run configuration: INI-style sections read with ``configparser``.

    [trap]     a, b, p, q
    [channel]  omega_minus, omega_plus, m, h (optional: derived when absent), eps
    [sweep]    eps = comma-separated list
    [oracle]   n_channel, n_trap, n_quad, basis, weighted
    [source]   x1, x2, amplitude
    [field]    x1_min, x1_max, x2_min, x2_max, nx, ny, t

Unknown sections or keys are errors.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field

from .errors import ParseError
from .exterior import SourceTerm
from .geometry import (
    ResonatorSpec,
    ValidatedSpec,
    critical_channel_length,
    rectangle_eigenfrequency,
    validate_spec,
)
from .oracle import Truncation
from .verify import DEFAULT_EPS_LADDER

_DEFAULTS = {
    "trap": {"a": 2.0, "b": 1.0, "p": 2, "q": 1},
    "channel": {"omega_minus": -0.5, "omega_plus": 0.5, "m": 1, "h": None, "eps": 0.01},
    "sweep": {"eps": ",".join(repr(e) for e in DEFAULT_EPS_LADDER)},
    "oracle": {"n_channel": 128, "n_trap": 800, "n_quad": 24, "basis": 8, "weighted": True},
    "source": {"x1": 0.3, "x2": -1.7, "amplitude": 1.0},
    "field": {"x1_min": -1.0, "x1_max": 1.0, "x2_min": -2.0, "x2_max": 1.0,
              "nx": 41, "ny": 61, "t": None},
}
_INT_KEYS = {"p", "q", "m", "n_channel", "n_trap", "n_quad", "basis", "nx", "ny"}
_BOOL_KEYS = {"weighted"}


@dataclass
class RunConfig:
    spec: ValidatedSpec
    eps_ladder: tuple
    truncation: Truncation
    source: SourceTerm
    grid: dict
    resolved: dict = field(default_factory=dict)   # every value used, defaults included
    derived: list = field(default_factory=list)    # keys computed rather than read


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            cur = line[1:-1].strip()
            if key is None and cur == section:
                return i
            continue
        if key is not None and cur == section and "=" in line:
            if line.split("=", 1)[0].strip() == key:
                return i
    return None


def _convert(section: str, key: str, raw: str, text: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _BOOL_KEYS:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if section == "sweep" and key == "eps":
            vals = tuple(float(v) for v in raw.split(",") if v.strip())
            if not vals:
                raise ValueError("empty list")
            return vals
        if key == "amplitude":
            return complex(raw.replace(" ", ""))
        return float(raw)
    except ValueError as exc:
        raise ParseError(_line_of(text, section, key), key, f"bad value {raw!r}: {exc}") from None


def parse_config_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(getattr(exc, "lineno", None), None, str(exc).splitlines()[0]) from None
    values = {sec: dict(d) for sec, d in _DEFAULTS.items()}
    for sec in cp.sections():
        if sec not in _DEFAULTS:
            raise ParseError(_line_of(text, sec), sec, f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in _DEFAULTS[sec]:
                raise ParseError(_line_of(text, sec, key), key, f"unknown key {key!r} in [{sec}]")
            values[sec][key] = _convert(sec, key, raw, text)
    if isinstance(values["sweep"]["eps"], str):
        values["sweep"]["eps"] = tuple(float(v) for v in values["sweep"]["eps"].split(","))

    tr, ch = values["trap"], values["channel"]
    derived = []
    if ch["h"] is None:
        k0 = rectangle_eigenfrequency(tr["p"], tr["q"], tr["a"], tr["b"])
        ch["h"] = critical_channel_length(k0, ch["m"])
        derived.append("channel.h")
    raw = ResonatorSpec(a=tr["a"], b=tr["b"], omega_minus=ch["omega_minus"],
                        omega_plus=ch["omega_plus"], h=ch["h"], p=tr["p"], q=tr["q"],
                        m=ch["m"], eps=ch["eps"])
    vs = validate_spec(raw)
    orc = values["oracle"]
    trunc = Truncation(n_channel=orc["n_channel"], n_trap=orc["n_trap"], n_quad=orc["n_quad"],
                       basis=orc["basis"], weighted=orc["weighted"])
    src_v = values["source"]
    src = SourceTerm((src_v["x1"], src_v["x2"]), src_v["amplitude"])
    src.check(raw.h)
    return RunConfig(spec=vs, eps_ladder=tuple(values["sweep"]["eps"]), truncation=trunc,
                     source=src, grid=dict(values["field"]), resolved=values, derived=derived)


def parse_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def resolved_as_json(cfg: RunConfig) -> dict:
    """JSON-safe copy of the resolved values."""
    out = {}
    for sec, d in cfg.resolved.items():
        row = {}
        for k, v in d.items():
            if isinstance(v, complex):
                row[k] = [v.real, v.imag]
            elif isinstance(v, tuple):
                row[k] = list(v)
            elif isinstance(v, float) and not math.isfinite(v):
                row[k] = str(v)
            else:
                row[k] = v
        out[sec] = row
    return out


def truncation_dict(t: Truncation) -> dict:
    return asdict(t)
