"""Scenario files: INI-style sections with lower_snake_case keys.

Example::

    [system]
    n = 16
    k = 6
    key_space_size = 65536

    [sweep]
    strategies = fixed-psi:0.02, fixed-omega:100, conventional:0.015
    phi_grid = 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9
    ptx_dbm = -10:50:5
    realizations = 5
    trials = 200
    seed = 1

    [factors]
    psi = 0.002, 0.005, 0.01, 0.02
    omega = 0:500:25

    [output]
    path = results.csv
    format = csv
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .channel import ConfigError, SystemConfig
from .powerctl import Strategy

__all__ = ["ScenarioFile", "load_scenario", "parse_scenario", "parse_grid", "parse_strategies"]

# config key -> SystemConfig field
_SYSTEM_KEYS = {
    "n": "N",
    "m": "M",
    "k": "K",
    "z": "Z",
    "l_p": "L_p",
    "delta": "delta",
    "f_c": "f_c",
    "b": "B",
    "bandwidth": "B",
    "noise_figure": "noise_figure",
    "thermal_noise_density": "thermal_noise_density",
    "d_s_over_lambda": "d_s_over_lambda",
    "l_t": "L_t",
    "p_fa": "p_fa",
    "key_space_size": "key_space_size",
    "d_h_range": "d_H_range",
    "d_v": "d_V",
    "d_e_range": "d_e_range",
    "beta": "beta",
    "tag_in_sinr": "tag_in_sinr",
}
_INT_FIELDS = {"N", "M", "K", "Z", "L_p", "L_t", "key_space_size"}
_RANGE_FIELDS = {"d_H_range", "d_e_range"}

_SWEEP_KEYS = {"strategies", "phi_grid", "ptx_dbm", "realizations", "trials", "seed", "analytic_only",
               "ml_attack", "false_alarm", "mc_key_space", "workers"}
_FACTOR_KEYS = {"psi", "omega"}
_OUTPUT_KEYS = {"path", "format"}
_SECTIONS = {"system": set(_SYSTEM_KEYS), "sweep": _SWEEP_KEYS, "factors": _FACTOR_KEYS,
             "output": _OUTPUT_KEYS}

DEFAULT_PHI_GRID = tuple(round(0.1 * i, 10) for i in range(1, 10))
DEFAULT_PTX_DBM = tuple(float(p) for p in range(-10, 51, 5))
DEFAULT_PSI = (0.002, 0.005, 0.01, 0.02)
DEFAULT_OMEGA = tuple(float(w) for w in range(0, 501, 25))


def _default_strategies() -> list[Strategy]:
    return [Strategy.fixed_psi(0.02), Strategy.fixed_omega(100.0), Strategy.conventional(0.015)]


@dataclass
class ScenarioFile:
    system: SystemConfig = field(default_factory=SystemConfig)
    strategies: list[Strategy] = field(default_factory=_default_strategies)
    phi_grid: tuple[float, ...] = DEFAULT_PHI_GRID
    ptx_dbm: tuple[float, ...] = DEFAULT_PTX_DBM
    realizations: int = 5
    trials: int = 200
    seed: int = 1
    analytic_only: bool = False
    ml_attack: bool = False
    false_alarm: bool = True
    mc_key_space: int = 256
    workers: int = 1
    psi: tuple[float, ...] = DEFAULT_PSI
    omega: tuple[float, ...] = DEFAULT_OMEGA
    out_path: str | None = None
    out_format: str = "csv"

    def validate(self) -> None:
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.trials < 0:
            raise ConfigError("trials must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.out_format not in ("csv", "jsonl"):
            raise ConfigError(f"unknown output format {self.out_format!r}")
        if any(not 0 < p <= 1 for p in self.phi_grid):
            raise ConfigError("phi_grid values must lie in (0, 1]")
        if not self.ptx_dbm:
            raise ConfigError("ptx_dbm grid is empty")
        if not 2 <= self.mc_key_space <= min(4096, self.system.key_space_size):
            raise ConfigError("mc_key_space must lie in [2, min(4096, key_space_size)]")


def parse_grid(text: str) -> tuple[float, ...]:
    """``"a, b, c"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text and "," not in text:
        try:
            parts = [float(p) for p in text.split(":")]
        except ValueError as exc:
            raise ConfigError(f"bad range {text!r}") from exc
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"bad range {text!r}; expected start:stop:step with step > 0")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + i * step, 12)) for i in range(max(n, 0)))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def parse_strategies(text: str) -> list[Strategy]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        kind, _, value = item.partition(":")
        kind = kind.strip()
        try:
            if not value:
                defaults = {"fixed-psi": 0.02, "fixed-omega": 100.0, "conventional": 0.015}
                if kind not in defaults:
                    raise ValueError(f"unknown strategy {kind!r}")
                out.append(Strategy(kind, defaults[kind]))
            else:
                out.append(Strategy(kind, float(value)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return out


def _parse_bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _system_value(field_name: str, text: str):
    text = text.strip()
    if field_name in _RANGE_FIELDS:
        vals = parse_grid(text)
        if len(vals) != 2:
            raise ConfigError(f"{field_name} needs exactly two values, got {text!r}")
        return vals
    if field_name == "tag_in_sinr":
        return _parse_bool(field_name, text)
    if field_name in ("beta", "Z") and text.lower() in ("auto", "none", ""):
        return None
    try:
        return int(text) if field_name in _INT_FIELDS else float(text)
    except ValueError as exc:
        raise ConfigError(f"{field_name}: cannot parse {text!r}") from exc


def parse_scenario(text: str) -> ScenarioFile:
    cp = configparser.ConfigParser(interpolation=None, default_section="__unused__",
                                   inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keep case so mistakes are reported verbatim
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse scenario: {exc}") from exc

    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")

    sc = ScenarioFile()
    if cp.has_section("system"):
        overrides = {_SYSTEM_KEYS[k]: _system_value(_SYSTEM_KEYS[k], v) for k, v in cp["system"].items()}
        sc.system = SystemConfig(**overrides)
    if cp.has_section("sweep"):
        s = cp["sweep"]
        try:
            if "strategies" in s:
                sc.strategies = parse_strategies(s["strategies"])
            if "phi_grid" in s:
                sc.phi_grid = parse_grid(s["phi_grid"])
            if "ptx_dbm" in s:
                sc.ptx_dbm = parse_grid(s["ptx_dbm"])
            for key in ("realizations", "trials", "seed", "mc_key_space", "workers"):
                if key in s:
                    setattr(sc, key, int(s[key]))
        except ValueError as exc:
            raise ConfigError(f"[sweep]: {exc}") from exc
        for key, attr in (("analytic_only", "analytic_only"), ("ml_attack", "ml_attack"),
                          ("false_alarm", "false_alarm")):
            if key in s:
                setattr(sc, attr, _parse_bool(key, s[key]))
    if cp.has_section("factors"):
        f = cp["factors"]
        if "psi" in f:
            sc.psi = parse_grid(f["psi"])
        if "omega" in f:
            sc.omega = parse_grid(f["omega"])
    if cp.has_section("output"):
        o = cp["output"]
        sc.out_path = o.get("path", sc.out_path)
        sc.out_format = o.get("format", sc.out_format).strip()
    sc.validate()
    return sc


def load_scenario(path: str | Path | None) -> ScenarioFile:
    if path is None:
        sc = ScenarioFile()
        sc.validate()
        return sc
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario(text)
