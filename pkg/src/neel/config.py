"""Run configuration: flat sectioned key-value text with embedded defaults.

Format::

    # comment
    [grid]
    L = 60.0
    N = 4096
    physics.epsilon = 0.01      # dotted keys work anywhere

Unknown keys are errors.  ``dump`` writes every key in a fixed order with
floats in ``repr`` form, so ``parse_config(dump(cfg)) == cfg`` bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .dynamics import FORCING_KINDS
from .errors import ParseError, ValidationError

# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "grid": {
        "L": (float, 60.0),
        "N": (int, 4096),
    },
    "physics": {
        "nu": (float, 0.5),
        "epsilon": (float, 0.0),
        "T": (float, 1.0),
        "forcing_kind": (str, "cosine"),
        "forcing_amplitude": (float, 1.0),
        "allow_large_epsilon": (bool, False),
    },
    "solver": {
        "dt": (float, 1.0 / 2048),
        "snapshots": (int, 256),
        "tol_static": (float, 1e-8),
        "max_static_iter": (int, 200),
        "tol_orbit": (float, 1e-9),
        "max_newton": (int, 8),
        "krylov_dim": (int, 60),
        "n_multipliers": (int, 12),
        "n_eigen": (int, 10),
        "dense_cap": (int, 2048),
    },
    "evolve": {
        "duration": (float, 1.0),
        "perturbation": (float, 0.01),
        "record_every": (int, 8),
    },
    "output": {
        "directory": (str, "neel_out"),
        "precision": (int, 17),
        "snapshot_every": (int, 16),
    },
}

EPSILON_CAP = 0.1


def _defaults() -> dict:
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


@dataclass
class RunConfig:
    values: dict = field(default_factory=_defaults)

    def __getitem__(self, dotted: str):
        sec, key = dotted.split(".", 1)
        return self.values[sec][key]

    def section(self, name: str) -> dict:
        return dict(self.values[name])

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunConfig):
            return NotImplemented
        return dump(self) == dump(other)

    def as_dict(self) -> dict:
        return {sec: dict(v) for sec, v in self.values.items()}


def _coerce(kind: type, raw: str, line: int, key: str):
    text = raw.strip()
    if kind is str:
        if len(text) >= 2 and text[0] == text[-1] == '"':
            try:
                return json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(line, f"bad string for {key}: {exc.msg}") from None
        if not text:
            raise ParseError(line, f"empty value for {key}")
        return text
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ParseError(line, f"expected a boolean for {key}, got {text!r}")
    if kind is int:
        try:
            return int(text, 10)
        except ValueError:
            try:
                f = float(text)
            except ValueError:
                raise ParseError(line, f"expected an integer for {key}, got {text!r}") from None
            if not f.is_integer():
                raise ParseError(line, f"expected an integer for {key}, got {text!r}") from None
            return int(f)
    try:
        return float(text)
    except ValueError:
        raise ParseError(line, f"expected a number for {key}, got {text!r}") from None


def _strip_comment(line: str) -> str:
    out = []
    quoted = False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def _assign(values: dict, seen: set, section: str | None, key: str, raw: str, lineno: int):
    if "." in key:
        section, key = key.split(".", 1)
    if section is None:
        raise ParseError(lineno, f"key {key!r} outside any section")
    if section not in SCHEMA:
        raise ParseError(lineno, f"unknown section {section!r}")
    if key not in SCHEMA[section]:
        raise ParseError(lineno, f"unknown key {section}.{key}")
    full = f"{section}.{key}"
    if full in seen:
        raise ParseError(lineno, f"duplicate key {full}")
    seen.add(full)
    values[section][key] = _coerce(SCHEMA[section][key][0], raw, lineno, full)


def parse_config(text: str, overrides=(), validate_result: bool = True) -> RunConfig:
    """Parse config text, then apply ``key=value`` overrides (dotted keys)."""
    values = _defaults()
    seen: set = set()
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line)
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ParseError(lineno, "unterminated section header")
            section = body[1:-1].strip()
            if section not in SCHEMA:
                raise ParseError(lineno, f"unknown section {section!r}")
            continue
        if "=" not in body:
            raise ParseError(lineno, "expected 'key = value'")
        key, raw = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ParseError(lineno, "missing key before '='")
        _assign(values, seen, section, key, raw, lineno)
    for i, item in enumerate(overrides, start=1):
        if "=" not in item:
            raise ParseError(0, f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if "." not in key:
            raise ParseError(0, f"override key {key!r} must be section.key")
        # overrides may repeat keys from the file
        seen.discard(key)
        _assign(values, seen, None, key, raw, 0)
    cfg = RunConfig(values)
    if validate_result:
        validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    v = cfg.values
    for sec, keys in v.items():
        for key, val in keys.items():
            if isinstance(val, float) and not math.isfinite(val):
                raise ValidationError(f"{sec}.{key}", "must be finite")
    g, p, s, e, o = v["grid"], v["physics"], v["solver"], v["evolve"], v["output"]
    if g["L"] <= 0:
        raise ValidationError("grid.L", "must be positive")
    if g["N"] % 2 or g["N"] < 16:
        raise ValidationError("grid.N", "must be even and >= 16")
    if p["nu"] <= 0:
        raise ValidationError("physics.nu", "must be positive")
    if p["T"] <= 0:
        raise ValidationError("physics.T", "must be positive")
    if abs(p["epsilon"]) > EPSILON_CAP and not p["allow_large_epsilon"]:
        raise ValidationError("physics.epsilon", f"|epsilon| <= {EPSILON_CAP} unless physics.allow_large_epsilon = true")
    if p["forcing_kind"] not in ("cosine", "odd_harmonics"):
        allowed = ", ".join(k for k in FORCING_KINDS if k != "custom_samples")
        raise ValidationError("physics.forcing_kind", f"one of {allowed} (custom samples are library-only)")
    for key in ("tol_static", "tol_orbit", "dt"):
        if s[key] <= 0:
            raise ValidationError(f"solver.{key}", "must be positive")
    steps = p["T"] / s["dt"]
    n = round(steps)
    if abs(steps - n) > 1e-9 * steps or n % 2:
        raise ValidationError("solver.dt", "must divide the period into an even number of steps")
    if s["snapshots"] < 2 or s["snapshots"] % 2 or n % s["snapshots"]:
        raise ValidationError("solver.snapshots", "must be even and divide the steps per period")
    for key, lo in (("max_static_iter", 1), ("max_newton", 1), ("krylov_dim", 2), ("dense_cap", 16)):
        if s[key] < lo:
            raise ValidationError(f"solver.{key}", f"must be >= {lo}")
    if not 1 <= s["n_multipliers"] <= 40:
        raise ValidationError("solver.n_multipliers", "must lie in 1..40")
    if not 1 <= s["n_eigen"] <= 20:
        raise ValidationError("solver.n_eigen", "must lie in 1..20")
    if e["duration"] < 0:
        raise ValidationError("evolve.duration", "must be nonnegative")
    ratio = e["duration"] / s["dt"]
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ValidationError("evolve.duration", "must be a whole number of steps")
    if e["record_every"] < 1:
        raise ValidationError("evolve.record_every", "must be >= 1")
    if not 1 <= o["precision"] <= 17:
        raise ValidationError("output.precision", "must lie in 1..17")
    if o["snapshot_every"] < 1:
        raise ValidationError("output.snapshot_every", "must be >= 1")
    if not o["directory"]:
        raise ValidationError("output.directory", "must be non-empty")


def _fmt(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, int):
        return str(val)
    if isinstance(val, float):
        return repr(val)
    return json.dumps(val)


def dump(cfg: RunConfig) -> str:
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(cfg.values[sec][key])}")
        lines.append("")
    return "\n".join(lines)
