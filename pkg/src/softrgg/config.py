"""Key-value run configuration: parsing, validation and round-trip serialisation.

One ``key = value`` per line; ``#`` starts a comment.  Lists are comma
separated.  Recognised keys and defaults are those of :class:`RunConfig`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .connection import ConnectionFunction, check_assumptions, scaling_radius
from .graph import MODES
from .montecarlo import DEFAULT_MAX_WORK, ExperimentSpec

FORMATS = ("json", "csv")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    tau: float
    L: float
    alpha: float = 1.0
    family: str = "rayleigh"
    r_c: float | None = None
    table: str | None = None
    truncated: bool = False
    coupled: bool = False
    mode: str = "windowed"
    eps: float = 1e-12
    trials: int = 20000
    seed: int = 0
    m: tuple = ()
    m_bound: int = 1000
    max_work: float = DEFAULT_MAX_WORK
    L_values: tuple = ()
    workers: int = 1
    out: str | None = None
    format: str = "json"

    def to_spec(self, L: float | None = None) -> ExperimentSpec:
        return ExperimentSpec(
            tau=self.tau,
            L=self.L if L is None else float(L),
            alpha=self.alpha,
            family=self.family,
            r_c=self.r_c,
            table=self.table,
            truncated=self.truncated,
            coupled=self.coupled,
            mode=self.mode,
            eps=self.eps,
            trials=self.trials,
            seed=self.seed,
            m_values=self.m,
            m_bound=self.m_bound,
            max_work=self.max_work,
        )

    def serialize(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {_render(v)}")
        return "\n".join(lines) + "\n"


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_render(x) for x in v)
    return str(v)


def _to_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _to_int(s: str) -> int:
    f = float(s)
    if not f.is_integer():
        raise ValueError(f"not an integer: {s!r}")
    return int(f)


def _int_list(s: str) -> tuple:
    return tuple(_to_int(p) for p in s.split(",") if p.strip())


def _float_list(s: str) -> tuple:
    return tuple(float(p) for p in s.split(",") if p.strip())


def _opt_float(s: str):
    return None if s.lower() in ("none", "") else float(s)


def _opt_str(s: str):
    return None if s.lower() == "none" or not s else s


_PARSERS = {
    "tau": float,
    "L": float,
    "alpha": float,
    "family": str,
    "r_c": _opt_float,
    "table": _opt_str,
    "truncated": _to_bool,
    "coupled": _to_bool,
    "mode": str,
    "eps": float,
    "trials": _to_int,
    "seed": _to_int,
    "m": _int_list,
    "m_bound": _to_int,
    "max_work": float,
    "L_values": _float_list,
    "workers": _to_int,
    "out": _opt_str,
    "format": str,
}
REQUIRED = ("tau", "L")


def parse_pairs(source: str) -> dict:
    """Raw ``key -> (value, line)`` mapping; raises ConfigError on malformed lines."""
    seen = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", line=lineno)
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", key=key, line=lineno)
        seen[key] = (value, lineno)
    return seen


def parse_config(source: str, command: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse and validate configuration text.

    ``overrides`` (already typed values, e.g. from command-line flags) replace
    parsed keys. ``command="bounds"`` additionally requires the connection
    function to satisfy ‖H‖₂² < ‖H‖₁.
    """
    values = {}
    for key, (text, lineno) in parse_pairs(source).items():
        try:
            values[key] = _PARSERS[key](text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", key=key, line=lineno) from None
    for key, v in (overrides or {}).items():
        if v is not None:
            values[key] = v
    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}", key=key)
    cfg = RunConfig(**values)
    validate(cfg, command)
    return cfg


def validate(cfg: RunConfig, command: str | None = None) -> None:
    def bad(key, msg):
        raise ConfigError(msg, key=key)

    if cfg.family not in ("rayleigh", "exponential", "hard", "tabulated"):
        bad("family", f"unknown family {cfg.family!r}")
    if cfg.family == "tabulated" and not cfg.table:
        bad("table", "tabulated family needs 'table'")
    if cfg.family == "hard" and cfg.r_c is not None and not cfg.r_c > 0:
        bad("r_c", "r_c must be positive")
    if cfg.mode not in MODES:
        bad("mode", f"mode must be one of {MODES}")
    if not 0 < cfg.eps < 1:
        bad("eps", "eps must lie in (0, 1)")
    if not cfg.alpha > 0:
        bad("alpha", "alpha must be positive")
    if cfg.trials < 1:
        bad("trials", "trials must be at least 1")
    if cfg.seed < 0:
        bad("seed", "seed must be nonnegative")
    if cfg.workers < 1:
        bad("workers", "workers must be at least 1")
    if cfg.m_bound < 1:
        bad("m_bound", "m_bound must be at least 1")
    if cfg.format not in FORMATS:
        bad("format", f"format must be one of {FORMATS}")
    if cfg.m and not (cfg.truncated or cfg.coupled):
        bad("m", "discretization (m) needs truncated = true or coupled = true")
    try:
        cf = ConnectionFunction.from_name(cfg.family, cfg.r_c, cfg.table)
    except (OSError, ValueError) as exc:
        bad("family" if cfg.family != "tabulated" else "table", str(exc))
    for key, L in [("L", cfg.L)] + [("L_values", v) for v in cfg.L_values]:
        if not (math.isfinite(L) and L > 0):
            bad(key, f"L must be positive, got {L}")
        if cfg.tau * L <= 1:
            bad("tau" if key == "L" else key, "invalid regime: tau*L <= 1")
        if cfg.m and not float(L).is_integer():
            bad(key, "discretization needs an integer L")
        scaling_radius(cfg.tau, L, cf, cfg.alpha)
    if command == "bounds":
        report = check_assumptions(cf)
        if not report.passed:
            bad(
                "family",
                f"connection function fails the assumption ‖H‖₂² < ‖H‖₁ "
                f"(margin {report.margin:.3g}); bounds are undefined for it",
            )
