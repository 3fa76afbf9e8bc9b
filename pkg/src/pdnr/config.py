"""Flat ``key = value`` run configurations and the figure presets.

Numeric values may be simple arithmetic expressions over numbers and ``pi``
(``tau = 4*pi/5``), so caption parameters can be written as printed.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError
from .model import AUTO, ContinuousWave, ModelParams, PulseTrain

METHODS = ("master", "qsd", "semiclassical")
INSTANTS = ("at_min_n", "at_max_n", "at_mid_n", "at_time")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi}


def eval_number(text, key=None):
    """Evaluate a numeric literal or arithmetic expression over numbers and ``pi``."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as a number", key) from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ConfigError(f"{key}: unsupported expression {text!r}", key)

    value = ev(tree)
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite", key)
    return value


@dataclass
class RunConfig:
    """Every knob of a run.  Rates in units of gamma, times in units of 1/gamma."""

    label: str = ""
    method: str = "master"
    delta: float = 0.0
    chi: float = 0.0
    omega: float | None = None
    drive_intensity: float | None = None
    drive_phase: float = 0.0
    gamma: float = 1.0
    n_bath: float = 0.0
    pulse: str = "gaussian"
    T: float | None = None
    tau: float | None = None
    t0: float | None = None
    n_pulses: object = AUTO
    dim: int = 40
    step: object = AUTO
    n_traj: int = 2000
    seed: int = 0
    chunk_size: int = 128
    scheme: str = "split"
    t_end: float | None = None
    sample_dt: float | None = None
    sample_times: tuple | None = None
    check_truncation: bool = True
    instant: str = "at_max_n"
    instant_time: float | None = None
    grid_span: float = 6.0
    grid_points: int = 101
    hump_threshold: float = 0.2
    alpha0_re: float = 0.1
    alpha0_im: float = 0.05
    strobe_periods: int = 200
    classical_step: float = 1e-3

    # -- construction -------------------------------------------------------

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}", key)
            kwargs[key] = _coerce(key, raw)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, text):
        return cls.from_mapping(parse_flat(text))

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())

    def updated(self, **changes):
        data = self.to_mapping()
        data.update(changes)
        return RunConfig.from_mapping(data)

    # -- validation ---------------------------------------------------------

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}", "method")
        if self.omega is not None and self.drive_intensity is not None:
            raise ConfigError("give either omega or drive_intensity, not both", "omega")
        if self.omega is not None and self.omega < 0:
            raise ConfigError("omega is the drive magnitude and must be >= 0", "omega")
        if self.drive_intensity is not None and self.drive_intensity < 0:
            raise ConfigError("drive_intensity must be >= 0", "drive_intensity")
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive", "gamma")
        if self.n_bath < 0:
            raise ConfigError("n_bath must be non-negative", "n_bath")
        if self.pulse not in ("gaussian", "cw"):
            raise ConfigError("pulse must be 'gaussian' or 'cw'", "pulse")
        if self.pulse == "gaussian":
            for key in ("T", "tau"):
                v = getattr(self, key)
                if v is None or v <= 0:
                    raise ConfigError(f"{key} must be given and positive for a gaussian pulse train", key)
            if self.n_pulses != AUTO and (not isinstance(self.n_pulses, int) or self.n_pulses < 1):
                raise ConfigError("n_pulses must be 'auto' or a positive integer", "n_pulses")
        if not isinstance(self.dim, int) or self.dim < 3:
            raise ConfigError("dim must be an integer >= 3", "dim")
        if self.step != AUTO and not (isinstance(self.step, (int, float)) and self.step > 0):
            raise ConfigError("step must be 'auto' or a positive number", "step")
        if not isinstance(self.n_traj, int) or self.n_traj < 1:
            raise ConfigError("n_traj must be a positive integer", "n_traj")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
        if not isinstance(self.chunk_size, int) or self.chunk_size < 1:
            raise ConfigError("chunk_size must be a positive integer", "chunk_size")
        if self.scheme not in ("split", "euler"):
            raise ConfigError("scheme must be 'split' or 'euler'", "scheme")
        if self.instant not in INSTANTS:
            raise ConfigError(f"instant must be one of {INSTANTS}", "instant")
        if self.instant == "at_time" and self.instant_time is None:
            raise ConfigError("instant_time is required with instant = at_time", "instant_time")
        if not 0 < self.hump_threshold < 1:
            raise ConfigError("hump_threshold must lie in (0, 1)", "hump_threshold")
        if self.grid_points < 3 or self.grid_span <= 0:
            raise ConfigError("grid needs grid_points >= 3 and grid_span > 0", "grid_points")
        if not isinstance(self.strobe_periods, int) or self.strobe_periods < 1:
            raise ConfigError("strobe_periods must be a positive integer", "strobe_periods")
        if self.classical_step <= 0:
            raise ConfigError("classical_step must be positive", "classical_step")
        self.sample_schedule()  # raises on an empty schedule

    # -- derived objects ----------------------------------------------------

    def sample_schedule(self):
        """Sample times: explicit ``sample_times`` or ``sample_dt`` multiples up to ``t_end``."""
        if self.sample_times is not None:
            times = np.asarray(self.sample_times, dtype=float)
            if times.size == 0:
                raise ConfigError("sample_times is empty", "sample_times")
            if np.any(np.diff(times) <= 0) or times[0] < 0:
                raise ConfigError("sample_times must be non-negative and strictly increasing", "sample_times")
            return times
        if self.t_end is None or self.sample_dt is None:
            raise ConfigError("sample schedule is empty: give sample_times or t_end and sample_dt", "t_end")
        if self.t_end <= 0 or self.sample_dt <= 0:
            raise ConfigError("sample schedule is empty: t_end and sample_dt must be positive", "t_end")
        count = int(math.floor(self.t_end / self.sample_dt + 1e-9))
        if count < 1:
            raise ConfigError("sample schedule is empty: sample_dt exceeds t_end", "sample_dt")
        return np.arange(1, count + 1) * self.sample_dt

    def envelope(self):
        if self.pulse == "cw":
            return ContinuousWave()
        return PulseTrain(T=float(self.T), tau=float(self.tau),
                          t0=None if self.t0 is None else float(self.t0), n_pulses=self.n_pulses)

    def model_params(self, cw=False):
        if self.drive_intensity is not None:
            intensity = float(self.drive_intensity)
        else:
            intensity = float(self.omega or 0.0) ** 2
        return ModelParams(delta=float(self.delta), chi=float(self.chi), drive_intensity=intensity,
                           drive_phase=float(self.drive_phase), gamma=float(self.gamma),
                           n_bath=float(self.n_bath), dim=int(self.dim),
                           pulse=ContinuousWave() if cw else self.envelope())

    def period(self):
        return float(self.tau) if self.pulse == "gaussian" else None

    # -- echo ---------------------------------------------------------------

    def to_mapping(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {_render(v)}")
        return "\n".join(lines) + "\n"


_STRING_KEYS = {"label", "method", "pulse", "scheme", "instant"}
_INT_KEYS = {"dim", "n_traj", "seed", "chunk_size", "grid_points", "strobe_periods"}
_BOOL_KEYS = {"check_truncation"}
_AUTO_KEYS = {"n_pulses": int, "step": float}


def _coerce(key, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if key in _STRING_KEYS:
        return text
    if key in _BOOL_KEYS:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}", key)
    if key in _AUTO_KEYS and text == AUTO:
        return AUTO
    if key == "sample_times":
        parts = [p for p in text.split(",") if p.strip()]
        return tuple(float(eval_number(p, key)) for p in parts)
    value = eval_number(text, key)
    if key in _INT_KEYS or _AUTO_KEYS.get(key) is int:
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"{key}: expected an integer, got {text!r}", key)
            value = int(value)
        return value
    return float(value)


def _render(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def parse_flat(text):
    """Parse ``key = value`` lines; ``#`` starts a comment.  Duplicate keys are rejected."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'", key or None)
        if key in out:
            raise ConfigError(f"duplicate config key {key!r}", key)
        out[key] = value.strip()
    return out


# Caption parameters, as printed.  Times end after eight periods of the
# shortest train so the last period is well past the transient.  The
# truncation and grid lines are not caption values: negative detunings reach
# <n> near 27 and need dim = 80 to keep the top five levels below 1e-6.
_FIG12 = """
chi = 1
omega = 20
T = 0.5
tau = 4*pi/5
t_end = 32*pi/5
sample_dt = 4*pi/500
"""

_FIG4AB = """
delta = -7.5
chi = 0.5
omega = 10
T = 0.25
tau = 2*pi/5
t_end = 8*pi
sample_dt = 2*pi/500
"""

_SMALL = "dim = 40\n"
_LARGE = "dim = 80\ngrid_span = 10\ngrid_points = 161\n"

_PRESET_TEXT = {
    "fig1a": "label = fig1a\ndelta = -20\n" + _FIG12 + _LARGE,
    "fig1b": "label = fig1b\ndelta = 20\n" + _FIG12 + _SMALL,
    "fig2a": "label = fig2a\ndelta = -20\ninstant = at_min_n\n" + _FIG12 + _LARGE,
    "fig2b": "label = fig2b\ndelta = -20\ninstant = at_max_n\n" + _FIG12 + _LARGE,
    "fig2c": "label = fig2c\ndelta = 20\ninstant = at_min_n\n" + _FIG12 + _SMALL,
    "fig2d": "label = fig2d\ndelta = 20\ninstant = at_max_n\n" + _FIG12 + _SMALL,
    "fig3a": "label = fig3a\ndelta = 20\ninstant = at_mid_n\n" + _FIG12 + _SMALL,
    "fig3b": "label = fig3b\ndelta = -20\ninstant = at_mid_n\n" + _FIG12 + _LARGE,
    "fig4a": "label = fig4a\ninstant = at_min_n\n" + _FIG4AB + _LARGE,
    "fig4b": "label = fig4b\ninstant = at_max_n\n" + _FIG4AB + _LARGE,
    "fig4c": """label = fig4c
delta = 15
chi = 1
omega = 10
T = 0.5
tau = 2*pi
t_end = 8*pi
sample_dt = 2*pi/500
instant = at_max_n
""" + _SMALL,
}

PRESET_GROUPS = {
    "fig3": ("fig3a", "fig3b"),
    "fig4ab": ("fig4a", "fig4b"),
}

PRESET_NOTES = {
    "fig1a": "excitation number, negative detuning (chaotic candidate)",
    "fig1b": "excitation number, positive detuning (regular)",
    "fig2a": "Wigner at <n> minimum, negative detuning",
    "fig2b": "Wigner at <n> maximum, negative detuning",
    "fig2c": "Wigner at <n> minimum, positive detuning",
    "fig2d": "Wigner at <n> maximum, positive detuning",
    "fig3a": "Wigner between extrema, caption (a) detuning +20",
    "fig3b": "Wigner between extrema, caption (b) detuning -20",
    "fig4a": "Wigner at <n> minimum, Delta=-7.5 chi=0.5 Omega=10",
    "fig4b": "Wigner at <n> maximum, Delta=-7.5 chi=0.5 Omega=10",
    "fig4c": "Wigner at <n> maximum, Delta=15 chi=1 Omega=10 tau=2pi",
    "fig3": "group: fig3a fig3b",
    "fig4ab": "group: fig4a fig4b",
}


def preset_names():
    return sorted(_PRESET_TEXT) + sorted(PRESET_GROUPS)


def preset_members(name):
    if name in PRESET_GROUPS:
        return PRESET_GROUPS[name]
    if name in _PRESET_TEXT:
        return (name,)
    raise ConfigError(f"unknown preset {name!r}", "preset")


def load_preset(name):
    if name not in _PRESET_TEXT:
        raise ConfigError(f"unknown preset {name!r} (groups expand via preset_members)", "preset")
    return RunConfig.from_text(_PRESET_TEXT[name])


def preset_text(name):
    return _PRESET_TEXT[name]
