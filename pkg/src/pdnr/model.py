"""Physical parameters, the Gaussian pulse envelope and the rotating-frame Hamiltonian.

All rates are in units of the damping rate gamma and times in units of 1/gamma.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Protocol, Union

import numpy as np

from .errors import InvalidArgumentError
from .fock import make_annihilation, make_kerr, make_number

AUTO = "auto"
# Pulses whose centres lie further than this many durations away are dropped;
# the neglected Gaussian tail is below exp(-64).
AUTO_CUTOFF_WIDTHS = 8.0


class Envelope(Protocol):
    """Anything that can serve as the drive envelope f(t)."""

    def __call__(self, t): ...

    def peak(self) -> float: ...


@dataclass(frozen=True)
class ContinuousWave:
    """Monochromatic driving, f(t) = 1."""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        return float(out) if out.ndim == 0 else out

    def peak(self):
        return 1.0

    def describe(self):
        return {"pulse": "cw"}


@dataclass(frozen=True)
class PulseTrain:
    """Train of Gaussian pulses ``sum_n exp(-(t - t0 - n tau)^2 / T^2)``, n >= 0.

    Parameters
    ----------
    t0 : float
        Centre of the first pulse.
    T : float
        Pulse duration.
    tau : float
        Separation between pulse centres.
    n_pulses : int or "auto"
        Number of pulses in the train.  ``"auto"`` means an unbounded train,
        evaluated with only the terms within eight durations of ``t``.
    """

    T: float
    tau: float
    t0: float | None = None
    n_pulses: Union[int, str] = AUTO

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidArgumentError(f"pulse duration T must be positive, got {self.T}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise InvalidArgumentError(f"pulse separation tau must be positive, got {self.tau}")
        if self.t0 is None:
            object.__setattr__(self, "t0", 3.0 * self.T)
        if self.n_pulses != AUTO:
            if not isinstance(self.n_pulses, (int, np.integer)) or self.n_pulses < 1:
                raise InvalidArgumentError("n_pulses must be a positive integer or 'auto'")

    def __call__(self, t):
        return pulse_envelope(t, self)

    def peak(self):
        # upper bound on f(t), used for step-size selection; the factor absorbs rounding
        total = 1.0 + sum(2.0 * math.exp(-((k * self.tau / self.T) ** 2)) for k in range(1, 6))
        return total * (1.0 + 1e-12)

    def describe(self):
        return {"pulse": "gaussian", "t0": self.t0, "T": self.T, "tau": self.tau,
                "n_pulses": self.n_pulses}


def pulse_envelope(t, train):
    """Evaluate the Gaussian pulse train at ``t`` (scalar or array).

    Each time point sums the pulses centred within eight durations of it, plus
    always the nearest pulse.
    """
    if isinstance(t, (float, int)) and not isinstance(t, bool):
        return _envelope_scalar(float(t), train)
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise InvalidArgumentError("envelope time must be finite")
    flat = np.atleast_1d(t_arr).ravel()
    last = math.inf if train.n_pulses == AUTO else train.n_pulses - 1
    span = AUTO_CUTOFF_WIDTHS * train.T
    nearest = np.clip(np.round((flat - train.t0) / train.tau), 0, last)
    k_lo = int(max(0.0, min(np.floor((flat.min() - train.t0 - span) / train.tau), nearest.min())))
    k_hi = int(min(last, max(np.ceil((flat.max() - train.t0 + span) / train.tau), nearest.max())))
    vals = np.zeros(flat.shape)
    for k in range(k_lo, k_hi + 1):
        d = (flat - (train.t0 + k * train.tau)) / train.T
        keep = (np.abs(d) <= AUTO_CUTOFF_WIDTHS) | (nearest == k)
        vals = vals + np.where(keep, np.exp(-d * d), 0.0)
    if t_arr.ndim == 0:
        return float(vals[0])
    return vals.reshape(t_arr.shape)


def _envelope_scalar(t, train):
    if not math.isfinite(t):
        raise InvalidArgumentError("envelope time must be finite")
    x = (t - train.t0) / train.tau
    last = math.inf if train.n_pulses == AUTO else train.n_pulses - 1
    nearest = min(max(round(x), 0), last)
    reach = AUTO_CUTOFF_WIDTHS * train.T / train.tau
    k_lo = int(max(0, min(math.floor(x - reach), nearest)))
    k_hi = int(min(last, max(math.ceil(x + reach), nearest)))
    total = 0.0
    for k in range(k_lo, k_hi + 1):
        d = (t - (train.t0 + k * train.tau)) / train.T
        if abs(d) <= AUTO_CUTOFF_WIDTHS or k == nearest:
            total += math.exp(-d * d)
    return total


@dataclass(frozen=True)
class ModelParams:
    """Parameter set of the parametrically driven Kerr resonator.

    ``drive_intensity`` is ``|Omega|^2 / gamma^2`` and ``drive_phase`` the phase
    Phi of ``Omega = sqrt(I) exp(i Phi) gamma``.
    """

    delta: float
    chi: float
    drive_intensity: float
    drive_phase: float = 0.0
    gamma: float = 1.0
    n_bath: float = 0.0
    dim: int = 40
    pulse: Envelope = field(default_factory=ContinuousWave)

    def __post_init__(self):
        for name in ("delta", "chi", "drive_intensity", "drive_phase", "gamma", "n_bath"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise InvalidArgumentError(f"{name} must be a finite real number, got {v!r}")
        if self.gamma <= 0:
            raise InvalidArgumentError("gamma must be positive")
        if self.n_bath < 0:
            raise InvalidArgumentError("n_bath must be non-negative")
        if self.drive_intensity < 0:
            raise InvalidArgumentError("drive_intensity must be non-negative")

    @classmethod
    def from_omega(cls, delta, chi, omega, **kwargs):
        """Build from the drive amplitude |Omega|/gamma as quoted in figure captions."""
        return cls(delta=delta, chi=chi, drive_intensity=float(omega) ** 2, **kwargs)

    @property
    def omega(self):
        """Complex drive amplitude ``sqrt(I) exp(i Phi) gamma``."""
        return math.sqrt(self.drive_intensity) * np.exp(1j * self.drive_phase) * self.gamma

    @property
    def pulsed(self):
        return isinstance(self.pulse, PulseTrain)

    def envelope(self, t):
        return self.pulse(t)

    def as_dict(self):
        d = {
            "delta": self.delta, "chi": self.chi, "drive_intensity": self.drive_intensity,
            "drive_phase": self.drive_phase, "gamma": self.gamma, "n_bath": self.n_bath,
            "dim": self.dim,
        }
        d.update(self.pulse.describe() if hasattr(self.pulse, "describe") else {"pulse": repr(self.pulse)})
        return d


def static_hamiltonian(params):
    """``Delta a^dag a + chi (a^dag a)^2``."""
    return params.delta * make_number(params.dim) + params.chi * make_kerr(params.dim)


def parametric_operator(params):
    """``Omega a^dag^2 + Omega* a^2``; multiplied by f(t) in the Hamiltonian."""
    a = make_annihilation(params.dim)
    a2 = a @ a
    om = params.omega
    return om * a2.conj().T + np.conj(om) * a2


def hamiltonian_at(t, params):
    """Rotating-frame Hamiltonian ``H0 + H_int`` at time ``t``."""
    return static_hamiltonian(params) + params.envelope(t) * parametric_operator(params)


REGULAR = "regular"
BISTABLE = "bistable-prone"
CHAOTIC = "chaotic-candidate"


@dataclass(frozen=True)
class RegimeReport:
    label: str
    checks: dict
    boundary_warning: bool = False
    heuristic: bool = True

    def line(self):
        parts = [self.label]
        for k, v in self.checks.items():
            parts.append(f"{k}={v}")
        if self.boundary_warning:
            parts.append("warning=detuning-zero-boundary")
        return " ".join(parts)


def classify_regime(params):
    """Label the operating regime from the sign of the detuning and the pulse geometry.

    ``chaotic-candidate`` requires negative detuning, ``|Omega|/|Delta|`` within
    a factor of two of unity and ``pi/2 <= tau/T <= 2 pi``.  The factor-of-two
    band is a heuristic.
    """
    delta = params.delta / params.gamma
    om = abs(params.omega) / params.gamma
    checks = {"delta": delta, "delta_negative": delta < 0}
    if delta != 0:
        ratio = om / abs(delta)
        checks["omega_over_abs_delta"] = ratio
        checks["omega_band_ok"] = 0.5 <= ratio <= 2.0
    if params.pulsed:
        duty = params.pulse.tau / params.pulse.T
        checks["tau_over_T"] = duty
        checks["tau_band_ok"] = math.pi / 2 <= duty <= 2 * math.pi
    if delta == 0:
        warnings.warn("zero detuning sits on the regime boundary; reported as regular", stacklevel=2)
        return RegimeReport(REGULAR, checks, boundary_warning=True)
    if delta > 0:
        return RegimeReport(REGULAR, checks)
    if params.pulsed and checks["omega_band_ok"] and checks["tau_band_ok"]:
        return RegimeReport(CHAOTIC, checks)
    return RegimeReport(BISTABLE, checks)
