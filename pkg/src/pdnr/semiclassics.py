"""Mean-field amplitude equation, cw steady states and the stroboscopic map.

The amplitude obeys

    d alpha/dt = -i (Delta + chi + 2 chi |alpha|^2) alpha - i f(t) Omega alpha* - gamma alpha.

The parametric term carries the same sign as in the mean-field limit of the
quantum Hamiltonian, which is also the sign for which the locked phases obey
``sin(Phi - 2 phi) = J^(-1/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidArgumentError
from .model import ContinuousWave

DIVERGENCE_BOUND = 1e6
RESIDUAL_TOL = 1e-8


def semiclassical_rhs(alpha, t, params):
    """Time derivative of the classical amplitude (scalar or array ``alpha``)."""
    f = params.envelope(t)
    shift = params.delta + params.chi + 2.0 * params.chi * (alpha.real**2 + alpha.imag**2)
    return -1j * shift * alpha - 1j * f * params.omega * np.conj(alpha) - params.gamma * alpha


@dataclass
class ClassicalTrace:
    times: np.ndarray
    alpha: np.ndarray
    step: float

    @property
    def n(self):
        return np.abs(self.alpha) ** 2

    @property
    def phase(self):
        return np.angle(self.alpha)


def _rk4(alpha, t, h, params):
    k1 = semiclassical_rhs(alpha, t, params)
    k2 = semiclassical_rhs(alpha + 0.5 * h * k1, t + 0.5 * h, params)
    k3 = semiclassical_rhs(alpha + 0.5 * h * k2, t + 0.5 * h, params)
    k4 = semiclassical_rhs(alpha + h * k3, t + h, params)
    return alpha + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_classical(alpha0, t_grid, params, step=1e-3, t_start=0.0):
    """Fixed-step RK4 integration sampled at ``t_grid``.

    ``alpha0`` may be an array of initial amplitudes integrated side by side.

    Raises
    ------
    DivergenceError
        if any amplitude exceeds 1e6 in modulus.
    """
    if not step > 0:
        raise InvalidArgumentError("step must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0) or t_grid[0] < t_start:
        raise InvalidArgumentError("t_grid must be a non-empty increasing sequence after t_start")
    alpha = np.array(alpha0, dtype=complex)
    out = np.empty(t_grid.shape + alpha.shape, dtype=complex)
    t = float(t_start)
    for i, target in enumerate(t_grid):
        span = target - t
        nsub = int(math.ceil(span / step - 1e-9)) if span > 0 else 0
        if nsub:
            h = span / nsub
            for j in range(nsub):
                alpha = _rk4(alpha, t + j * h, h, params)
            if not np.all(np.abs(alpha) <= DIVERGENCE_BOUND):
                raise DivergenceError(f"|alpha| exceeded {DIVERGENCE_BOUND:g} before t={target:.6g}")
        t = float(target)
        out[i] = alpha
    return ClassicalTrace(times=t_grid.copy(), alpha=out, step=step)


def drive_parameter(params):
    """J = |Omega|^2 / gamma^2."""
    return abs(params.omega) ** 2 / params.gamma**2


def threshold_J(params):
    """Drive parameter at which the origin loses stability under cw driving.

    Linearising about ``alpha = 0`` gives growth rate
    ``-gamma + sqrt(|Omega|^2 - (Delta + chi)^2)``, hence
    ``J_th = 1 + ((Delta + chi)/gamma)^2``; for ``chi -> 0`` this is
    :func:`kerrless_threshold_J`.
    """
    return 1.0 + ((params.delta + params.chi) / params.gamma) ** 2


def kerrless_threshold_J(params):
    """Large-amplitude threshold ``1 + (Delta/gamma)^2`` (Kerr shift neglected)."""
    return 1.0 + (params.delta / params.gamma) ** 2


def closed_form_n(params):
    """Closed-form large-n intensity ``(gamma/2chi) (Delta/gamma + sqrt(J - 1))``."""
    J = drive_parameter(params)
    if J <= 1 or params.chi == 0:
        return float("nan")
    return params.gamma / (2.0 * params.chi) * (params.delta / params.gamma + math.sqrt(J - 1.0))


@dataclass
class SteadyStateSolution:
    n: float
    phases: tuple
    J: float
    branch: str
    residuals: tuple
    stable: bool

    @property
    def amplitudes(self):
        r = math.sqrt(self.n)
        return tuple(r * np.exp(1j * p) for p in self.phases)


@dataclass
class SteadyStateReport:
    solutions: list
    J: float
    J_threshold: float
    below_threshold: bool = False
    inconsistent: bool = False
    origin_stable: bool = True
    closed_form_n: float = float("nan")
    rejected: list = field(default_factory=list)

    @property
    def bistable(self):
        stable_states = sum(1 for s in self.solutions if s.stable) + int(self.origin_stable)
        return stable_states >= 2


def _linear_stability(alpha, params):
    """True if all eigenvalues of the cw linearisation around ``alpha`` have negative real part."""
    n = abs(alpha) ** 2
    a_coef = -1j * (params.delta + params.chi + 4.0 * params.chi * n) - params.gamma
    b_coef = -2j * params.chi * alpha**2 - 1j * params.omega
    jac = np.array([[a_coef, b_coef], [np.conj(b_coef), np.conj(a_coef)]])
    return bool(np.max(np.linalg.eigvals(jac).real) < 0)


def steady_states(params):
    """Nonzero cw fixed points of the amplitude equation, each with its phase pair.

    Candidates come from both signs of the effective detuning
    ``Delta + chi + 2 chi n = +-gamma sqrt(J - 1)``; only candidates with
    ``n > 0`` whose residual is below 1e-8 are returned.
    """
    if not isinstance(params.pulse, ContinuousWave):
        raise InvalidArgumentError("steady states are defined for cw driving only")
    if params.chi == 0:
        raise InvalidArgumentError("steady states need a non-zero Kerr coefficient")
    J = drive_parameter(params)
    report = SteadyStateReport(solutions=[], J=J, J_threshold=threshold_J(params),
                               closed_form_n=closed_form_n(params))
    report.origin_stable = _linear_stability(0j, params)
    if J <= 1.0:
        report.below_threshold = True
        return report
    g = params.gamma
    root = math.sqrt(J - 1.0)
    phi_drive = params.drive_phase
    for sign, branch in ((1.0, "upper"), (-1.0, "lower")):
        n = (sign * g * root - params.delta - params.chi) / (2.0 * params.chi)
        if not n > 0:
            continue
        # Phi - 2 phi = psi with sin(psi) = J^-1/2, cos(psi) = -sign sqrt(1 - 1/J)
        psi = math.atan2(1.0 / math.sqrt(J), -sign * root / math.sqrt(J))
        phi = ((phi_drive - psi) / 2.0) % (2.0 * math.pi)
        phases = (phi, (phi + math.pi) % (2.0 * math.pi))
        amps = [math.sqrt(n) * np.exp(1j * p) for p in phases]
        res = tuple(float(abs(semiclassical_rhs(a, 0.0, params))) for a in amps)
        sol = SteadyStateSolution(n=n, phases=phases, J=J, branch=branch, residuals=res,
                                  stable=_linear_stability(amps[0], params))
        if max(res) <= RESIDUAL_TOL:
            report.solutions.append(sol)
        else:
            report.rejected.append(sol)
    if not report.solutions and report.rejected:
        report.inconsistent = True
    return report


def stroboscopic_map(alpha0, params, n_periods, step=1e-3):
    """Amplitude sampled midway between consecutive pulses, once per period.

    The k-th point is taken at ``t0 + (k + 1/2) tau``, k = 0 .. n_periods-1.
    """
    if not params.pulsed:
        raise InvalidArgumentError("stroboscopic map needs a pulsed drive")
    if n_periods < 1:
        raise InvalidArgumentError("n_periods must be >= 1")
    train = params.pulse
    times = train.t0 + (np.arange(n_periods) + 0.5) * train.tau
    return evolve_classical(alpha0, times, params, step=step).alpha
