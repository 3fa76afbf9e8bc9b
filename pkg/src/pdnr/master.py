"""Deterministic integration of the Lindblad master equation in the rotating frame.

The generator is

    d rho/dt = -i [H(t), rho] + sum_i (L_i rho L_i^dag - {L_i^dag L_i, rho}/2)

with ``L_1 = sqrt((N+1) gamma) a`` and ``L_2 = sqrt(N gamma) a^dag``.  All
operators involved are diagonal or banded in the Fock basis, so the right-hand
side is evaluated with O(D^2) slicing instead of dense matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, InvalidDimensionError, PositivityError, TruncationError
from .fock import mean_number
from .model import parametric_operator, static_hamiltonian

DEFAULT_STEP = 1e-3
# dt * (spectral width of the Hamiltonian) kept below this; RK4 is stable up to 2*sqrt(2)
RK4_STABILITY_MARGIN = 2.0
TOP_LEVELS = 5


class Liouvillian:
    """Precomputed banded form of the master-equation generator for one parameter set."""

    def __init__(self, params):
        self.params = params
        dim = params.dim
        if dim < 3:
            raise InvalidDimensionError("master equation needs dim >= 3")
        self.dim = dim
        n = np.arange(dim, dtype=float)
        g = params.gamma
        self.decay = (params.n_bath + 1.0) * g
        self.pump = params.n_bath * g
        aad = np.where(n < dim - 1, n + 1.0, 0.0)  # diagonal of a a^dag in the truncated space
        self.h0 = params.delta * n + params.chi * n * n
        self.loss = self.decay * n + self.pump * aad
        self.diag = (-1j * self.h0 - 0.5 * self.loss)[:, None]
        om = params.omega
        # (a^dag^2 rho)[m] = sqrt(m (m-1)) rho[m-2];  (a^2 rho)[m] = sqrt((m+1)(m+2)) rho[m+2]
        self.up2 = (-1j * om * np.sqrt(n[2:] * (n[2:] - 1.0)))[:, None]
        self.down2 = (-1j * np.conj(om) * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0)))[:, None]
        s = np.sqrt(n[1:])
        self.jump_down = self.decay * np.outer(s, s)  # a rho a^dag
        self.jump_up = self.pump * np.outer(s, s)  # a^dag rho a

    def _half(self, rho, f):
        """``-i H_eff rho`` with ``H_eff = H(t) - (i/2) sum L^dag L``."""
        out = self.diag * rho
        if f != 0.0:
            out[2:] += f * (self.up2 * rho[:-2])
            out[:-2] += f * (self.down2 * rho[2:])
        return out

    def _jumps(self, rho):
        out = np.zeros_like(rho)
        out[:-1, :-1] = self.jump_down * rho[1:, 1:]
        if self.pump != 0.0:
            out[1:, 1:] += self.jump_up * rho[:-1, :-1]
        return out

    def envelope(self, t):
        return float(self.params.envelope(t))

    def rhs(self, rho, t, hermitian=False):
        f = self.envelope(t)
        x = self._half(rho, f)
        if hermitian:
            y = x
        else:
            y = self._half(rho.conj().T, f)
        return x + y.conj().T + self._jumps(rho)


def lindblad_rhs(rho, t, params):
    """Right-hand side of the master equation at time ``t``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (params.dim, params.dim):
        raise InvalidDimensionError(
            f"density matrix shape {rho.shape} does not match dim={params.dim}"
        )
    return Liouvillian(params).rhs(rho, t)


def spectral_width(params):
    """Width of the spectrum of H at the envelope peak plus the largest loss rate."""
    peak = params.pulse.peak()
    h = static_hamiltonian(params) + peak * parametric_operator(params)
    ev = np.linalg.eigvalsh(h)
    n = params.dim - 1
    loss = (params.n_bath + 1.0) * params.gamma * n + params.n_bath * params.gamma * (n + 1)
    return float(ev[-1] - ev[0]) + loss


def auto_step(params, max_step=DEFAULT_STEP):
    """Largest step ``max_step / 2**k`` keeping RK4 inside its stability region."""
    width = spectral_width(params)
    step = max_step
    while step * width > RK4_STABILITY_MARGIN:
        step /= 2.0
    return step


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray | None
    mean_n: np.ndarray
    step_size: float
    method: str = "rk4"
    min_eigenvalues: np.ndarray = field(default=None, repr=False)
    top_population: np.ndarray = field(default=None, repr=False)
    final_state: np.ndarray = field(default=None, repr=False)


def _validate_grid(t_grid, t_start):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise InvalidArgumentError("sample schedule must be a non-empty 1-D sequence of times")
    if not np.all(np.isfinite(t_grid)):
        raise InvalidArgumentError("sample times must be finite")
    if np.any(np.diff(t_grid) <= 0):
        raise InvalidArgumentError("sample times must be strictly increasing")
    if t_grid[0] < t_start:
        raise InvalidArgumentError("sample times must not precede the start time")
    return t_grid


def evolve_master(rho0, t_grid, params, step=None, t_start=0.0, check_truncation=True,
                  truncation_tol=1e-6, positivity_tol=1e-6, store_states=True):
    """Integrate the master equation with fixed-step classical RK4.

    Between consecutive sample times the interval is split into equal substeps
    no longer than ``step``.  ``step=None`` picks the largest power-of-two
    fraction of 1e-3 that keeps RK4 stable for this Hamiltonian.  The state is
    re-symmetrised after every step.  Positivity and truncation are checked at
    the sample times.

    Raises
    ------
    PositivityError
        smallest eigenvalue at a sample time below ``-positivity_tol``.
    TruncationError
        population of the top five levels reaches ``truncation_tol``
        (only when ``check_truncation`` is set).
    """
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (params.dim, params.dim):
        raise InvalidDimensionError(f"rho0 shape {rho.shape} does not match dim={params.dim}")
    t_grid = _validate_grid(t_grid, t_start)
    if step is None:
        step = auto_step(params)
    if not step > 0:
        raise InvalidArgumentError("step must be positive")

    L = Liouvillian(params)
    rho = 0.5 * (rho + rho.conj().T)
    nt = t_grid.size
    states = np.empty((nt, params.dim, params.dim), dtype=complex) if store_states else None
    mean_n = np.empty(nt)
    min_ev = np.empty(nt)
    top = np.empty(nt)
    t = float(t_start)
    for i, t_target in enumerate(t_grid):
        span = t_target - t
        nsub = int(math.ceil(span / step - 1e-9)) if span > 0 else 0
        if nsub:
            h = span / nsub
            for j in range(nsub):
                tj = t + j * h
                k1 = L.rhs(rho, tj, hermitian=True)
                k2 = L.rhs(rho + (0.5 * h) * k1, tj + 0.5 * h, hermitian=True)
                k3 = L.rhs(rho + (0.5 * h) * k2, tj + 0.5 * h, hermitian=True)
                k4 = L.rhs(rho + h * k3, tj + h, hermitian=True)
                rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                rho = 0.5 * (rho + rho.conj().T)
        t = float(t_target)
        ev = np.linalg.eigvalsh(rho)
        min_ev[i] = ev[0]
        pops = np.real(np.diagonal(rho))
        top[i] = float(np.sum(pops[-TOP_LEVELS:]))
        if ev[0] < -positivity_tol:
            raise PositivityError(
                f"eigenvalue {ev[0]:.3e} at t={t:.6g}: step {step:g} too large or dim {params.dim} too small"
            )
        if check_truncation and top[i] >= truncation_tol:
            raise TruncationError(
                f"top {TOP_LEVELS} levels hold population {top[i]:.3e} at t={t:.6g}; raise dim above {params.dim}"
            )
        mean_n[i] = mean_number(rho)
        if store_states:
            states[i] = rho
    return EvolutionResult(times=t_grid.copy(), states=states, mean_n=mean_n, step_size=step,
                           min_eigenvalues=min_ev, top_population=top, final_state=rho)


def number_distribution(rho):
    """Photon-number distribution ``P(n) = Re rho_nn``."""
    return np.real(np.diagonal(np.asarray(rho))).copy()


def number_std(rho):
    p = number_distribution(rho)
    n = np.arange(p.size)
    mean = np.dot(n, p) / p.sum()
    return float(math.sqrt(max(np.dot((n - mean) ** 2, p) / p.sum(), 0.0)))
