"""Quantum state diffusion trajectories and their ensemble average.

A trajectory obeys the norm-preserving QSD equation

    d|psi> = -i H |psi> dt
             + sum_i (<L_i^dag> L_i - L_i^dag L_i / 2 - <L_i^dag><L_i> / 2) |psi> dt
             + sum_i (L_i - <L_i>) |psi> dxi_i

with complex Wiener increments ``dxi = (g1 + i g2) sqrt(dt/2)``.  Averaging the
projectors ``|psi><psi|`` over the ensemble recovers the master-equation
density matrix.

Two step schemes are provided:

``"euler"``
    plain Euler-Maruyama on the full equation followed by renormalisation.
``"split"``
    the linear part ``-i H - sum L^dag L / 2`` is propagated exactly with a
    matrix exponential (H taken at the step midpoint); the state-dependent
    drift and the noise are then applied as an Euler-Maruyama increment with
    expectations from the pre-step state.  The Kerr spectrum makes the plain
    scheme unstable at useful step sizes, so ensembles default to this one.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import InvalidArgumentError, InvalidDimensionError, NormCollapseError
from .model import hamiltonian_at, parametric_operator, static_hamiltonian

NORM_FLOOR = 1e-8
WORKERS_ENV = "PDNR_WORKERS"
DEFAULT_CHUNK = 128
BLOCK_STEPS = 512


@dataclass(frozen=True)
class QsdConfig:
    """Numerical settings of a trajectory ensemble.

    ``chunk_size`` fixes how trajectories are batched; it is part of the
    numerical definition of a run, whereas ``workers`` only changes wall time.
    """

    n_traj: int
    sample_times: tuple
    step: float = 5e-4
    seed: int = 0
    scheme: str = "split"
    chunk_size: int = DEFAULT_CHUNK
    workers: int | None = None
    zero_noise: bool = False
    t_start: float = 0.0

    def __post_init__(self):
        if not isinstance(self.n_traj, (int, np.integer)) or self.n_traj < 1:
            raise InvalidArgumentError(f"n_traj must be a positive integer, got {self.n_traj!r}")
        if not self.step > 0:
            raise InvalidArgumentError("step must be positive")
        if self.scheme not in ("euler", "split"):
            raise InvalidArgumentError(f"unknown QSD scheme {self.scheme!r}")
        if self.chunk_size < 1:
            raise InvalidArgumentError("chunk_size must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")
        times = np.asarray(self.sample_times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise InvalidArgumentError("sample_times must be a non-empty sequence")
        if np.any(np.diff(times) <= 0) or times[0] < self.t_start:
            raise InvalidArgumentError("sample_times must be strictly increasing and not before t_start")
        object.__setattr__(self, "sample_times", tuple(float(x) for x in times))


@dataclass
class TrajectoryEnsembleResult:
    sample_times: np.ndarray
    density_estimates: np.ndarray
    mean_n: np.ndarray
    stderr_n: np.ndarray
    seed: int
    n_traj: int
    step: float
    scheme: str
    final_states: np.ndarray | None = field(default=None, repr=False)


def _channels(params):
    """Lindblad channels as (rate, kind) with kind 'a' or 'ad'; empty rates skipped."""
    out = []
    if params.gamma * (params.n_bath + 1.0) > 0:
        out.append((params.gamma * (params.n_bath + 1.0), "a"))
    if params.gamma * params.n_bath > 0:
        out.append((params.gamma * params.n_bath, "ad"))
    return out


@lru_cache(maxsize=None)
def _ladder_weights(dim):
    return np.sqrt(np.arange(1, dim, dtype=float))


def _apply_a(psi):
    out = np.zeros_like(psi)
    s = _ladder_weights(psi.shape[0])
    out[:-1] = (s if psi.ndim == 1 else s[:, None]) * psi[1:]
    return out


def _apply_ad(psi):
    out = np.zeros_like(psi)
    s = _ladder_weights(psi.shape[0])
    out[1:] = (s if psi.ndim == 1 else s[:, None]) * psi[:-1]
    return out


def loss_operator(params):
    """``sum_i L_i^dag L_i`` in the truncated space (diagonal)."""
    n = np.arange(params.dim, dtype=float)
    aad = np.where(n < params.dim - 1, n + 1.0, 0.0)
    return np.diag(params.gamma * (params.n_bath + 1.0) * n + params.gamma * params.n_bath * aad)


def linear_propagator(t, dt, params):
    """``expm(dt * (-i H(t + dt/2) - sum L^dag L / 2))``."""
    gen = -1j * hamiltonian_at(t + 0.5 * dt, params) - 0.5 * loss_operator(params)
    return expm(dt * gen)


def _stochastic_increment(psi, dt, channels, noise, include_linear):
    """Euler-Maruyama increment of the channel terms for one or many states.

    ``psi`` has shape (D,) or (D, K); ``noise`` has shape (n_channels,) or
    (n_channels, K).  When ``include_linear`` is false the ``-L^dag L / 2``
    drift is left to the exact propagator.
    """
    inc = np.zeros_like(psi)
    for c, (rate, kind) in enumerate(channels):
        root = math.sqrt(rate)
        lpsi = root * (_apply_a(psi) if kind == "a" else _apply_ad(psi))
        ell = np.sum(psi.conj() * lpsi, axis=0)
        drift = np.conj(ell) * lpsi - (0.5 * (ell.real**2 + ell.imag**2)) * psi
        if include_linear:
            ldl = root * (_apply_ad(lpsi) if kind == "a" else _apply_a(lpsi))
            drift = drift - 0.5 * ldl
        inc += drift * dt + (lpsi - ell * psi) * noise[c]
    return inc


def qsd_step(psi, t, dt, params, noise, scheme="euler", propagator=None):
    """Advance one trajectory by ``dt`` and renormalise.

    Parameters
    ----------
    psi : ndarray, shape (D,)
        Normalised pre-step state.
    noise : array_like
        Complex Wiener increments, one per Lindblad channel with non-zero rate
        (decay first, then thermal excitation).
    scheme : {"euler", "split"}
    propagator : ndarray, optional
        Precomputed :func:`linear_propagator` for the split scheme.

    Raises
    ------
    NormCollapseError
        if the unnormalised norm falls below 1e-8.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (params.dim,):
        raise InvalidDimensionError(f"state shape {psi.shape} does not match dim={params.dim}")
    channels = _channels(params)
    noise = np.asarray(noise, dtype=complex).reshape(-1)
    if noise.size < len(channels):
        raise InvalidArgumentError(f"need {len(channels)} noise increments, got {noise.size}")
    if scheme == "euler":
        h = hamiltonian_at(t, params)
        new = psi - 1j * dt * (h @ psi) + _stochastic_increment(psi, dt, channels, noise, True)
    elif scheme == "split":
        u = linear_propagator(t, dt, params) if propagator is None else propagator
        new = u @ (psi + _stochastic_increment(psi, dt, channels, noise, False))
    else:
        raise InvalidArgumentError(f"unknown QSD scheme {scheme!r}")
    norm = np.linalg.norm(new)
    if not norm >= NORM_FLOOR:
        raise NormCollapseError(f"state norm collapsed to {norm:.3e} at t={t:.6g}; reduce the step")
    return new / norm


def trajectory_rng(seed, index):
    """Independent Philox stream for trajectory ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def _step_schedule(times, t_start, step):
    """Per-step (t, dt) pairs and the step index after which each sample is taken."""
    ts, hs, marks = [], [], []
    t = t_start
    for target in times:
        span = target - t
        nsub = int(math.ceil(span / step - 1e-9)) if span > 0 else 0
        if nsub:
            h = span / nsub
            for j in range(nsub):
                ts.append(t + j * h)
                hs.append(h)
        marks.append(len(ts))
        t = target
    return np.array(ts), np.array(hs), marks


class _Chunk:
    """A fixed batch of trajectories advanced together."""

    def __init__(self, first, count, psi0, seed, n_channels, zero_noise):
        self.first = first
        self.count = count
        self.psi = np.repeat(np.asarray(psi0, dtype=complex)[:, None], count, axis=1)
        self.rngs = [trajectory_rng(seed, first + k) for k in range(count)]
        self.n_channels = n_channels
        self.zero_noise = zero_noise

    def draw(self, nsteps):
        """Standard complex normals of shape (nsteps, n_channels, count)."""
        if self.zero_noise or self.n_channels == 0:
            return np.zeros((nsteps, self.n_channels, self.count), dtype=complex)
        g = np.empty((nsteps, self.n_channels, self.count, 2))
        for k, rng in enumerate(self.rngs):
            g[:, :, k, :] = rng.standard_normal((nsteps, self.n_channels, 2))
        return g[..., 0] + 1j * g[..., 1]

    def advance(self, ts, hs, props, scheme, params, channels, sample_at):
        """Run the steps of one block; returns {local step index: (rho_sum, n_sum, n2_sum)}."""
        z = self.draw(len(ts))
        out = {}
        if 0 in sample_at:
            out[0] = _moments(self.psi)
        psi = self.psi
        n_ops = None
        for j in range(len(ts)):
            dt = hs[j]
            noise = z[j] * math.sqrt(0.5 * dt)
            inc = _stochastic_increment(psi, dt, channels, noise, scheme == "euler")
            if scheme == "split":
                new = props[j] @ (psi + inc)
            else:
                if n_ops is None:
                    n_ops = (static_hamiltonian(params), parametric_operator(params))
                h = n_ops[0] + params.envelope(float(ts[j])) * n_ops[1]
                new = psi - 1j * dt * (h @ psi) + inc
            norms = np.linalg.norm(new, axis=0)
            bad = np.flatnonzero(~(norms >= NORM_FLOOR))
            if bad.size:
                k = self.first + int(bad[0])
                raise NormCollapseError(
                    f"trajectory {k}: norm collapsed to {norms[bad[0]]:.3e} at t={ts[j]:.6g}", trajectory=k
                )
            psi = new / norms
            if j + 1 in sample_at:
                out[j + 1] = _moments(psi)
        self.psi = psi
        return out


def _moments(psi):
    """Projector sum and photon-number moments over the columns of ``psi``."""
    rho = psi @ psi.conj().T
    nvals = np.arange(psi.shape[0], dtype=float) @ (np.abs(psi) ** 2)
    return rho, float(np.sum(nvals)), float(np.sum(nvals * nvals))


def _worker_count(requested):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


def run_ensemble(psi0, config, params):
    """Average ``config.n_traj`` QSD trajectories started from ``psi0``.

    Trajectory ``k`` draws its noise from a Philox stream keyed by
    ``(seed, k)``.  Trajectories are batched in chunks of ``config.chunk_size``
    and partial sums are reduced in chunk order, so results are bitwise
    reproducible for any number of workers.

    Returns
    -------
    TrajectoryEnsembleResult
        ``density_estimates`` are the projector means at each sample time and
        ``stderr_n`` the standard error of the ensemble mean photon number.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (params.dim,):
        raise InvalidDimensionError(f"initial state shape {psi0.shape} does not match dim={params.dim}")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise InvalidArgumentError("initial state must be normalised")
    channels = _channels(params)
    times = np.asarray(config.sample_times)
    ts, hs, marks = _step_schedule(times, config.t_start, config.step)
    chunks = []
    for first in range(0, config.n_traj, config.chunk_size):
        count = min(config.chunk_size, config.n_traj - first)
        chunks.append(_Chunk(first, count, psi0, config.seed, len(channels), config.zero_noise))

    dim = params.dim
    nt = times.size
    rho_acc = np.zeros((nt, dim, dim), dtype=complex)
    n_acc = np.zeros(nt)
    n2_acc = np.zeros(nt)
    workers = _worker_count(config.workers)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def reduce(block_start, results):
        for res in results:  # chunk order
            for local, (rho_s, n_s, n2_s) in res.items():
                for i in sample_lookup.get(block_start + local, ()):
                    rho_acc[i] += rho_s
                    n_acc[i] += n_s
                    n2_acc[i] += n2_s

    sample_lookup = {}
    for i, m in enumerate(marks):
        sample_lookup.setdefault(m, []).append(i)

    try:
        nsteps = len(ts)
        block_start = 0
        while True:
            block_end = min(block_start + BLOCK_STEPS, nsteps)
            bts, bhs = ts[block_start:block_end], hs[block_start:block_end]
            if config.scheme == "split":
                props = [linear_propagator(float(t), float(h), params) for t, h in zip(bts, bhs)]
            else:
                props = None
            sample_at = {m - block_start for m in sample_lookup if block_start <= m <= block_end}
            if block_start > 0:
                sample_at.discard(0)  # already taken at the end of the previous block

            def work(chunk):
                return chunk.advance(bts, bhs, props, config.scheme, params, channels, sample_at)

            results = list(pool.map(work, chunks)) if pool else [work(c) for c in chunks]
            reduce(block_start, results)
            if block_end >= nsteps:
                break
            block_start = block_end
    finally:
        if pool:
            pool.shutdown()

    n = config.n_traj
    mean_n = n_acc / n
    if n > 1:
        var = np.maximum(n2_acc / n - mean_n**2, 0.0) * n / (n - 1)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.full(nt, np.nan)
    final = np.concatenate([c.psi for c in chunks], axis=1)
    return TrajectoryEnsembleResult(
        sample_times=times.copy(), density_estimates=rho_acc / n, mean_n=mean_n, stderr_n=stderr,
        seed=int(config.seed), n_traj=n, step=config.step, scheme=config.scheme, final_states=final.T.copy(),
    )
