"""Dense operator algebra on the truncated Fock basis {|0>, ..., |D-1>}.

Operators are plain ``complex128`` numpy arrays of shape ``(D, D)``; row and
column indices are occupation numbers.  Units are hbar = 1 throughout.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln

from .errors import InvalidArgumentError, InvalidDimensionError


def _check_dim(dim, minimum=1):
    if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool):
        raise InvalidDimensionError(f"dimension must be an integer, got {dim!r}")
    if dim < minimum:
        raise InvalidDimensionError(f"dimension must be >= {minimum}, got {dim}")
    return int(dim)


def make_annihilation(dim):
    """Lowering operator ``a`` with ``a[n-1, n] = sqrt(n)``."""
    dim = _check_dim(dim, 2)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def make_creation(dim):
    return make_annihilation(dim).T.copy()


def make_number(dim):
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def make_kerr(dim):
    """The Kerr operator ``(a^dag a)^2``: diagonal with ``n**2``."""
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float) ** 2).astype(complex)


def make_parity(dim):
    """``exp(i pi a^dag a)``, i.e. ``diag((-1)**n)``."""
    dim = _check_dim(dim)
    return np.diag((-1.0) ** np.arange(dim)).astype(complex)


def make_displacement(alpha, dim):
    """Matrix exponential of the truncated generator ``alpha a^dag - alpha* a``.

    Uses scaling and squaring with Pade approximants.  Because the generator
    itself is truncated, the result is exactly unitary but deviates from the
    infinite-dimensional D(alpha) in the highest levels; see
    :func:`displacement_elements` for the exact matrix elements.
    """
    dim = _check_dim(dim, 2)
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise InvalidArgumentError(f"displacement amplitude must be finite, got {alpha}")
    a = make_annihilation(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def displacement_elements(beta, dim):
    """Exact matrix elements ``<m|D(beta)|n>`` for ``m, n < dim``.

    These are entries of the infinite-dimensional displacement operator, not
    of the exponential of a truncated generator.  ``beta`` may be an array; the
    result then has shape ``beta.shape + (dim, dim)``.

    For ``m >= n``::

        <m|D|n> = sqrt(n!/m!) beta^(m-n) exp(-|beta|^2/2) L_n^(m-n)(|beta|^2)

    and the same with ``m, n`` exchanged and ``beta`` replaced by ``-beta*``
    when ``m < n``.
    The factorial and exponential prefactors are combined in log space.
    """
    dim = _check_dim(dim, 1)
    beta = np.asarray(beta, dtype=complex)
    if not np.all(np.isfinite(beta)):
        raise InvalidArgumentError("displacement amplitude must be finite")
    flat = beta.ravel()
    x = (flat.real**2 + flat.imag**2)[:, None]
    mod = np.sqrt(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mod = np.log(mod)
        unit = np.where(mod > 0, flat[:, None] / np.where(mod > 0, mod, 1.0), 1.0)
    out = np.zeros((flat.size, dim, dim), dtype=complex)
    for k in range(dim):
        lo = np.arange(dim - k)
        lag = eval_genlaguerre(lo[None, :], k, x)
        logp = 0.5 * (gammaln(lo + 1.0) - gammaln(lo + k + 1.0))[None, :] - 0.5 * x
        if k:
            logp = logp + k * log_mod
        with np.errstate(divide="ignore"):
            mag = np.sign(lag) * np.exp(logp + np.log(np.abs(lag)))
        out[:, lo + k, lo] = unit**k * mag
        if k:
            out[:, lo, lo + k] = (-np.conj(unit)) ** k * mag
    return out.reshape(beta.shape + (dim, dim))


def basis(dim, n):
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"level {n} outside truncation of dimension {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def coherent_state(alpha, dim, normalize=False):
    """Truncated coherent-state amplitudes ``exp(-|alpha|^2/2) alpha^n / sqrt(n!)``."""
    dim = _check_dim(dim)
    alpha = complex(alpha)
    v = np.empty(dim, dtype=complex)
    v[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        v[n] = v[n - 1] * alpha / math.sqrt(n)
    if normalize:
        v /= np.linalg.norm(v)
    return v


def ket2dm(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def expectation(op, state):
    """``tr(op rho)`` for a matrix state or ``<psi|op|psi>`` for a vector state.

    Always returns a complex number.
    """
    op = np.asarray(op)
    state = np.asarray(state)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise InvalidDimensionError(f"operator must be square, got shape {op.shape}")
    if state.shape[0] != op.shape[0]:
        raise InvalidDimensionError(
            f"operator dimension {op.shape[0]} does not match state dimension {state.shape[0]}"
        )
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    if state.ndim == 2 and state.shape[0] == state.shape[1]:
        return complex(np.einsum("ij,ji->", op, state))
    raise InvalidDimensionError(f"state must be a vector or square matrix, got shape {state.shape}")


def mean_number(rho):
    """Fast ``<a^dag a>`` for a density matrix (real part of the weighted diagonal)."""
    rho = np.asarray(rho)
    return float(np.dot(np.arange(rho.shape[0]), np.real(np.diagonal(rho))))


def density_diagnostics(rho):
    """Trace, Hermiticity defect and smallest eigenvalue of a density matrix."""
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    hpart = 0.5 * (rho + rho.conj().T)
    return {
        "trace": complex(np.trace(rho)),
        "hermiticity_defect": herm,
        "min_eigenvalue": float(np.linalg.eigvalsh(hpart)[0]),
    }


def is_density_matrix(rho, trace_tol=1e-9, herm_tol=1e-10, pos_tol=1e-8):
    d = density_diagnostics(rho)
    return (
        abs(d["trace"] - 1.0) <= trace_tol
        and d["hermiticity_defect"] <= herm_tol
        and d["min_eigenvalue"] >= -pos_tol
    )


def trace_distance(rho, sigma):
    """``(1/2) || rho - sigma ||_1`` for Hermitian arguments."""
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def commutator(a, b):
    return a @ b - b @ a
