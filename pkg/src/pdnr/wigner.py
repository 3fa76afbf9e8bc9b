"""Wigner functions on a Cartesian quadrature grid.

Quadratures are ``X = (alpha + alpha*)/2`` and ``Y = (alpha - alpha*)/2i``, so
the vacuum has ``W = (2/pi) exp(-2|alpha|^2)`` and quadrature variance 1/4.

The production kernel is the displaced-parity formula

    W(alpha) = (2/pi) tr[rho D(alpha) P D(alpha)^dag] = (2/pi) tr[rho D(2 alpha) P],

evaluated with the exact Fock matrix elements of D(2 alpha), so the result is
exact for any rho supported on the truncated space.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvalidArgumentError, TruncationError
from .fock import displacement_elements

DEFAULT_SPAN = 6.0
DEFAULT_POINTS = 101
LEAKAGE_TOL = 1e-6
OCCUPATION_TOL = 1e-4
IMAG_TOL = 1e-10
_BATCH = 2048


def symmetric_axis(span, points):
    """``points`` values on [-span, span] that are exactly sign-symmetric."""
    if points < 2:
        raise InvalidArgumentError("a grid axis needs at least two points")
    k = 2 * np.arange(points) - (points - 1)
    return span * k / (points - 1)


@dataclass(frozen=True)
class GridSpec:
    span: float = DEFAULT_SPAN
    points: int = DEFAULT_POINTS

    def axes(self):
        ax = symmetric_axis(self.span, self.points)
        return ax, ax.copy()


@dataclass
class WignerGrid:
    """``values[i, j] = W(x_axis[i], y_axis[j])``."""

    x_axis: np.ndarray
    y_axis: np.ndarray
    values: np.ndarray
    time: float | None = None
    params_hash: str = ""
    imag_residue: float = 0.0
    required_span: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def span_ok(self):
        if self.required_span is None:
            return True
        return min(-self.x_axis[0], self.x_axis[-1], -self.y_axis[0], self.y_axis[-1]) >= self.required_span

    @property
    def dx(self):
        return float(self.x_axis[1] - self.x_axis[0])

    @property
    def dy(self):
        return float(self.y_axis[1] - self.y_axis[0])


def required_span(rho, occupation_tol=OCCUPATION_TOL):
    """Half-width ``1.5 sqrt(n_max) + 2`` with n_max the highest level holding >= occupation_tol."""
    pops = np.real(np.diagonal(rho))
    occupied = np.flatnonzero(pops >= occupation_tol)
    n_max = int(occupied[-1]) if occupied.size else 0
    return 1.5 * math.sqrt(n_max) + 2.0


def wigner_from_density(rho, grid=None, x_axis=None, y_axis=None, time=None, params_hash="",
                        leakage_guard=True):
    """Wigner function of ``rho`` on a grid.

    Either pass a :class:`GridSpec` or explicit ``x_axis`` / ``y_axis``.

    Raises
    ------
    TruncationError
        with ``leakage_guard`` set, when the top Fock level holds more than 1e-6.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    if rho.ndim != 2 or rho.shape[1] != dim:
        raise InvalidArgumentError(f"density matrix must be square, got shape {rho.shape}")
    if leakage_guard and np.real(rho[-1, -1]) > LEAKAGE_TOL:
        raise TruncationError(
            f"top level population {np.real(rho[-1, -1]):.3e} exceeds {LEAKAGE_TOL:g}; raise dim above {dim}"
        )
    if x_axis is None or y_axis is None:
        x_axis, y_axis = (grid or GridSpec()).axes()
    x_axis = np.asarray(x_axis, dtype=float)
    y_axis = np.asarray(y_axis, dtype=float)

    alpha = (x_axis[:, None] + 1j * y_axis[None, :]).ravel()
    # tr[rho D(2a) P] = sum_mn rho_mn (-1)^m D(2a)_nm
    kernel = (rho * ((-1.0) ** np.arange(dim))[:, None]).T
    out = np.empty(alpha.size, dtype=complex)
    for start in range(0, alpha.size, _BATCH):
        block = alpha[start:start + _BATCH]
        dmat = displacement_elements(2.0 * block, dim)
        out[start:start + _BATCH] = np.einsum("nm,bnm->b", kernel, dmat)
    out *= 2.0 / math.pi
    residue = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if residue > IMAG_TOL * max(1.0, float(np.max(np.abs(rho)))):
        raise InvalidArgumentError(f"Wigner function has imaginary residue {residue:.3e}; is rho Hermitian?")
    values = out.real.reshape(x_axis.size, y_axis.size)
    return WignerGrid(x_axis=x_axis, y_axis=y_axis, values=values, time=time, params_hash=params_hash,
                      imag_residue=residue, required_span=required_span(rho))


def _check_symmetric(axis, name):
    scale = max(1.0, float(np.max(np.abs(axis))))
    if np.max(np.abs(axis + axis[::-1])) > 1e-12 * scale:
        raise InvalidArgumentError(f"{name} is not symmetric about zero")


def symmetry_defect(grid):
    """``max |W(X,Y) - W(-X,-Y)| / max |W|`` over the grid."""
    _check_symmetric(grid.x_axis, "x_axis")
    _check_symmetric(grid.y_axis, "y_axis")
    w = grid.values
    scale = float(np.max(np.abs(w)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(w - w[::-1, ::-1]))) / scale


def normalization(grid):
    """Trapezoidal integral of W over the grid."""
    inner = np.trapezoid(grid.values, grid.y_axis, axis=1)
    return float(np.trapezoid(inner, grid.x_axis))


def wrap_phase(theta):
    """Map angles into (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    out = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    out = np.where(out <= -np.pi, out + 2 * np.pi, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Hump:
    x: float
    y: float
    value: float
    theta: float
    r: float


@dataclass
class HumpReport:
    humps: list
    phase_differences: dict

    @property
    def count(self):
        return len(self.humps)

    def height_ratio(self):
        """Smaller over larger peak height of the two highest humps."""
        if len(self.humps) < 2:
            return float("nan")
        a, b = self.humps[0].value, self.humps[1].value
        return min(a, b) / max(a, b)

    def leading_phase_difference(self):
        if len(self.humps) < 2:
            return float("nan")
        return self.phase_differences[(0, 1)]

    def as_dict(self):
        return {
            "count": self.count,
            "humps": [asdict(h) for h in self.humps],
            "phase_differences": {f"{i}-{j}": v for (i, j), v in self.phase_differences.items()},
            "height_ratio": self.height_ratio(),
        }


def find_humps(grid, threshold=0.2):
    """Interior 8-neighbour local maxima above ``threshold * max W``.

    Plateaus of equal neighbouring maxima count once.  Humps are sorted by
    height, highest first; ``phase_differences[(i, j)]`` is
    ``theta_j - theta_i`` wrapped to (-pi, pi].
    """
    if not 0 < threshold < 1:
        raise InvalidArgumentError("threshold fraction must lie in (0, 1)")
    w = grid.values
    peak = float(np.max(w))
    local = ndimage.maximum_filter(w, size=3, mode="nearest") == w
    mask = local & (w >= threshold * peak)
    mask[0, :] = mask[-1, :] = False
    mask[:, 0] = mask[:, -1] = False
    labels, count = ndimage.label(mask, structure=np.ones((3, 3)))
    humps = []
    for lab in range(1, count + 1):
        idx = np.argwhere(labels == lab)
        best = idx[np.argmax(w[idx[:, 0], idx[:, 1]])]
        x, y = float(grid.x_axis[best[0]]), float(grid.y_axis[best[1]])
        humps.append(Hump(x=x, y=y, value=float(w[best[0], best[1]]),
                          theta=float(wrap_phase(math.atan2(y, x))), r=math.hypot(x, y)))
    humps.sort(key=lambda h: (-h.value, h.x, h.y))
    diffs = {}
    for i in range(len(humps)):
        for j in range(i + 1, len(humps)):
            diffs[(i, j)] = float(wrap_phase(humps[j].theta - humps[i].theta))
    return HumpReport(humps=humps, phase_differences=diffs)


def angular_resolution(grid, radius):
    """Angle subtended by one grid cell at ``radius``."""
    if radius <= 0:
        return math.pi
    return max(abs(grid.dx), abs(grid.dy)) / radius


def quadrature_covariance(grid):
    """Mean and covariance of (X, Y) under W, by trapezoidal moments."""
    x = grid.x_axis[:, None]
    y = grid.y_axis[None, :]
    w = grid.values

    def integ(f):
        return float(np.trapezoid(np.trapezoid(f, grid.y_axis, axis=1), grid.x_axis))

    norm = integ(w)
    mx, my = integ(x * w) / norm, integ(y * w) / norm
    cxx = integ((x - mx) ** 2 * w) / norm
    cyy = integ((y - my) ** 2 * w) / norm
    cxy = integ((x - mx) * (y - my) * w) / norm
    return np.array([mx, my]), np.array([[cxx, cxy], [cxy, cyy]])


def minor_axis_variance(grid):
    """Smallest principal quadrature variance; below 1/4 signals squeezing."""
    _, cov = quadrature_covariance(grid)
    return float(np.linalg.eigvalsh(cov)[0])


def quadrature_covariance_from_density(rho):
    """Exact symmetrised quadrature covariance of ``rho``.

    ``rho`` is embedded in a space two levels larger so that the quadratic
    moments do not feel the truncation edge.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0] + 2
    rho = np.pad(rho, ((0, 2), (0, 2)))
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    X = 0.5 * (a + a.T)
    Y = -0.5j * (a - a.T)

    def ev(op):
        return np.real(np.trace(rho @ op))

    mx, my = ev(X), ev(Y)
    dX, dY = X - mx * np.eye(dim), Y - my * np.eye(dim)
    cxx = ev(dX @ dX)
    cyy = ev(dY @ dY)
    cxy = 0.5 * ev(dX @ dY + dY @ dX)
    return np.array([mx, my]), np.array([[cxx, cxy], [cxy, cyy]])
