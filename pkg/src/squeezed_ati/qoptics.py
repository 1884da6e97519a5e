"""Truncated single-mode Fock-space toolkit.

Quadrature convention: x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)),
so the vacuum Wigner function is exp(-x^2 - p^2)/pi and a coherent state
|beta> is centred at (sqrt(2) Re beta, sqrt(2) Im beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln

from .errors import DimensionMismatch, GridTooSmall, TruncationError

TAIL_TOL = 1e-10
TAIL_MASS_TOL = 1e-8
DEFAULT_CUTOFF = 200
DEFAULT_STEP = 0.05
GRID_MARGIN = 6.0


@dataclass(frozen=True, eq=False)
class FockVector:
    """Pure state as amplitudes on |0>, ..., |cutoff>."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tail_mass(self, fraction: float = 0.1) -> float:
        n_tail = max(1, int(np.ceil(fraction * self.amplitudes.size)))
        tail = self.amplitudes[-n_tail:]
        return float(np.vdot(tail, tail).real) / max(self.norm**2, 1e-300)

    def normalized(self) -> "FockVector":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockVector(self.amplitudes / n)

    def projector(self) -> "DensityOperator":
        psi = self.normalized().amplitudes
        return DensityOperator(np.outer(psi, psi.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        object.__setattr__(self, "matrix", m)

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0] - 1

    def check(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10, eig_tol: float = 1e-10):
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > trace_tol:
            raise ValueError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(m).min() < -eig_tol:
            raise ValueError("density matrix has negative eigenvalues")
        return self


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_min: float
    x_max: float
    p_min: float
    p_max: float
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if self.x_max <= self.x_min or self.p_max <= self.p_min:
            raise ValueError("empty grid")

    @property
    def xs(self) -> np.ndarray:
        n = int(round((self.x_max - self.x_min) / self.step))
        return self.x_min + self.step * np.arange(n + 1)

    @property
    def ps(self) -> np.ndarray:
        n = int(round((self.p_max - self.p_min) / self.step))
        return self.p_min + self.step * np.arange(n + 1)

    @classmethod
    def square(cls, half_width: float, step: float = DEFAULT_STEP, center=(0.0, 0.0)):
        # snap to the step so that halving reproduces the same nodes
        h = step * np.ceil(half_width / step)
        cx = step * np.round(center[0] / step)
        cp = step * np.round(center[1] / step)
        return cls(cx - h, cx + h, cp - h, cp + h, step)

    @classmethod
    def covering(cls, displacements, step: float = DEFAULT_STEP, margin: float = GRID_MARGIN):
        """Grid centred on a set of coherent amplitudes with ``margin`` of room."""
        d = np.atleast_1d(np.asarray(displacements, dtype=complex))
        pts = np.sqrt(2.0) * d
        cx = 0.5 * (pts.real.max() + pts.real.min())
        cp = 0.5 * (pts.imag.max() + pts.imag.min())
        half = max(np.abs(pts.real - cx).max(), np.abs(pts.imag - cp).max()) + margin
        return cls.square(half, step, center=(cx, cp))

    def refined(self) -> "PhaseSpaceGrid":
        return PhaseSpaceGrid(self.x_min, self.x_max, self.p_min, self.p_max, self.step / 2)


@dataclass(frozen=True, eq=False)
class WignerMap:
    grid: PhaseSpaceGrid
    values: np.ndarray  # shape (len(xs), len(ps))

    def integral(self, absolute: bool = False) -> float:
        w = np.abs(self.values) if absolute else self.values
        return float(np.trapezoid(np.trapezoid(w, dx=self.grid.step, axis=1), dx=self.grid.step))


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """<alpha|beta> for coherent states."""
    return np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2 + np.conj(alpha) * beta)


def fock_state(n: int, cutoff: int = DEFAULT_CUTOFF) -> FockVector:
    if not 0 <= n <= cutoff:
        raise ValueError("photon number outside the truncated space")
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps)


def _check_tail(vec: np.ndarray, what: str) -> None:
    missing = 1.0 - float(np.vdot(vec, vec).real)
    n_tail = max(1, int(np.ceil(0.1 * vec.size)))
    tail = float(np.vdot(vec[-n_tail:], vec[-n_tail:]).real)
    if missing > TAIL_TOL or tail > TAIL_MASS_TOL:
        raise TruncationError(
            f"{what}: weight beyond cutoff {missing:.2e}, top-decile weight {tail:.2e}"
        )


def _displaced_columns(beta: complex, n_max: int, cutoff: int) -> np.ndarray:
    """Columns <m|D(beta)|n> for n = 0..n_max, m = 0..cutoff.

    Associated-Laguerre closed form with the magnitude prefactor assembled
    in logs; entries carry no truncation error.
    """
    beta = complex(beta)
    m = np.arange(cutoff + 1)[:, None]
    n = np.arange(n_max + 1)[None, :]
    if beta == 0:
        return (m == n).astype(complex)
    x = abs(beta) ** 2
    lo, hi = np.minimum(m, n), np.maximum(m, n)
    k = hi - lo
    logmag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + k * np.log(abs(beta)) - 0.5 * x
    # m >= n: beta^(m-n); m < n: (-beta*)^(n-m)
    ang = np.where(m >= n, k * np.angle(beta), k * (np.pi - np.angle(beta)))
    return np.exp(logmag + 1j * ang) * eval_genlaguerre(lo, k, x)


def displacement_matrix(beta: complex, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Matrix of <m|D(beta)|n>, 0 <= m, n <= cutoff (truncated operator)."""
    return _displaced_columns(beta, cutoff, cutoff)


def displaced_fock(beta: complex, n: int, cutoff: int = DEFAULT_CUTOFF) -> FockVector:
    """Fock amplitudes of D(beta)|n>.

    Raises TruncationError when the state does not fit below the cutoff.
    """
    if not 0 <= n <= cutoff:
        raise ValueError("photon number outside the truncated space")
    vec = _displaced_columns(complex(beta), n, cutoff)[:, n]
    _check_tail(vec, f"D({complex(beta):.3g})|{n}>")
    return FockVector(vec / np.linalg.norm(vec))


def coherent_state(beta: complex, cutoff: int = DEFAULT_CUTOFF) -> FockVector:
    return displaced_fock(beta, 0, cutoff)


def squeeze_operator(r: float, theta: float, cutoff: int, pad: int = 200) -> np.ndarray:
    """Truncated S(xi) = exp[(xi* a^2 - xi a^dag^2)/2], xi = r e^{i theta}.

    Built in a padded space and cropped, so only useful for modest r acting
    on low-photon states.
    """
    dim = cutoff + 1 + pad
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    xi = r * np.exp(1j * theta)
    gen = 0.5 * (np.conj(xi) * a @ a - xi * a.T @ a.T)
    return expm(gen)[: cutoff + 1, : cutoff + 1]


def density_from_ensemble(weights, states) -> DensityOperator:
    """Normalized mixture sum_i w_i |psi_i><psi_i| / sum_i w_i."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != len(states) or w.size == 0:
        raise ValueError("need one weight per state")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive sum")
    dims = {s.amplitudes.size for s in states}
    if len(dims) != 1:
        raise DimensionMismatch(f"states have different cutoffs: {sorted(d - 1 for d in dims)}")
    vecs = np.array([s.normalized().amplitudes for s in states])
    rho = (vecs.T * (w / w.sum())) @ vecs.conj()
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho)


def purity(rho: DensityOperator) -> float:
    m = rho.matrix
    return float(np.vdot(m, m).real)


def linear_entropy(rho: DensityOperator) -> float:
    return 1.0 - purity(rho)


# --- Wigner function ------------------------------------------------------


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions phi_0..phi_{n_max} at points x, shape (len(x), n_max+1)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((x.size, n_max + 1))
    out[:, 0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if n_max >= 1:
        out[:, 1] = np.sqrt(2.0) * x * out[:, 0]
    for n in range(1, n_max):
        out[:, n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[:, n] - np.sqrt(n / (n + 1)) * out[:, n - 1]
    return out


def wigner_point(state, x: float, p: float) -> float:
    """W(x, p) from the parity form (1/pi) tr[Pi D(-beta) rho D(beta)].

    Cost O(cutoff^3); meant for spot values and cross-checks.
    """
    rho = _as_matrix(state)
    dim = rho.shape[0]
    beta = (x + 1j * p) / np.sqrt(2.0)
    # pad so that D(-beta) acting on the support of rho is not truncated
    pad = int(4 * abs(beta) ** 2 + 20 * abs(beta) + 40)
    big = np.zeros((dim + pad, dim + pad), dtype=complex)
    big[:dim, :dim] = rho
    d = displacement_matrix(-beta, dim + pad - 1)
    sigma_diag = np.einsum("ij,jk,ik->i", d, big, d.conj())
    parity = (-1.0) ** np.arange(dim + pad)
    return float((parity * sigma_diag).sum().real / np.pi)


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, FockVector):
        psi = state.amplitudes
        return np.outer(psi, psi.conj())
    if isinstance(state, DensityOperator):
        return state.matrix
    raise TypeError("expected FockVector or DensityOperator")


def wigner_map(state, grid: PhaseSpaceGrid, check_boundary: bool = True) -> WignerMap:
    """Wigner function on a rectangular grid.

    Evaluates W(x, p) = (1/pi) int rho(x - y, x + y) exp(2ipy) dy with the
    position-space density built from oscillator eigenfunctions and the y
    integral done by a trapezoid sum on the grid step (spectrally accurate
    for these rapidly decaying integrands).
    """
    h = grid.step
    xs, ps = grid.xs, grid.ps
    nx = xs.size
    # y extent: the state is negligible outside the grid, so |y| <= x-span
    m = nx - 1
    u = xs[0] + h * np.arange(-m, nx + m)
    n_max = (state.amplitudes.size if isinstance(state, FockVector) else state.matrix.shape[0]) - 1
    phi = hermite_functions(n_max, u)

    i_idx = np.arange(nx)[:, None] + m
    j_idx = np.arange(0, m + 1)[None, :]
    if isinstance(state, FockVector):
        psi = phi @ state.amplitudes
        kern = psi[i_idx - j_idx] * np.conj(psi[i_idx + j_idx])
    elif isinstance(state, DensityOperator):
        rho_u = phi @ state.matrix @ phi.T
        kern = rho_u[i_idx - j_idx, i_idx + j_idx]
    else:
        raise TypeError("expected FockVector or DensityOperator")

    y = h * np.arange(m + 1)
    arg = 2.0 * np.outer(y, ps)
    # kernel is Hermitian in y -> only y >= 0 is needed
    wts = np.full(m + 1, 2.0)
    wts[0] = 1.0
    kw = kern * wts
    # contiguous copies keep the products on the BLAS path
    kr, ki = np.ascontiguousarray(kw.real), np.ascontiguousarray(kw.imag)
    values = (kr @ np.cos(arg) - ki @ np.sin(arg)) * (h / np.pi)

    if check_boundary:
        edge = max(
            np.abs(values[0]).max(), np.abs(values[-1]).max(),
            np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max(),
        )
        peak = np.abs(values).max()
        if edge > 1e-6 * peak:
            raise GridTooSmall(f"boundary |W| = {edge:.2e} exceeds 1e-6 of max {peak:.2e}")
    return WignerMap(grid, values)


def negativity_volume(w: WignerMap) -> float:
    """N = -1 + integral of |W| over the grid (trapezoid rule)."""
    return w.integral(absolute=True) - 1.0


def state_negativity(state, grid: PhaseSpaceGrid | None = None, tol: float = 1e-3,
                     max_refinements: int = 3) -> float:
    """Negativity volume with step halving until successive values agree to ``tol``."""
    if grid is None:
        grid = default_grid(state)
    prev = negativity_volume(wigner_map(state, grid))
    for _ in range(max_refinements):
        grid = grid.refined()
        cur = negativity_volume(wigner_map(state, grid))
        if abs(cur - prev) < tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


def default_grid(state, step: float = DEFAULT_STEP, margin: float = GRID_MARGIN) -> PhaseSpaceGrid:
    """Grid centred on the state's mean amplitude, wide enough for its spread."""
    rho = _as_matrix(state)
    dim = rho.shape[0]
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    mean_a = np.trace(rho @ a)
    mean_n = np.trace(rho @ (a.T @ a)).real
    spread = np.sqrt(max(mean_n - abs(mean_a) ** 2, 0.0))
    return PhaseSpaceGrid.square(
        np.sqrt(2.0) * (spread * 1.5) + margin,
        step,
        center=(np.sqrt(2.0) * mean_a.real, np.sqrt(2.0) * mean_a.imag),
    )
