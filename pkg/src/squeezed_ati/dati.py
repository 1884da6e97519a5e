"""Observables of the field state after direct ionization."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ComputeError
from .field import F_mode, LaserParams, SqueezeParams, classical_field, f_mode
from .qoptics import (
    DEFAULT_CUTOFF, DEFAULT_STEP, DensityOperator, FockVector, PhaseSpaceGrid,
    displaced_fock, linear_entropy, negativity_volume, wigner_map,
)
from .saddle import PHASE, gaussian_width, semiclassical_seeds, solve_saddles_batch

N_HERMITE = 64


@dataclass
class ScanTable:
    """Rectangular table of real observables over one or two axes."""

    axes: dict  # name -> 1-D array, in cell index order
    cells: dict  # observable name -> array of shape tuple(len(axis) for axis)
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        shape = tuple(len(v) for v in self.axes.values())
        for name, arr in self.cells.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != shape:
                raise ValueError(f"cell array {name!r} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in {name!r}")
            self.cells[name] = arr

    def rows(self):
        """Flattened (axis values..., cell values...) tuples in C order."""
        names = list(self.axes)
        grids = np.meshgrid(*[np.asarray(self.axes[n]) for n in names], indexing="ij")
        cols = [g.ravel() for g in grids] + [c.ravel() for c in self.cells.values()]
        return list(zip(*cols))


# --- purity right after ionization ----------------------------------------


def _purity_nodes(Ip: float, n: int = N_HERMITE):
    """Nodes/weights for int x^2 exp(-a x^2) g(x) dx (weight |h(x)|^2)."""
    y, w = np.polynomial.hermite.hermgauss(n)
    a = gaussian_width(Ip)
    wt = w * y**2
    return y / np.sqrt(a), wt / wt.sum()


def ionization_purity(t1, sq: SqueezeParams, lp: LaserParams, n_nodes: int = N_HERMITE):
    """Purity of int dx |h(x)|^2 |x F(t1)><x F(t1)| for real ionization times."""
    t1 = np.asarray(t1, dtype=float)
    x, w = _purity_nodes(lp.Ip, n_nodes)
    F2 = np.abs(F_mode(sq, lp, t1)) ** 2
    dx2 = (x[:, None] - x[None, :]) ** 2
    ww = w[:, None] * w[None, :]
    kern = np.exp(-np.multiply.outer(F2, dx2))
    return np.sum(kern * ww, axis=(-2, -1))


# --- post-selected state ----------------------------------------------------


def phi_components(sols, lp, sq):
    """(alpha_s, c0_s, c1_s) with Phi_d = sum_s c0_s D(alpha_s)|0> + c1_s D(alpha_s)|1>."""
    alpha = np.array([s.alpha_total for s in sols], dtype=complex)
    t1 = np.array([s.vars.t1 for s in sols], dtype=complex)
    G = np.array([s.prefactor for s in sols], dtype=complex)
    E1, _ = classical_field(t1, lp)
    # E_L|0> = i f~(t1)|1>, f~ the holomorphic conjugate of f
    return alpha, G * E1, G * 1j * f_mode(sq, lp, t1, conj=True)


def _phi_from_solutions(sols, lp, sq, cutoff, center=0j):
    """Fock amplitudes of D(-center) sum_s G_s D(alpha_s)[E_cl + E_L]|0> (unnormalized)."""
    vec = np.zeros(cutoff + 1, dtype=complex)
    for al, c0, c1 in zip(*phi_components(sols, lp, sq)):
        # D(-c) D(a) = exp((a c* - a* c)/2) D(a - c)
        ph = np.exp(0.5 * (al * np.conj(center) - np.conj(al) * center))
        vec += ph * c0 * displaced_fock(al - center, 0, cutoff).amplitudes
        vec += ph * c1 * displaced_fock(al - center, 1, cutoff).amplitudes
    return vec


def _box_center(alphas):
    a = np.asarray(alphas, dtype=complex)
    return complex(0.5 * (a.real.min() + a.real.max()), 0.5 * (a.imag.min() + a.imag.max()))


def component_overlaps(alpha, beta):
    """<D(a)m|D(b)n> for m, n in {0, 1}; each entry has shape (len(a), len(b))."""
    a = np.asarray(alpha, dtype=complex)[:, None]
    b = np.asarray(beta, dtype=complex)[None, :]
    C = np.exp(-0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2 + np.conj(a) * b)
    d = np.conj(a) - np.conj(b)
    return C, d * C, (b - a) * C, (1.0 + d * (b - a)) * C


def phi_gram(sols_list, lp, sq):
    """Gram matrix <Phi_i|Phi_j> of unnormalized Phi_d states, without truncation."""
    comps = [phi_components(s, lp, sq) for s in sols_list]
    alpha = np.concatenate([c[0] for c in comps])
    c0 = np.concatenate([c[1] for c in comps])
    c1 = np.concatenate([c[2] for c in comps])
    owner = np.concatenate([np.full(len(c[0]), i) for i, c in enumerate(comps)])
    C00, C01, C10, C11 = component_overlaps(alpha, alpha)
    M = (np.conj(c0)[:, None] * (C00 * c0[None, :] + C01 * c1[None, :])
         + np.conj(c1)[:, None] * (C10 * c0[None, :] + C11 * c1[None, :]))
    O = np.zeros((alpha.size, len(comps)))
    O[np.arange(alpha.size), owner] = 1.0
    return O.T @ M @ O


def phi_d_amplitudes(v_grid, lp: LaserParams, sq: SqueezeParams, kind: str = PHASE,
                     cutoff: int = DEFAULT_CUTOFF, t0: float = 0.0, recenter: str | None = None):
    """Unnormalized Phi_d(v) Fock amplitudes (rows), the saddle lists and the frame centres.

    ``recenter`` removes a common displacement before truncation: ``"each"``
    centres every row on its own coherent components, ``"common"`` uses one
    centre for the whole batch, ``None`` keeps the lab frame. Rows are then
    the amplitudes of D(-centre) Phi_d, which has the same Wigner negativity
    (and, for a common centre, the same mixture purity).
    """
    sols = solve_saddles_batch(v_grid, lp, sq, kind, t0)
    if recenter is None:
        centers = [0j] * len(sols)
    elif recenter == "each":
        centers = [_box_center([s.alpha_total for s in row]) for row in sols]
    elif recenter == "common":
        c = _box_center([s.alpha_total for row in sols for s in row])
        centers = [c] * len(sols)
    else:
        raise ValueError(f"unknown recenter mode {recenter!r}")
    amps = np.array([_phi_from_solutions(s, lp, sq, cutoff, c) for s, c in zip(sols, centers)])
    return amps, sols, np.array(centers)


def assemble_phi_d(v_f: float, lp: LaserParams, sq: SqueezeParams, kind: str = PHASE,
                   cutoff: int = DEFAULT_CUTOFF, t0: float = 0.0,
                   recenter: str | None = None) -> FockVector:
    """Normalized Phi_d(v_f); see ``phi_d_amplitudes`` for ``recenter``."""
    amps, _, _ = phi_d_amplitudes([v_f], lp, sq, kind, cutoff, t0, recenter)
    return FockVector(amps[0]).normalized()


def state_grid(state: FockVector, displacements, step: float = DEFAULT_STEP) -> PhaseSpaceGrid:
    """Grid covering every coherent component of ``state`` with a 6-unit margin."""
    return PhaseSpaceGrid.covering(displacements, step)


def phi_d_negativity(state: FockVector, displacements, step: float = DEFAULT_STEP,
                     tol: float = 1e-3, max_refinements: int = 3) -> float:
    grid = state_grid(state, displacements, step)
    prev = negativity_volume(wigner_map(state, grid))
    for _ in range(max_refinements):
        grid = grid.refined()
        cur = negativity_volume(wigner_map(state, grid))
        if abs(cur - prev) < tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


def negativity_scan(v_grid, lp: LaserParams, sq: SqueezeParams,
                    cutoff: int = DEFAULT_CUTOFF, kind: str = PHASE,
                    step: float = DEFAULT_STEP, t0: float = 0.0,
                    tol: float = 1e-3) -> ScanTable:
    """Wigner negativity volume of Phi_d(v_f) on a grid of final momenta."""
    v_grid = np.asarray(v_grid, dtype=float)
    for vf in v_grid:
        try:
            semiclassical_seeds(vf, lp, t0)
        except Exception as exc:
            raise ComputeError({"v_f": float(vf)}, exc) from exc
    try:
        sols = solve_saddles_batch(v_grid, lp, sq, kind, t0)
    except Exception as exc:  # saddle failures are batch-wide
        raise ComputeError({"v_f": "batch"}, exc) from exc
    neg = np.empty(v_grid.size)
    for i, vf in enumerate(v_grid):
        try:
            al = [s.alpha_total for s in sols[i]]
            c = _box_center(al)
            state = FockVector(_phi_from_solutions(sols[i], lp, sq, cutoff, c)).normalized()
            neg[i] = phi_d_negativity(state, np.array(al) - c, step, tol)
        except Exception as exc:
            raise ComputeError({"v_f": float(vf)}, exc) from exc
    return ScanTable(
        axes={"v_f": v_grid},
        cells={"negativity": neg},
        meta=dict(lp=lp, epsilon=sq.epsilon, theta=sq.theta, cutoff=cutoff, step=step, kind=kind),
    )


def default_vlim(lp: LaserParams) -> float:
    return float(np.sqrt(2 * lp.Up))


def _midpoints(v_lim, n, shift=0.0):
    h = 2 * v_lim / n
    return -v_lim + h * (np.arange(n) + 0.5 + shift)


def postselected_density(v_lim: float | None, n_samples: int, lp: LaserParams,
                         sq: SqueezeParams, cutoff: int = DEFAULT_CUTOFF,
                         kind: str = PHASE, shift: float = 0.0,
                         t0: float = 0.0) -> DensityOperator:
    """Midpoint-rule mixture of |Phi_d(v)><Phi_d(v)| over v in [-v_lim, v_lim].

    Each sample keeps its unnormalized weight; ``shift`` moves the nodes by a
    fraction of the step.
    """
    if v_lim is None:
        v_lim = default_vlim(lp)
    if not 0 < v_lim < np.sqrt(4 * lp.Up):
        raise ValueError("v_lim must lie in (0, sqrt(4 Up))")
    if int(n_samples) != n_samples or n_samples < 1:
        raise ValueError("n_samples must be a positive integer")
    amps, _, _ = phi_d_amplitudes(_midpoints(v_lim, int(n_samples), shift), lp, sq, kind,
                                  cutoff, t0, recenter="common")
    rho = amps.T @ amps.conj()
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho / np.trace(rho).real)


def postselected_entropy(v_lim, n_samples, lp, sq, cutoff=DEFAULT_CUTOFF, kind=PHASE,
                         shift=0.0, t0=0.0, method: str = "gram") -> float:
    """Linear entropy of the post-selected mixture.

    ``method="gram"`` uses exact coherent-state overlaps (no Fock cutoff);
    ``method="fock"`` goes through the truncated density operator.
    """
    if v_lim is None:
        v_lim = default_vlim(lp)
    if method == "fock":
        rho = postselected_density(v_lim, n_samples, lp, sq, cutoff, kind, shift, t0)
        return linear_entropy(rho)
    if method != "gram":
        raise ValueError(f"unknown method {method!r}")
    if not 0 < v_lim < np.sqrt(4 * lp.Up):
        raise ValueError("v_lim must lie in (0, sqrt(4 Up))")
    sols = solve_saddles_batch(_midpoints(v_lim, int(n_samples), shift), lp, sq, kind, t0)
    gram = phi_gram(sols, lp, sq)
    tr = np.trace(gram).real
    return float(1.0 - np.sum(np.abs(gram) ** 2) / tr**2)


def entropy_scan(eps_grid, ncyc_grid, lp: LaserParams, cutoff: int = DEFAULT_CUTOFF,
                 v_lim: float | None = None, n_samples: int = 96, theta: float = 0.0,
                 kind: str = PHASE, method: str = "gram") -> ScanTable:
    eps_grid = np.asarray(eps_grid, dtype=float)
    ncyc_grid = np.asarray(ncyc_grid, dtype=int)
    if eps_grid.size == 0 or ncyc_grid.size == 0:
        raise ValueError("grids must be nonempty")
    s_lin = np.empty((eps_grid.size, ncyc_grid.size))
    for i, eps in enumerate(eps_grid):
        for j, nc in enumerate(ncyc_grid):
            lpj = lp.with_(n_cyc=int(nc))
            try:
                sq = lpj.squeezing(eps, theta)
                s_lin[i, j] = postselected_entropy(v_lim, n_samples, lpj, sq, cutoff, kind,
                                                   method=method)
            except Exception as exc:
                raise ComputeError({"epsilon": float(eps), "n_cyc": int(nc)}, exc) from exc
    return ScanTable(
        axes={"epsilon": eps_grid, "n_cyc": ncyc_grid},
        cells={"S_lin": s_lin},
        meta=dict(lp=lp, cutoff=cutoff, n_samples=n_samples,
                  v_lim=default_vlim(lp) if v_lim is None else v_lim, theta=theta, kind=kind,
                  method=method),
    )
