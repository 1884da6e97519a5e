"""Saddle-point machinery for direct ionization by a squeezed driver.

Integration variables are ordered (t1, x1) for phase squeezing and
(t1, x1, x2, v) for amplitude squeezing. The action used to locate saddles
is

    S = S_cl(v, t, t1) - Ip (t1 - t0) - x2 (v - v_f) - (i a / 2) u^2 - (i/2) Q,

with p1 = v + A_cl(t1), u = x1 + i p1 / a, a = 0.8 Ip and Q = alpha * alpha~,
the holomorphic continuation of |alpha|^2. Up to the x1-independent term
(i/2) p1^2 / a this is the dipole-Gaussian action; that term is moved into
the prefactor as exp(-p1^2 / 2a), so at vanishing coupling the t1 equation is
exactly p1^2 / 2 + Ip = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import Diverged, NoSeed, SingularHessian
from .field import (
    DELTA_COUPLING, F_mode, LaserParams, SqueezeParams, delta_parts, f_mode, f_mode_prime,
)

PHASE = "phase"
AMPLITUDE = "amplitude"
KINDS = (PHASE, AMPLITUDE)

RESID_TOL = 1e-10
MAX_NEWTON = 100
MAX_STEPS = 40
LOG_STEP = 0.25
EIG_FLOOR = 1e-14


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    return kind == AMPLITUDE


def gaussian_width(Ip: float) -> float:
    return 0.8 * Ip


@dataclass(frozen=True)
class SaddleVars:
    t1: complex
    x1: complex
    x2: complex | None = None
    v: complex | None = None

    def as_array(self, kind: str) -> np.ndarray:
        if _check_kind(kind):
            if self.x2 is None or self.v is None:
                raise ValueError("amplitude kind needs x2 and v")
            return np.array([self.t1, self.x1, self.x2, self.v], dtype=complex)
        return np.array([self.t1, self.x1], dtype=complex)

    @classmethod
    def from_array(cls, z, kind: str) -> "SaddleVars":
        z = [complex(c) for c in z]
        if _check_kind(kind):
            return cls(*z)
        return cls(z[0], z[1])


@dataclass(frozen=True)
class SaddleSolution:
    vars: SaddleVars
    action: complex
    alpha_total: complex
    prefactor: complex
    residual_norm: float
    v_f: float = 0.0
    kind: str = PHASE
    seed_id: int = 0
    hessian_eigs: np.ndarray = dc_field(default=None, repr=False, compare=False)

    @property
    def t_ion(self) -> complex:
        return self.vars.t1


def tunneling_amplitude(x, Ip: float):
    """Dipole matrix element h(x) of a Gaussian ground state, a = 0.8 Ip."""
    if not Ip > 0:
        raise ValueError("Ip must be positive")
    a = gaussian_width(Ip)
    x = np.asarray(x)
    return np.sqrt(a / np.pi) * (np.pi * a) ** -0.25 * (x / a**2) * np.exp(-0.5 * a * x**2)


# --- core evaluator -------------------------------------------------------


def _evaluate(z, vf, lp: LaserParams, sq: SqueezeParams, amp: bool, lam=1.0,
              t0: float = 0.0, order: int = 2):
    """Action, gradient and Hessian on a batch.

    ``z`` has shape (N, nv); ``lam`` scales the coupling (alpha -> lam alpha)
    and is used by the continuation. Returns a dict of batched quantities.
    """
    z = np.asarray(z, dtype=complex)
    n, nv = z.shape
    t1, x1 = z[:, 0], z[:, 1]
    if amp:
        x2, v = z[:, 2], z[:, 3]
    else:
        x2 = np.zeros(n, dtype=complex)
        v = np.asarray(vf, dtype=complex) * np.ones(n)
    vf = np.asarray(vf, dtype=float) * np.ones(n)
    w, E0, Ip = lp.omega, lp.E0, lp.Ip
    a = gaussian_width(Ip)
    t = lp.t_final

    swt, cwt = np.sin(w * t1), np.cos(w * t1)
    A1 = -(E0 / w) * swt
    E1 = E0 * cwt
    dE1 = -E0 * w * swt
    p1 = v + A1
    IA = (E0 / w**2) * (np.cos(w * t) - cwt)
    IAA = (E0 / w) ** 2 * ((t - t1) / 2 - (np.sin(2 * w * t) - np.sin(2 * w * t1)) / (4 * w))
    Scl = 0.5 * (v**2 * (t - t1) + 2 * v * IA + IAA)
    u = x1 + 1j * p1 / a

    F1, F1t = F_mode(sq, lp, t1), F_mode(sq, lp, t1, conj=True)
    Ft, Ftt = F_mode(sq, lp, t), F_mode(sq, lp, t, conj=True)
    f1, f1t = f_mode(sq, lp, t1), f_mode(sq, lp, t1, conj=True)
    JF, JAF = delta_parts(t1, t, sq, lp)
    JFt, JAFt = delta_parts(t1, t, sq, lp, conj=True)
    k = DELTA_COUPLING
    al = lam * (k * (v * JF + JAF) - x2 * Ft + x1 * F1)
    alt = lam * (k * (v * JFt + JAFt) - x2 * Ftt + x1 * F1t)
    Q = al * alt

    S = Scl - Ip * (t1 - t0) - 0.5j * a * u**2 - 0.5j * Q
    if amp:
        S = S - x2 * (v - vf)
    out = dict(S=S, alpha=al, alpha_t=alt, Q=Q, p1=p1, E1=E1, u=u, f1t=f1t)
    if order < 1:
        return out

    def vec(*cols):
        return np.stack([np.broadcast_to(c, (n,)).astype(complex) for c in cols[:nv]], axis=1)

    zero = np.zeros(n, dtype=complex)
    one = np.ones(n, dtype=complex)
    dal = lam * vec(-k * p1 * F1 - x1 * f1t, F1 * one, -Ft * one, k * JF)
    dalt = lam * vec(-k * p1 * F1t - x1 * f1, F1t * one, -Ftt * one, k * JFt)
    du = vec(-1j * E1 / a, one, zero, 1j / a * one)
    dScl = vec(-0.5 * p1**2 - Ip, zero, -(v - vf), v * (t - t1) + IA - x2)

    grad = dScl - 1j * a * u[:, None] * du - 0.5j * (alt[:, None] * dal + al[:, None] * dalt)
    out["grad"] = grad
    if order < 2:
        return out

    dfp1t = f_mode_prime(sq, lp, t1, conj=True)
    dfp1 = f_mode_prime(sq, lp, t1)
    ddal = np.zeros((n, nv, nv), dtype=complex)
    ddalt = np.zeros((n, nv, nv), dtype=complex)
    ddu = np.zeros((n, nv, nv), dtype=complex)
    hess = np.zeros((n, nv, nv), dtype=complex)
    ddal[:, 0, 0] = lam * (k * E1 * F1 + k * p1 * f1t - x1 * dfp1t)
    ddalt[:, 0, 0] = lam * (k * E1 * F1t + k * p1 * f1 - x1 * dfp1)
    ddal[:, 0, 1] = ddal[:, 1, 0] = -lam * f1t
    ddalt[:, 0, 1] = ddalt[:, 1, 0] = -lam * f1
    ddu[:, 0, 0] = -1j * dE1 / a
    hess[:, 0, 0] = p1 * E1
    if amp:
        ddal[:, 0, 3] = ddal[:, 3, 0] = -k * lam * F1
        ddalt[:, 0, 3] = ddalt[:, 3, 0] = -k * lam * F1t
        hess[:, 0, 3] = hess[:, 3, 0] = -p1
        hess[:, 3, 3] = t - t1
        hess[:, 2, 3] = hess[:, 3, 2] = -1.0

    outer_u = du[:, :, None] * du[:, None, :]
    hess += -1j * a * (outer_u + u[:, None, None] * ddu)
    cross = dal[:, :, None] * dalt[:, None, :]
    hess += -0.5j * (cross + np.swapaxes(cross, 1, 2)
                     + al[:, None, None] * ddalt + alt[:, None, None] * ddal)
    out["hess"] = hess
    return out


def _scales(lp: LaserParams, nv: int) -> np.ndarray:
    k = np.sqrt(2 * lp.Ip)
    return np.array([lp.Ip, k, k, lp.E0 / lp.omega**2])[:nv]


def _scaled_norm(grad, lp):
    return np.max(np.abs(grad / _scales(lp, grad.shape[1])), axis=1)


# --- public single-point API ----------------------------------------------


def action_qo(vars: SaddleVars, v_f: float, lp: LaserParams, sq: SqueezeParams,
              kind: str = PHASE, t0: float = 0.0) -> complex:
    amp = _check_kind(kind)
    z = vars.as_array(kind)[None, :]
    return complex(_evaluate(z, v_f, lp, sq, amp, t0=t0, order=0)["S"][0])


def residuals(vars: SaddleVars, v_f: float, lp: LaserParams, sq: SqueezeParams,
              kind: str = PHASE, t0: float = 0.0) -> np.ndarray:
    """Analytic gradient of ``action_qo``: 2 entries (phase) or 4 (amplitude)."""
    amp = _check_kind(kind)
    z = vars.as_array(kind)[None, :]
    return _evaluate(z, v_f, lp, sq, amp, t0=t0, order=1)["grad"][0]


def hessian(vars: SaddleVars, v_f: float, lp: LaserParams, sq: SqueezeParams,
            kind: str = PHASE, t0: float = 0.0) -> np.ndarray:
    amp = _check_kind(kind)
    z = vars.as_array(kind)[None, :]
    return _evaluate(z, v_f, lp, sq, amp, t0=t0, order=2)["hess"][0]


def total_displacement_at(vars: SaddleVars, v_f, lp, sq, kind=PHASE, conj=False) -> complex:
    amp = _check_kind(kind)
    out = _evaluate(vars.as_array(kind)[None, :], v_f, lp, sq, amp, order=0)
    return complex(out["alpha_t" if conj else "alpha"][0])


def ionization_equation(vars: SaddleVars, v_f, lp, sq, kind=PHASE) -> complex:
    """[v + A(t1)]^2/2 + Ip + u E(t1) + (i/2) dQ/dt1, zero at every saddle."""
    return -residuals(vars, v_f, lp, sq, kind)[0]


# --- seeds ------------------------------------------------------------------


def semiclassical_seeds(v_f: float, lp: LaserParams, t0: float = 0.0) -> list:
    """Ionization times solving [v_f + A_cl(t1)]^2 / 2 + Ip = 0.

    Keeps Im t1 > 0 and Re t1 in [t0, t), sorted by Re t1.
    """
    kappa = np.sqrt(2 * lp.Ip)
    if abs(v_f) >= lp.E0 / lp.omega + kappa:
        raise NoSeed(f"|v_f| = {abs(v_f):g} beyond E0/omega + sqrt(2 Ip)")
    w = lp.omega
    t_end = lp.t_final
    period = 2 * np.pi / w
    roots = []
    for sign in (1.0, -1.0):
        zarg = w * (v_f + sign * 1j * kappa) / lp.E0
        base = np.arcsin(complex(zarg))
        for phase in (base, np.pi - base):
            tt = phase / w
            # shift to the first image at or after t0
            k0 = int(np.ceil((t0 - tt.real) / period - 1e-12))
            tk = tt + k0 * period
            while tk.real < t_end - 1e-9 * period:
                if tk.imag > 0 and tk.real >= t0 - 1e-12:
                    roots.append(complex(tk))
                tk += period
    roots.sort(key=lambda c: (c.real, c.imag))
    # dedupe branch coincidences
    out = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-9:
            out.append(r)
    return out


def _seed_point(t1, v_f, lp, amp):
    """Saddle at vanishing coupling for a given ionization time."""
    a = gaussian_width(lp.Ip)
    w, E0 = lp.omega, lp.E0
    p1 = v_f - (E0 / w) * np.sin(w * t1)
    x1 = -1j * p1 / a
    if not amp:
        return [t1, x1]
    t = lp.t_final
    IA = (E0 / w**2) * (np.cos(w * t) - np.cos(w * t1))
    x2 = v_f * (t - t1) + IA
    return [t1, x1, x2, v_f]


# --- Newton with continuation ----------------------------------------------


def _newton(z, vf, lp, sq, amp, lam, max_iter=MAX_NEWTON, tol=RESID_TOL):
    """Damped Newton on a batch; returns (z, converged mask, norms, iterations)."""
    z = z.copy()
    ev = _evaluate(z, vf, lp, sq, amp, lam, order=2)
    norm = _scaled_norm(ev["grad"], lp)
    done = norm < tol
    it = 0
    while not np.all(done) and it < max_iter:
        it += 1
        act = ~done
        dz = np.linalg.solve(ev["hess"][act], -ev["grad"][act][..., None])[..., 0]
        step = np.ones(dz.shape[0])
        idx = np.flatnonzero(act)
        for _ in range(12):
            trial = z.copy()
            trial[idx] = z[idx] + step[:, None] * dz
            ev_t = _evaluate(trial[idx], np.asarray(vf)[idx] if np.ndim(vf) else vf,
                             lp, sq, amp, lam, order=1)
            nt = _scaled_norm(ev_t["grad"], lp)
            bad = ~(nt < norm[idx]) & np.isfinite(nt)
            bad |= ~np.isfinite(nt)
            if not np.any(bad):
                break
            step[bad] *= 0.5
        z[idx] = z[idx] + step[:, None] * dz
        ev = _evaluate(z, vf, lp, sq, amp, lam, order=2)
        norm = _scaled_norm(ev["grad"], lp)
        done = norm < tol
    return z, done, norm, ev


def _branch_sqrt(hess, prev=None):
    """prod_k sqrt(2 pi / (i lam_k)) with sign fixed by continuity against ``prev``."""
    eig = np.linalg.eigvals(hess)
    if np.any(np.abs(eig) < EIG_FLOOR):
        raise SingularHessian(f"Hessian eigenvalue below {EIG_FLOOR:g}: {eig}")
    val = np.prod(np.sqrt(2 * np.pi / (1j * eig)), axis=-1)
    if prev is not None:
        flip = np.abs(np.angle(val / prev)) > np.pi / 2
        val = np.where(flip, -val, val)
    return val, eig


def _continue_batch(z0, vf, lp, sq, amp, seed_ids, t0=0.0, max_steps=MAX_STEPS,
                    log_step=LOG_STEP, path=None):
    """Continue a batch of seeds from lam ~ 0 to lam = 1 in log10 lam.

    ``path`` (optional list) receives (lam, prefactor-sqrt) per accepted step.
    """
    eps = sq.epsilon
    log_start = min(0.0, max(-10.0, np.log10(1e-7 / eps)))
    lam = 10.0**log_start
    z, done, norm, ev = _newton(z0, vf, lp, sq, amp, lam)
    if not np.all(done):
        bad = int(np.flatnonzero(~done)[0])
        raise Diverged(seed_ids[bad], f"no convergence at coupling scale {lam * eps:.3g}")
    sq_root, _ = _branch_sqrt(ev["hess"])
    if path is not None:
        path.append((lam, sq_root.copy()))
    z_prev, loglam_prev = None, None
    loglam = log_start
    step = log_step
    n_steps = 0
    while loglam < 0.0:
        if n_steps >= max_steps:
            raise Diverged(seed_ids[0], "continuation step budget exhausted")
        new_log = min(0.0, loglam + step)
        if z_prev is not None:
            pred = z + (z - z_prev) * ((new_log - loglam) / (loglam - loglam_prev))
        else:
            pred = z
        z_new, ok, norm_new, ev_new = _newton(pred, vf, lp, sq, amp, 10.0**new_log)
        if not np.all(ok):
            if step < log_step / 64:
                bad = int(np.flatnonzero(~ok)[0])
                raise Diverged(seed_ids[bad], f"Newton failed near coupling {10**new_log * eps:.3g}")
            step *= 0.5
            continue
        z_prev, loglam_prev = z, loglam
        z, loglam, norm, ev = z_new, new_log, norm_new, ev_new
        sq_root, _ = _branch_sqrt(ev["hess"], sq_root)
        if path is not None:
            path.append((10.0**loglam, sq_root.copy()))
        n_steps += 1
        step = min(log_step, 2 * step)
    return z, norm, ev, sq_root


def _prefactor(z, ev, sq_root, lp):
    a = gaussian_width(lp.Ip)
    h0 = np.sqrt(a / np.pi) * (np.pi * a) ** -0.25 / a**2
    # exp(-iS) carries exp(-Q/2); the coherent state carries exp(-|alpha|^2/2) itself
    return (h0 * z[:, 1] * sq_root
            * np.exp(-0.5 * ev["p1"] ** 2 / a - 1j * ev["S"] + 0.5 * np.abs(ev["alpha"]) ** 2))


def solve_saddles_batch(v_grid, lp: LaserParams, sq: SqueezeParams, kind: str = PHASE,
                        t0: float = 0.0, path=None) -> list:
    """Solve every (v_f, seed) pair in one vectorized continuation.

    Returns one list of SaddleSolution per entry of ``v_grid``.
    """
    amp = _check_kind(kind)
    v_grid = np.atleast_1d(np.asarray(v_grid, dtype=float))
    rows, vf_rows, owner, sid = [], [], [], []
    for iv, vf in enumerate(v_grid):
        seeds = semiclassical_seeds(vf, lp, t0)
        if not seeds:
            raise NoSeed(f"no ionization times for v_f = {vf:g}")
        for k, t1 in enumerate(seeds):
            rows.append(_seed_point(t1, vf, lp, amp))
            vf_rows.append(vf)
            owner.append(iv)
            sid.append(k)
    z0 = np.array(rows, dtype=complex)
    vf_arr = np.array(vf_rows)
    z, norm, ev, sq_root = _continue_batch(z0, vf_arr, lp, sq, amp, sid, t0, path=path)

    G = _prefactor(z, ev, sq_root, lp)
    al = ev["alpha"]
    eigs = np.linalg.eigvals(ev["hess"])
    out = [[] for _ in v_grid]
    for j in range(z.shape[0]):
        out[owner[j]].append(SaddleSolution(
            vars=SaddleVars.from_array(z[j], kind),
            action=complex(ev["S"][j]),
            alpha_total=complex(al[j]),
            prefactor=complex(G[j]),
            residual_norm=float(norm[j]),
            v_f=float(vf_arr[j]),
            kind=kind,
            seed_id=sid[j],
            hessian_eigs=eigs[j],
        ))
    for sols in out:
        if any(s.vars.t1.imag <= 0 for s in sols):
            sols[:] = [s for s in sols if s.vars.t1.imag > 0]
    return out


def solve_saddles(v_f: float, lp: LaserParams, sq: SqueezeParams, kind: str = PHASE,
                  t0: float = 0.0) -> list:
    return solve_saddles_batch([v_f], lp, sq, kind, t0)[0]


def spa_prefactor(sol: SaddleSolution, lp: LaserParams, sq: SqueezeParams,
                  kind: str = PHASE) -> complex:
    """G(theta_s) recomputed from the saddle coordinates.

    The overall sign of the Hessian square-root product is taken from the
    branch tracked along the continuation (stored on ``sol``); the principal
    branch is used when no tracked value is available.
    """
    amp = _check_kind(kind)
    z = sol.vars.as_array(kind)[None, :]
    ev = _evaluate(z, sol.v_f, lp, sq, amp, order=2)
    root, _ = _branch_sqrt(ev["hess"])
    G = _prefactor(z, ev, root, lp)[0]
    if sol.prefactor and abs(np.angle(G / sol.prefactor)) > np.pi / 2:
        G = -G
    return complex(G)
