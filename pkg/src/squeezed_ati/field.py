"""Classical driver, squeezed-frame mode functions and electron-induced displacements.

Atomic units throughout. Every function of time accepts complex arguments
and is evaluated by analytic continuation. The ``conj`` flag selects the
holomorphic conjugate X~(tau) = conj(X(conj(tau))), which is the object the
saddle-point equations need in place of a pointwise complex conjugate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

# coefficient of the continuum displacement: the [v + A] A_L cross term of
# the minimal-coupling Hamiltonian carries e/m, so delta = int [v + A] F
DELTA_COUPLING = 1.0


@dataclass(frozen=True)
class LaserParams:
    E0: float = 0.053
    omega: float = 0.057
    g: float = 1e-8
    Ip: float = 0.5
    n_cyc: int = 2

    def __post_init__(self):
        for name in ("E0", "omega", "g", "Ip"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.n_cyc) != self.n_cyc or self.n_cyc < 1:
            raise ValueError("n_cyc must be a positive integer")
        object.__setattr__(self, "n_cyc", int(self.n_cyc))

    @property
    def t_final(self) -> float:
        """Measurement time, a whole number of cycles."""
        return 2.0 * np.pi * self.n_cyc / self.omega

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def Up(self) -> float:
        return self.E0**2 / (4.0 * self.omega**2)

    @property
    def keldysh(self) -> float:
        return np.sqrt(2.0 * self.Ip) * self.omega / self.E0

    def with_(self, **kw) -> "LaserParams":
        d = dict(E0=self.E0, omega=self.omega, g=self.g, Ip=self.Ip, n_cyc=self.n_cyc)
        d.update(kw)
        return LaserParams(**d)

    def squeezing(self, epsilon: float, theta: float) -> "SqueezeParams":
        return SqueezeParams.from_epsilon(epsilon, theta, self.g)


@dataclass(frozen=True)
class SqueezeParams:
    r: float
    theta: float
    g: float = 1e-8

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("squeeze magnitude r must be nonnegative")
        if not self.g > 0:
            raise ValueError("coupling g must be positive")

    @property
    def epsilon(self) -> float:
        return self.g * np.exp(self.r)

    @classmethod
    def from_epsilon(cls, epsilon: float, theta: float, g: float = 1e-8) -> "SqueezeParams":
        if epsilon < g * (1 - 1e-12):
            raise ValueError(f"epsilon={epsilon:g} below the unsqueezed coupling g={g:g}")
        return cls(max(float(np.log(epsilon / g)), 0.0), theta, g)

    def with_epsilon(self, epsilon: float) -> "SqueezeParams":
        return SqueezeParams.from_epsilon(epsilon, self.theta, self.g)


def classical_field(t, lp: LaserParams):
    """(E_cl, A_cl) with E_cl = E0 cos(wt) and E_cl = -dA_cl/dt."""
    wt = lp.omega * np.asarray(t)
    return lp.E0 * np.cos(wt), -(lp.E0 / lp.omega) * np.sin(wt)


def vector_potential(t, lp: LaserParams):
    return -(lp.E0 / lp.omega) * np.sin(lp.omega * np.asarray(t))


def _cs(sq: SqueezeParams):
    return np.cosh(sq.r), np.sinh(sq.r)


def f_mode(sq: SqueezeParams, lp: LaserParams, t, conj: bool = False):
    """f(xi, t) = g[cosh r e^{-iwt} + sinh r e^{i(wt - theta)}]."""
    c, s = _cs(sq)
    wt = lp.omega * np.asarray(t)
    if conj:
        return sq.g * (c * np.exp(1j * wt) + s * np.exp(-1j * (wt - sq.theta)))
    return sq.g * (c * np.exp(-1j * wt) + s * np.exp(1j * (wt - sq.theta)))


def F_coefficients(sq: SqueezeParams, lp: LaserParams, conj: bool = False):
    """(P, M) such that F = P e^{iwt} + M e^{-iwt}."""
    c, s = _cs(sq)
    P = 1j * sq.g * c / lp.omega
    M = -1j * sq.g * s * np.exp(1j * sq.theta) / lp.omega
    if conj:
        return np.conj(M), np.conj(P)
    return P, M


def F_mode(sq: SqueezeParams, lp: LaserParams, t, conj: bool = False):
    """F(xi, t) = ig[cosh r e^{iwt} - sinh r e^{-i(wt - theta)}]/w, with dF/dt = -conj(f)."""
    P, M = F_coefficients(sq, lp, conj)
    wt = lp.omega * np.asarray(t)
    return P * np.exp(1j * wt) + M * np.exp(-1j * wt)


def f_mode_prime(sq: SqueezeParams, lp: LaserParams, t, conj: bool = False):
    """Time derivative of f (or of its holomorphic conjugate)."""
    c, s = _cs(sq)
    w = lp.omega
    wt = w * np.asarray(t)
    if conj:
        return sq.g * 1j * w * (c * np.exp(1j * wt) - s * np.exp(-1j * (wt - sq.theta)))
    return sq.g * 1j * w * (-c * np.exp(-1j * wt) + s * np.exp(1j * (wt - sq.theta)))


def _expint(k, w, t1, t):
    """int_{t1}^{t} e^{ikw tau} d tau for integer k != 0."""
    return (np.exp(1j * k * w * t) - np.exp(1j * k * w * t1)) / (1j * k * w)


def delta_parts(t1, t, sq: SqueezeParams, lp: LaserParams, conj: bool = False):
    """(J_F, J_AF) with J_F = int F and J_AF = int A_cl F over [t1, t].

    delta(v) = DELTA_COUPLING (v J_F + J_AF).
    """
    w = lp.omega
    P, M = F_coefficients(sq, lp, conj)
    a0 = 1j * lp.E0 / (2.0 * w)  # A_cl = a0 e^{iwt} - a0 e^{-iwt}
    e1, em1 = _expint(1, w, t1, t), _expint(-1, w, t1, t)
    e2, em2 = _expint(2, w, t1, t), _expint(-2, w, t1, t)
    JF = P * e1 + M * em1
    JAF = a0 * P * e2 + a0 * (M - P) * (np.asarray(t) - t1) - a0 * M * em2
    return JF, JAF


def delta_displacement(v, t1, t, sq: SqueezeParams, lp: LaserParams,
                       conj: bool = False, method: str = "closed"):
    """Continuum displacement delta = int_{t1}^{t} [v + A_cl(tau)] F(xi, tau) d tau.

    ``method="closed"`` uses the exact trigonometric antiderivative and
    accepts complex/array inputs; ``method="quad"`` integrates adaptively
    along the straight path from t1 to t (scalars only).
    """
    if method == "closed":
        JF, JAF = delta_parts(t1, t, sq, lp, conj)
        return DELTA_COUPLING * (v * JF + JAF)
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")
    dt = complex(t) - complex(t1)

    def integrand(s):
        tau = complex(t1) + s * dt
        return (v + vector_potential(tau, lp)) * F_mode(sq, lp, tau, conj)

    # absolute floor tied to the integrand scale so that a vanishing real or
    # imaginary part does not stall the relative criterion
    scale = max(abs(integrand(s)) for s in np.linspace(0.0, 1.0, 33))
    val, _ = quad(integrand, 0.0, 1.0, complex_func=True, epsabs=1e-14 * scale,
                  epsrel=1e-12, limit=500)
    return DELTA_COUPLING * dt * val


def meanfield_displacement(v1, t1, t2, lp: LaserParams):
    """Mean-field comparison (g/2) int_{t1}^{t2} dt' int_{t1}^{t'} [v1 + A_cl] e^{iw tau} d tau.

    The inner integral is done in closed form; the outer one by quadrature.
    """
    w = lp.omega
    a0 = 1j * lp.E0 / (2.0 * w)

    def inner(tp):
        # [v1 + a0 e^{iwt} - a0 e^{-iwt}] e^{iwt}
        return (v1 * _expint(1, w, t1, tp) + a0 * _expint(2, w, t1, tp) - a0 * (tp - t1))

    scale = max(abs(inner(tp)) for tp in np.linspace(t1, t2, 33)) * abs(t2 - t1)
    val, _ = quad(inner, t1, t2, complex_func=True, epsabs=1e-14 * scale, epsrel=1e-12,
                  limit=500)
    return 0.5 * lp.g * val


def total_displacement(t1, x2, v, x1, t, sq: SqueezeParams, lp: LaserParams,
                       conj: bool = False):
    """alpha = delta(v, t, t1) - x2 F(xi, t) + x1 F(xi, t1).

    For phase squeezing pass x2 = 0 (the term vanishes there anyway since F(t) = 0).
    """
    return (delta_displacement(v, t1, t, sq, lp, conj)
            - x2 * F_mode(sq, lp, t, conj) + x1 * F_mode(sq, lp, t1, conj))
