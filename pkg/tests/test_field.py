import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from squeezed_ati.field import (
    F_mode, LaserParams, SqueezeParams, classical_field, delta_displacement, f_mode,
    f_mode_prime, meanfield_displacement, total_displacement, vector_potential,
)


def fd(fun, t, h=1e-3):
    """Five-point central difference."""
    return (-fun(t + 2 * h) + 8 * fun(t + h) - 8 * fun(t - h) + fun(t - 2 * h)) / (12 * h)


def test_laser_derived_quantities(lp):
    # plug-in arithmetic: 0.053^2 / (4 * 0.057^2)
    assert lp.Up == pytest.approx(0.2161434287, rel=1e-9)
    assert lp.keldysh == pytest.approx(1.0755, abs=1e-4)
    assert lp.t_final == pytest.approx(4 * np.pi / 0.057)


def test_laser_validation():
    with pytest.raises(ValueError):
        LaserParams(E0=-1.0)
    with pytest.raises(ValueError):
        LaserParams(n_cyc=0)
    with pytest.raises(ValueError):
        SqueezeParams.from_epsilon(1e-9, 0.0, 1e-8)


def test_squeeze_epsilon_roundtrip():
    for eps in (1e-8, 1e-5, 10**-2.9):
        assert SqueezeParams.from_epsilon(eps, 0.0).epsilon == pytest.approx(eps, rel=1e-12)


def test_classical_field_examples(lp, rng):
    E, A = classical_field(0.0, lp)
    assert E == pytest.approx(0.053)
    for n in range(1, 4):
        assert abs(classical_field(2 * np.pi * n / lp.omega, lp)[1]) < 1e-12
    t = rng.uniform(0, lp.t_final, 100)
    dA = fd(lambda s: vector_potential(s, lp), t)
    assert np.max(abs(-dA - classical_field(t, lp)[0])) < 1e-8 * lp.E0


def test_f_mode_examples(lp, rng):
    t = rng.uniform(0, lp.t_final, 1000)
    sq0 = SqueezeParams(0.0, 0.3, lp.g)
    assert np.allclose(f_mode(sq0, lp, t), lp.g * np.exp(-1j * lp.omega * t), rtol=1e-14)
    sq = lp.squeezing(1e-3, 0.0)
    assert f_mode(sq, lp, 0.0) == pytest.approx(1e-3, rel=1e-12)
    for theta in (0.0, np.pi, 1.1):
        assert np.max(abs(f_mode(lp.squeezing(1e-3, theta), lp, t))) <= 1e-3 * (1 + 1e-12)


def test_F_mode_examples(lp, rng):
    eps = 1e-3
    ph = lp.squeezing(eps, 0.0)
    # exact value i g e^{-r}/w, negligible against eps/w
    assert abs(F_mode(ph, lp, lp.t_final)) / (eps / lp.omega) < 1e-9
    am = lp.squeezing(eps, np.pi)
    assert F_mode(am, lp, 0.0) == pytest.approx(1j * eps / lp.omega, rel=1e-9)
    t = rng.uniform(0, lp.t_final, 100)
    for sq in (ph, am, lp.squeezing(eps, 0.7)):
        dF = fd(lambda s: F_mode(sq, lp, s), t)
        assert np.max(abs(dF + np.conj(f_mode(sq, lp, t)))) < 1e-8 * eps


def test_f_prime_and_holomorphic_conjugates(lp, rng):
    sq = lp.squeezing(1e-4, 0.9)
    z = rng.uniform(0, 200, 20) + 1j * rng.uniform(-30, 30, 20)
    for conj in (False, True):
        d = fd(lambda s: f_mode(sq, lp, s, conj), z, 1e-2)
        assert np.allclose(d, f_mode_prime(sq, lp, z, conj), rtol=1e-8)
    assert np.allclose(f_mode(sq, lp, z, True), np.conj(f_mode(sq, lp, np.conj(z))), rtol=1e-13)
    assert np.allclose(F_mode(sq, lp, z, True), np.conj(F_mode(sq, lp, np.conj(z))), rtol=1e-13)


def test_periodicity(lp, rng):
    sq = lp.squeezing(1e-3, 0.4)
    t = rng.uniform(0, lp.period, 50)
    T = lp.period
    for fun in (lambda s: f_mode(sq, lp, s), lambda s: F_mode(sq, lp, s),
                lambda s: classical_field(s, lp)[0], lambda s: vector_potential(s, lp)):
        scale = np.max(abs(fun(t)))
        assert np.max(abs(fun(t + T) - fun(t))) < 1e-12 * scale


# --- displacements -------------------------------------------------------


def test_delta_empty_interval(lp):
    sq = lp.squeezing(1e-3, 0.0)
    assert delta_displacement(0.3, 123.0, 123.0, sq, lp) == 0
    assert delta_displacement(0.3, 10 + 5j, 10 + 5j, sq, lp) == 0


def test_delta_closed_vs_quad(lp, rng):
    for theta in (0.0, np.pi):
        sq = lp.squeezing(10 ** rng.uniform(-5, -2), theta)
        for _ in range(10):
            v = complex(rng.uniform(-1, 1), rng.uniform(-0.3, 0.3))
            t1 = complex(rng.uniform(0, lp.t_final), rng.uniform(0, 40))
            c = delta_displacement(v, t1, lp.t_final, sq, lp)
            q = delta_displacement(v, t1, lp.t_final, sq, lp, method="quad")
            assert abs(c - q) <= 1e-10 * abs(c)


def test_delta_linear_in_eps(lp):
    w = lp.omega
    # e^{-2r} ~ 1e-14 here, so the non-scaling e^{-r} piece of F is negligible
    for theta in (0.0, np.pi):
        a = delta_displacement(0.2, 1.0, 5 * np.pi / w, lp.squeezing(0.05, theta), lp)
        b = delta_displacement(0.2, 1.0, 5 * np.pi / w, lp.squeezing(0.1, theta), lp)
        assert abs(b / a - 2) < 1e-9


def test_delta_grows_for_earlier_ionization(lp):
    w = lp.omega
    sq = lp.squeezing(1e-3, 0.0)
    t1 = np.linspace(-np.pi / (2 * w), 4 * np.pi / w, 12)
    mag = [abs(delta_displacement(0.0, x, 5 * np.pi / w, sq, lp)) for x in t1]
    assert np.all(np.diff(mag) < 0)


def test_delta_conjugate_consistency(lp, rng):
    sq = lp.squeezing(1e-3, 0.6)
    for _ in range(10):
        v = complex(*rng.uniform(-1, 1, 2))
        t1 = complex(rng.uniform(0, 100), rng.uniform(0, 30))
        d = delta_displacement(v, t1, lp.t_final, sq, lp, conj=True)
        ref = np.conj(delta_displacement(np.conj(v), np.conj(t1), lp.t_final, sq, lp))
        assert abs(d - ref) <= 1e-12 * abs(ref)


def test_delta_unknown_method(lp):
    with pytest.raises(ValueError):
        delta_displacement(0, 0, 1, lp.squeezing(1e-3, 0), lp, method="simpson")


def test_meanfield(lp, rng):
    w = lp.omega
    t2 = 5 * np.pi / w
    assert meanfield_displacement(0.2, 40.0, 40.0, lp) == 0
    sq0 = SqueezeParams(0.0, 0.0, lp.g)
    for _ in range(5):
        v1, t1 = rng.uniform(-0.5, 0.5), rng.uniform(-np.pi / (2 * w), 4 * np.pi / w)
        mf = meanfield_displacement(v1, t1, t2, lp)

        # order-swapped single integral: int (t2 - tau) [v1 + A] e^{iw tau}
        def g(tau, part):
            val = (t2 - tau) * (v1 + vector_potential(tau, lp)) * np.exp(1j * w * tau)
            return val.real if part == 0 else val.imag
        re = quad(g, t1, t2, args=(0,), epsabs=0, epsrel=1e-12, limit=200)[0]
        im = quad(g, t1, t2, args=(1,), epsabs=0, epsrel=1e-12, limit=200)[0]
        ref = 0.5 * lp.g * (re + 1j * im)
        assert abs(mf - ref) <= 1e-8 * abs(ref)
        d = delta_displacement(v1, t1, t2, sq0, lp)
        assert abs(mf - d) > 0.1 * abs(d)


def test_total_displacement(lp, rng):
    sq = lp.squeezing(1e-3, np.pi)
    t = lp.t_final
    for _ in range(5):
        t1, x2, v, x1 = rng.uniform(0, t), rng.uniform(-50, 50), rng.uniform(-1, 1), rng.uniform(-3, 3)
        ref = (delta_displacement(v, t1, t, sq, lp) - x2 * F_mode(sq, lp, t)
               + x1 * F_mode(sq, lp, t1))
        assert abs(total_displacement(t1, x2, v, x1, t, sq, lp) - ref) <= 1e-12 * abs(ref)
    tiny = SqueezeParams(0.0, 0.0, 1e-300)
    assert abs(total_displacement(100 + 20j, 5.0, 0.3, 1 + 1j, t, tiny, lp)) < 1e-290
    ph = lp.squeezing(1e-3, 0.0)
    a0 = total_displacement(50.0, 0.0, 0.2, 1.0, t, ph, lp)
    a1 = total_displacement(50.0, 30.0, 0.2, 1.0, t, ph, lp)
    assert abs(a1 - a0) < 1e-9 * abs(a0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(0, 200), st.floats(0, 200), st.floats(-5, -2))
def test_delta_additive_over_intervals(v, ta, tb, log_eps):
    lp = LaserParams()
    sq = lp.squeezing(10**log_eps, 0.0)
    t = lp.t_final
    lhs = delta_displacement(v, ta, t, sq, lp)
    rhs = delta_displacement(v, ta, tb, sq, lp) + delta_displacement(v, tb, t, sq, lp)
    assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), 1e-3 * 10**log_eps)
