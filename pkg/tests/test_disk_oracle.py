import ast
import inspect
import math

import numpy as np
import pytest
import scipy.optimize as so
import scipy.special as ss
from hypothesis import given, settings, strategies as st

from wentzell_fem import bessel, disk_oracle
from wentzell_fem.disk_oracle import (
    NearSpectrumError,
    dispersion_roots,
    dispersion_table_csv,
    growing_rates,
    modal_reference,
    radial_resolvent_fd,
)

# root of (mu^2 + 2.5) I_1(mu) = 2 mu I_0(mu), solved with scipy's brentq and
# scipy.special as an independent check of the in-repo bisection
SIGMA1_K2_L05 = 2.7336483558501876


class TestBessel:
    @pytest.mark.parametrize("n", [0, 1, 2, 5, 9])
    def test_against_scipy(self, n):
        x = np.linspace(0.0, 30.0, 601)
        assert np.abs(bessel.jn(n, x) - ss.jv(n, x)).max() < 1e-13
        assert np.max(np.abs(bessel.iv(n, x) - ss.iv(n, x)) / np.maximum(ss.iv(n, x), 1e-300)) < 1e-13

    def test_first_zero_of_j0(self):
        assert abs(bessel.jn(0, 2.404825557695773)) < 1e-9

    @settings(max_examples=60, deadline=None)
    @given(st.floats(1e-3, 20.0), st.integers(1, 12))
    def test_recurrences(self, x, n):
        I = bessel.in_all(n + 1, x)
        J = bessel.jn_all(n + 1, x)
        # Z_{n-1} -/+ Z_{n+1} = (2n/x) Z_n
        assert abs(I[n - 1] - I[n + 1] - 2 * n / x * I[n]) <= 1e-12 * I[n - 1]
        assert abs(J[n - 1] + J[n + 1] - 2 * n / x * J[n]) <= 1e-12 * max(1.0, abs(J[n - 1]))

    def test_scaled_at_origin(self):
        for n in range(6):
            assert bessel.jn_scaled(n, 0.0) == pytest.approx(1 / (2**n * math.factorial(n)))
            assert bessel.in_scaled(n, 0.0) == pytest.approx(1 / (2**n * math.factorial(n)))

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel.jn(0, 31.0)


def test_sigma1_matches_independent_root():
    f = lambda mu: (mu**2 + 2.5) * ss.iv(1, mu) - 2 * mu * ss.iv(0, mu)
    mu = so.brentq(f, 1.0, 2.5, xtol=1e-15)
    assert mu == pytest.approx(1.65, abs=0.01)
    assert mu**2 == pytest.approx(SIGMA1_K2_L05, rel=1e-11)
    rates = growing_rates(2.0, 0.5, 6)
    assert rates[1] == pytest.approx(SIGMA1_K2_L05, rel=1e-11)


def test_growing_modes_are_exactly_1_2_3():
    rates = growing_rates(2.0, 0.5, 10, 25.0)
    assert sorted(rates) == [1, 2, 3]


def test_harmonic_mode_is_zero_root():
    zero = [r for r in dispersion_roots(1.0, 0.5, 4) if r.branch == "zero"]
    assert sorted(r.n for r in zero) == [0, 2]


def test_residuals_and_signs():
    roots = dispersion_roots(2.0, 0.5, 6, 20.0)
    assert all(r.residual < 1e-10 for r in roots)
    for r in roots:
        if r.branch == "growing":
            assert r.sigma > 0
        elif r.branch == "decaying":
            assert r.sigma < 0
            assert r.bracket[0] <= r.mu <= r.bracket[1]


def test_decaying_roots_satisfy_ratio_form():
    k, l = 2.0, 0.5
    for r in dispersion_roots(k, l, 4, 15.0):
        if r.branch != "decaying":
            continue
        mu, n = r.mu, r.n
        jp = ss.jvp(n, mu)
        lhs = -(mu**2) * ss.jv(n, mu)
        rhs = k * mu * jp - l * n * n * ss.jv(n, mu)
        assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(mu) ** 2)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.05, 3.0), st.integers(0, 6))
def test_growing_root_exists_iff_marginal_positive(k, l, n):
    rates = growing_rates(k, l, n, 30.0)
    marginal = k * n - l * n * n if n else k - 2.0
    if abs(marginal) < 1e-3:
        return
    assert (n in rates) == (marginal > 0)


def test_branch_continuity():
    # mode 2 with k=1: the growing rate vanishes as l -> k/n = 0.5 from below
    sig = [growing_rates(1.0, l, 2)[2] for l in (0.4, 0.45, 0.49, 0.499)]
    assert all(a > b for a, b in zip(sig, sig[1:]))
    assert sig[-1] < 0.01


def test_dispersion_csv():
    text = dispersion_table_csv(dispersion_roots(2.0, 0.5, 1, 5.0))
    assert text.splitlines()[0] == "n,sigma,branch,residual"


class TestRadialFD:
    def test_constant(self):
        sol = radial_resolvent_fd(0, 3.0, 1.0, 1.0, lambda r: 2.0 + 0 * r)
        assert np.abs(sol.values - 2.0 / 3.0).max() < 1e-8

    def test_harmonic(self):
        lam = 5.0
        sol = radial_resolvent_fd(2, lam, 1.0, 0.5, lambda r: lam * r**2)
        assert np.abs(sol.values - sol.grid**2).max() < 1e-6
        assert len(sol.grid) >= 10_000

    @pytest.mark.parametrize("n", [0, 1, 3])
    def test_self_convergence(self, n):
        H = lambda r: np.exp(-2 * r**2) * r**n
        sols = [radial_resolvent_fd(n, 5.0, 1.0, 1.0, H, points=N + 1) for N in (500, 1000, 2000, 4000)]
        coarse = [s.values[:: (len(s.values) - 1) // 500] for s in sols]
        # Richardson extrapolant from the two finest grids
        ref = coarse[-1] + (coarse[-1] - coarse[-2]) / 3
        errs = [np.abs(c - ref).max() for c in coarse[:-1]]
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all(np.abs(orders - 2.0) <= 0.1)

    def test_regularity(self):
        sol = radial_resolvent_fd(1, 5.0, 1.0, 1.0, lambda r: r)
        assert abs(sol.values[0]) < 1e-6 * np.abs(sol.values).max()
        sol0 = radial_resolvent_fd(0, 5.0, 1.0, 1.0, lambda r: np.cos(r))
        assert abs(sol0.values[1] - sol0.values[0]) < 1e-6

    def test_sample_shape_checked(self):
        with pytest.raises(ValueError):
            radial_resolvent_fd(0, 1.0, 1.0, 1.0, np.ones(10))

    def test_amplification_near_growth_rate(self):
        # lambda = sigma_1 is a pole of the mode-1 resolvent (k=2, l=0.5)
        H = lambda r: r
        near = radial_resolvent_fd(1, SIGMA1_K2_L05, 2.0, 0.5, H, points=2001)
        far = radial_resolvent_fd(1, SIGMA1_K2_L05 + 1.0, 2.0, 0.5, H, points=2001)
        assert np.abs(near.values).max() > 1e3 * np.abs(far.values).max()

    def test_exact_singularity_raises(self):
        # n=0, lam=0 with R constant: the scheme annihilates constants when k != 0
        with pytest.raises(NearSpectrumError):
            radial_resolvent_fd(0, 0.0, 1.0, 1.0, lambda r: 1.0 + 0 * r, points=101)


class TestModal:
    def test_initial_shape(self):
        root = next(r for r in dispersion_roots(2.0, 0.5, 1) if r.branch == "growing")
        pts = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
        assert np.allclose(modal_reference(root, 0.0, pts), [1.0, 0.0, -1.0], atol=1e-14)

    def test_decay(self):
        root = next(r for r in dispersion_roots(-1.0, 1.0, 2) if r.branch == "decaying" and r.n == 2)
        pts = np.array([[0.5, 0.2]])
        vals = [abs(modal_reference(root, t, pts)[0]) for t in (0, 1, 2, 4, 8)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3 * vals[0]

    def test_growth_amplitude(self):
        root = growing_rates(2.0, 0.5, 1)
        r = next(x for x in dispersion_roots(2.0, 0.5, 1) if x.branch == "growing")
        assert modal_reference(r, 1.0, np.array([[1.0, 0.0]]))[0] == pytest.approx(math.exp(root[1]))

    def test_profile_solves_bulk_equation(self):
        # exp(sigma t) R(r) cos(n theta) satisfies u_t = Lap u: check sigma R = R'' + R'/r - n^2 R/r^2
        for r in dispersion_roots(2.0, 0.5, 3, 8.0):
            if r.branch == "zero":
                continue
            x = np.linspace(0.3, 0.9, 7)
            h = 1e-4
            R = lambda s: disk_oracle.radial_profile(r, s)
            lap = (R(x + h) - 2 * R(x) + R(x - h)) / h**2 + (R(x + h) - R(x - h)) / (2 * h * x) - r.n**2 * R(x) / x**2
            assert np.allclose(lap, r.sigma * R(x), atol=1e-5 * max(1, abs(r.sigma)))


def test_oracle_is_independent_of_fem_code():
    tree = ast.parse(inspect.getsource(disk_oracle))
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module or "")
            imported.update(a.name for a in node.names)
        elif isinstance(node, ast.Import):
            imported.update(a.name for a in node.names)
    assert not imported & {"assembly", "linsolve", "mesh", "evolution", "resolvent"}
