import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from tunnel_chrono import numerics
from tunnel_chrono.constants import HBAR, MASS, wavenumber
from tunnel_chrono.errors import ClosedChannelError, DegenerateSegmentError, ValidationError
from tunnel_chrono.potential import PotentialProfile, rectangular
from tunnel_chrono.scattering1d import (
    density_integral,
    incident_flux,
    segment_wavefunction,
    solve,
    wavefunction,
)


def kappa_width(V0, E, kappa_s):
    return kappa_s / wavenumber(V0 - E)


def test_free_region_is_transparent():
    sol = solve(rectangular(0.0, 13.0), 0.7)
    # t is referenced at the exit, so the free phase k L stays in arg t
    assert abs(sol.t) == pytest.approx(1.0, abs=1e-14)
    assert sol.arg_t == pytest.approx(cmath.phase(cmath.exp(1j * sol.k_left * 13.0)), abs=1e-12)
    assert abs(sol.r) < 1e-14


def test_potential_step_reflection():
    vs, E = 0.6, 1.5
    p = PotentialProfile(((1.0, vs),), left_level=0.0, right_level=vs)
    k1, k2 = wavenumber(E), wavenumber(E - vs)
    sol = solve(p, E)
    assert sol.r.real == pytest.approx((k1 - k2) / (k1 + k2), abs=1e-13)
    assert abs(sol.r.imag) < 1e-13


@pytest.mark.parametrize("kappa_s", [0.5, 2.0, 10.0, 20.0, 30.0])
@pytest.mark.parametrize("V0, frac", [(1.8, 0.5), (0.4, 0.1), (5.0, 0.93)])
def test_rectangular_closed_form_below_barrier(V0, frac, kappa_s):
    E = frac * V0
    s = kappa_width(V0, E, kappa_s)
    t, r = oracles.rect_amplitudes(V0, s, E)
    sol = solve(rectangular(V0, s), E)
    assert sol.log_abs_t == pytest.approx(float(mp.log(abs(t))), abs=1e-10)
    assert abs(sol.t) == pytest.approx(float(abs(t)), rel=1e-10)
    assert abs(cmath.phase(sol.t * complex(mp.conj(t)) / float(abs(t)) ** 2)) < 1e-10
    assert abs(sol.r) == pytest.approx(float(abs(r)), abs=1e-10)
    assert abs(sol.r - complex(r)) < 1e-10


@pytest.mark.parametrize("V0, E, s", [(1.8, 2.5, 5.0), (1.0, 1.01, 40.0), (-1.0, 0.3, 12.0)])
def test_rectangular_closed_form_above_barrier(V0, E, s):
    t, r = oracles.rect_amplitudes(V0, s, E)
    sol = solve(rectangular(V0, s), E)
    assert abs(sol.t - complex(t)) < 1e-12
    assert abs(sol.r - complex(r)) < 1e-12


def test_opaque_barrier_does_not_overflow():
    V0, E = 1.8, 0.9
    s = kappa_width(V0, E, 1000.0)
    t, _ = oracles.rect_amplitudes(V0, s, E)
    sol = solve(rectangular(V0, s), E)
    assert sol.t == 0j  # underflows in double precision
    assert sol.log_abs_t == pytest.approx(float(mp.log(abs(t))), rel=1e-12)
    assert sol.reflectance == pytest.approx(1.0, abs=1e-15)


def test_multi_segment_matches_dense_linear_solve():
    segs = [(3.0, 2.0), (1.5, -0.5), (4.0, 1.2), (2.0, 3.5)]
    t, r, _, _ = oracles.piecewise_amplitudes(segs, 0.9, left=0.0, right=-0.3)
    sol = solve(PotentialProfile(tuple(segs), right_level=-0.3), 0.9)
    assert abs(sol.t - complex(t)) < 1e-12
    assert abs(sol.r - complex(r)) < 1e-12


segments = st.lists(
    st.tuples(st.floats(0.5, 30.0), st.floats(-2.0, 5.0)), min_size=1, max_size=6
)


@settings(max_examples=1000, deadline=None)
@given(segments, st.floats(0.01, 6.0), st.floats(-1.0, 0.0), st.floats(-1.0, 0.0))
def test_unitarity_random_profiles(segs, E, left, right):
    assume(all(abs(E - h) > 1e-9 for _, h in segs))
    sol = solve(PotentialProfile(tuple(segs), left_level=left, right_level=right), E)
    assert sol.k_left > 0 and sol.k_right > 0
    assert sol.reflectance + sol.transmittance == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(segments, st.floats(0.01, 6.0))
def test_wavefunction_continuous_at_interfaces(segs, E):
    assume(all(abs(E - h) > 1e-9 for _, h in segs))
    p = PotentialProfile(tuple(segs), origin=-3.0)
    sol = solve(p, E)
    edges = p.edges()
    # amplitude scale inside the barrier, for a relative bound
    scale = max(1.0, *(abs(c) for pair in sol.segment_coefficients for c in pair))
    kmax = max(sol.k_left, *sol.segment_wavenumbers)

    def left_of(j):  # psi from segment j-1 (or the left lead) at edge j
        if j == 0:
            u = 0.0
            return 1 + sol.r, 1j * sol.k_left * (1 - sol.r)
        return segment_wavefunction(sol, j - 1, segs[j - 1][0])

    for j in range(len(segs) + 1):
        lpsi, ldpsi = left_of(j)
        if j < len(segs):
            rpsi, rdpsi = segment_wavefunction(sol, j, 0.0)
        else:
            rpsi, rdpsi = sol.t, 1j * sol.k_right * sol.t
        assert abs(lpsi - rpsi) < 1e-10 * scale
        assert abs(ldpsi - rdpsi) < 1e-10 * scale * kmax


def test_wavefunction_reconstruction_at_points():
    segs = [(3.0, 2.0), (2.0, 0.4), (4.0, 1.2)]
    E = 0.9
    _, r, coeffs, qs = oracles.piecewise_amplitudes(segs, E)
    sol = solve(PotentialProfile(tuple(segs)), E)
    for x in (-2.0, 1.0, 4.5, 7.9):
        edges = [0.0, 3.0, 5.0, 9.0]
        if x < 0:
            ref = mp.exp(1j * oracles.kvec(E) * x) + r * mp.exp(-1j * oracles.kvec(E) * x)
        else:
            j = max(i for i in range(3) if edges[i] <= x)
            a, b = coeffs[j]
            ref = a * mp.exp(1j * qs[j] * (x - edges[j])) + b * mp.exp(-1j * qs[j] * (x - edges[j]))
        assert abs(wavefunction(sol, x)[0] - complex(ref)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0.5, 10.0), st.floats(-2.0, 5.0)), min_size=1, max_size=3), st.floats(0.05, 3.0))
def test_mirrored_profile_has_same_transmission(half, E):
    assume(all(abs(E - h) > 1e-9 for _, h in half))
    p = PotentialProfile(tuple(half) + tuple(reversed(half)))
    a, b = solve(p, E), solve(p.mirrored(), E)
    assert abs(a.t - b.t) < 1e-12 * max(1.0, abs(a.t))


def test_asymmetric_profile_reciprocal_transmission():
    p = PotentialProfile(((2.0, 1.0), (5.0, 3.0), (1.0, -0.5)))
    a, b = solve(p, 1.3), solve(p.mirrored(), 1.3)
    assert abs(a.t - b.t) < 1e-13


def test_density_integral_free_region_is_length():
    p = rectangular(0.0, 17.0)
    assert density_integral(solve(p, 2.0), p) == pytest.approx(17.0, rel=1e-13)


@pytest.mark.parametrize("V0, E, s", [(1.8, 0.9, 20.8), (1.8, 0.3, 5.0), (1.0, 1.7, 9.0)])
def test_density_integral_matches_closed_form(V0, E, s):
    p = rectangular(V0, s)
    ref = oracles.piecewise_density([(s, V0)], E)
    assert density_integral(solve(p, E), p) == pytest.approx(float(ref), rel=1e-11)


def test_density_integral_matches_adaptive_quadrature():
    rng = np.random.default_rng(7)
    for _ in range(5):
        segs = tuple((float(w), float(h)) for w, h in zip(rng.uniform(0.5, 8, 3), rng.uniform(-2, 5, 3)))
        p = PotentialProfile(segs)
        sol = solve(p, 1.1)
        edges = p.edges()
        total = 0.0
        for j, (w, _) in enumerate(segs):
            total += numerics.integrate(
                lambda u, j=j: abs(segment_wavefunction(sol, j, u)[0]) ** 2, 0.0, w, tol=1e-13, rel_tol=1e-12
            )
        assert density_integral(sol, p) == pytest.approx(total, rel=1e-9)
        assert edges[-1] == pytest.approx(p.x2)


def test_density_integral_rejects_foreign_profile():
    sol = solve(rectangular(1.0, 5.0), 0.5)
    with pytest.raises(ValidationError):
        density_integral(sol, rectangular(1.0, 6.0))


def test_incident_flux_at_one_ev():
    sol = solve(rectangular(0.0, 1.0), 1.0)
    assert sol.k_left == pytest.approx(0.51232, rel=1e-4)
    assert incident_flux(sol) == pytest.approx(5.931, rel=1e-4)
    assert incident_flux(sol) == pytest.approx(HBAR * sol.k_left / MASS, rel=1e-15)


@given(st.floats(0.01, 100.0))
def test_incident_flux_scales_as_sqrt_energy(E):
    j1 = incident_flux(solve(rectangular(0.0, 1.0), E))
    j2 = incident_flux(solve(rectangular(0.0, 1.0), 2 * E))
    assert j1 > 0
    assert j2 / j1 == pytest.approx(math.sqrt(2), rel=1e-12)


@pytest.mark.parametrize("E, left, right", [(0.0, 0.0, 0.0), (0.2, 0.3, 0.0), (0.2, 0.0, 0.2)])
def test_closed_channel_rejected(E, left, right):
    with pytest.raises(ClosedChannelError):
        solve(PotentialProfile(((1.0, 1.0),), left_level=left, right_level=right), E)


def test_energy_at_segment_height_is_degenerate():
    with pytest.raises(DegenerateSegmentError, match="perturb"):
        solve(PotentialProfile(((1.0, 0.5), (2.0, 1.0))), 1.0)
    # a 1e-9 eV perturbation is accepted and continuous
    a = solve(PotentialProfile(((1.0, 0.5), (2.0, 1.0))), 1.0 + 1e-9).t
    b = solve(PotentialProfile(((1.0, 0.5), (2.0, 1.0))), 1.0 - 1e-9).t
    assert abs(a - b) < 1e-6
