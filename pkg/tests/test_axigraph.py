import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_legendre

from dsflow.axigraph import (RadialProfile, centred_derivatives, derivatives, frame, gradient_pairing,
                             laplace_beltrami, legendre_profile, metric_psipsi, profile_from_function,
                             read_profile_csv, slice_profile, write_profile_csv)
from dsflow.errors import DomainError, SpacelikeBreached
from dsflow.spaceform import de_sitter
from oracles import embedding_curvatures, fitted_order

STANDARD = lambda s: 1 + 0.1 * eval_legendre(2, np.cos(s))


def test_profile_validation(ds2):
    with pytest.raises(DomainError):
        RadialProfile(ds2, np.ones(10))
    with pytest.raises(DomainError):
        RadialProfile(ds2, np.r_[np.ones(20), -0.1])
    with pytest.raises(DomainError):
        RadialProfile(ds2, np.r_[np.ones(20), np.nan])
    p = slice_profile(ds2, 32, 1.0)
    with pytest.raises(ValueError):
        p.rho[0] = 2.0


def test_constant_profile_derivatives(ds2):
    d1, d2 = derivatives(slice_profile(ds2, 64, 0.7))
    assert not d1.any() and not d2.any()


def test_pole_parity(ds2):
    p = legendre_profile(ds2, 64, 1.0, 0.1, 3)
    d1, _ = derivatives(p)
    assert d1[0] == 0.0 and d1[-1] == 0.0


def test_derivative_order():
    errs = []
    Ns = [50, 100, 200, 400]
    for N in Ns:
        psi = np.linspace(0, np.pi, N + 1)
        d1, d2 = centred_derivatives(1 + 0.1 * np.cos(2 * psi), np.pi / N)
        errs.append(max(np.abs(d1 + 0.2 * np.sin(2 * psi)).max(), np.abs(d2 + 0.4 * np.cos(2 * psi)).max()))
    assert fitted_order(Ns, errs) >= 1.9


@pytest.mark.parametrize("r", [0.2, 1.0, 3.0])
def test_slice_frame(model, r):
    fr = frame(slice_profile(model, 64, r))
    assert np.allclose(fr.kappa_rad, np.tanh(r), rtol=1e-14)
    assert np.allclose(fr.kappa_ang, np.tanh(r), rtol=1e-14)
    assert np.all(fr.v == 1.0)
    assert np.allclose(fr.u, np.cosh(r), rtol=1e-15)
    assert fr.max_ring2 < 1e-28


def test_slice_second_mean_curvature(ds2):
    fr = frame(slice_profile(ds2, 64, 1.0))
    assert fr.H2 == pytest.approx(np.full(65, 0.580026), abs=1e-6)
    assert np.allclose(fr.H2, fr.H1 ** 2, rtol=1e-14)


def test_frame_invariants(model):
    p = legendre_profile(model, 128, 1.0, 0.1, 2)
    fr = frame(p)
    n = model.n
    assert np.all((fr.v2 > 0) & (fr.v2 <= 1))
    assert np.allclose(fr.u, fr.warp / fr.v)
    assert np.allclose(fr.ring2, fr.normA2 - n * fr.H1 ** 2, atol=1e-13)
    assert np.all(fr.ring2 >= 0)
    assert np.allclose(fr.grad2rho, (1 - fr.v2) / fr.v2, rtol=1e-13)
    # axis points are umbilic
    assert abs(fr.kappa_rad[0] - fr.kappa_ang[0]) < 1e-14
    assert abs(fr.kappa_rad[-1] - fr.kappa_ang[-1]) < 1e-14


def test_grad_rho_independent_path(ds2):
    p = legendre_profile(ds2, 128, 1.0, 0.1, 2)
    fr = frame(p)
    assert np.allclose(gradient_pairing(p, fr, p.rho, p.rho), fr.grad2rho, rtol=1e-13, atol=1e-16)


def test_principal_curvatures_layout():
    p = legendre_profile(de_sitter(3), 64, 1.0, 0.1, 2)
    k = frame(p).principal_curvatures
    assert k.shape == (65, 3)
    assert np.array_equal(k[:, 1], k[:, 2])


def _oracle_errors(N):
    p = profile_from_function(de_sitter(2), N, STANDARD)
    fr = frame(p)
    kr, ka, u = embedding_curvatures(STANDARD, p.psi[1:-1])
    return fr, kr, ka, u


def test_frame_matches_embedding_oracle_second_order():
    Ns = [100, 200, 400, 800]
    errs = []
    for N in Ns:
        fr, kr, ka, u = _oracle_errors(N)
        errs.append(max(np.abs(fr.kappa_rad[1:-1] - kr).max(), np.abs(fr.kappa_ang[1:-1] - ka).max(),
                        np.abs(fr.u[1:-1] - u).max()))
    assert errs[1] < 3e-5
    assert fitted_order(Ns, errs) >= 1.9


def test_frame_matches_embedding_oracle_extrapolated():
    coarse, *_ = _oracle_errors(200)
    fine, kr, ka, _ = _oracle_errors(400)
    kr, ka, _ = embedding_curvatures(STANDARD, np.linspace(0, np.pi, 201)[1:-1])
    rich_rad = (4 * fine.kappa_rad[2:-2:2] - coarse.kappa_rad[1:-1]) / 3
    rich_ang = (4 * fine.kappa_ang[2:-2:2] - coarse.kappa_ang[1:-1]) / 3
    assert np.abs(rich_rad - kr).max() < 1e-6
    assert np.abs(rich_ang - ka).max() < 1e-6


def test_spacelike_breach(ds2):
    psi = np.linspace(0, np.pi, 65)
    p = RadialProfile(ds2, 0.9 + 0.4 * np.cos(4 * psi))
    with pytest.raises(SpacelikeBreached):
        frame(p)


def test_standard_family_mean_convex():
    m = de_sitter(2)
    for eps in np.linspace(-0.15, 0.15, 7):
        assert frame(legendre_profile(m, 200, 1.0, eps, 2)).min_H1 > 0


def test_laplacian_of_constant(model):
    p = legendre_profile(model, 64, 1.0, 0.1, 2)
    assert np.allclose(laplace_beltrami(p, np.full(65, 3.0)), 0.0, atol=1e-12)


def test_laplacian_eigenfunction_order(model):
    Ns = [50, 100, 200, 400]
    errs = []
    for N in Ns:
        p = slice_profile(model, N, 1.0)
        f = np.cos(p.psi)
        errs.append(np.abs(laplace_beltrami(p, f) + model.n * f / np.cosh(1.0) ** 2).max())
    assert fitted_order(Ns, errs) >= 1.9


def test_laplacian_slice_rho(ds2):
    assert not laplace_beltrami(slice_profile(ds2, 64, 1.0), np.full(65, 1.0)).any()


def test_laplacian_trace_identity(model):
    """``Delta rho`` against the trace of the graph second fundamental form."""
    Ns = [100, 200, 400]
    errs = []
    for N in Ns:
        p = legendre_profile(model, N, 1.0, 0.1, 2)
        fr = frame(p)
        n = model.n
        th, dth = fr.warp, fr.warp_prime
        # trace of v^-1 h = rho;ij + (warp'/warp) g_ij - warp' warp^-1 rho_i rho_j ... reduced form
        expected = n * fr.H1 / fr.v - n * dth / th - dth / th * fr.grad2rho
        errs.append(np.abs(laplace_beltrami(p, p.rho) - expected).max())
    assert fitted_order(Ns, errs) >= 1.8


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.2, 2.5),
       coeffs=st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 0.04), st.floats(-0.04, -1e-3)),
                       min_size=1, max_size=4))
def test_umbilic_iff_constant(r, coeffs):
    # cos(psi) is left out: to first order it is a boosted slice, which is umbilic
    m = de_sitter(2)
    psi = np.linspace(0, np.pi, 129)
    rho = r + sum(c * np.cos((k + 2) * psi) for k, c in enumerate(coeffs))
    fr = frame(RadialProfile(m, rho))
    constant = np.ptp(rho) < 1e-8
    assert (fr.max_ring2 < 1e-12) == constant


def test_metric_component(ds2):
    p = legendre_profile(ds2, 64, 1.0, 0.1, 2)
    fr = frame(p)
    assert np.allclose(metric_psipsi(p, fr), fr.warp ** 2 * fr.v2)


def test_csv_round_trip(tmp_path, model):
    p = legendre_profile(model, 40, 1.2, 0.05, 4)
    path = tmp_path / "p.csv"
    write_profile_csv(p, path)
    q = read_profile_csv(path)
    assert q.n == model.n and np.array_equal(q.rho, p.rho)


def test_csv_rejects_bad_grid(tmp_path, ds2):
    path = tmp_path / "p.csv"
    path.write_text("# n=2 N=20\npsi,rho\n" + "\n".join(f"{0.1 * i},1.0" for i in range(21)))
    with pytest.raises(DomainError):
        read_profile_csv(path)
