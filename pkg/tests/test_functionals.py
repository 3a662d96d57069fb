import numpy as np
import pytest
from scipy.special import eval_legendre

from dsflow.axigraph import frame, legendre_profile, profile_from_function, sine_weights, slice_profile
from dsflow.errors import DomainError
from dsflow.functionals import (RECORD_COLUMNS, FunctionalRecord, enclosed_volume, minkowski_gap,
                                minkowski_residuals, record, surface_integral, w2_rate)
from dsflow.spaceform import de_sitter, phi2, slice_data
from oracles import fitted_order

# minkowski_gap of rho = 1 + 0.1 P2(cos psi), n = 2: value at N = 3200 and the
# Richardson extrapolation of the N = 3200 / 6400 pair
GAP_STANDARD_N3200 = 0.01809634249926262
GAP_STANDARD_LIMIT = 0.01809628299456752


def test_column_order():
    assert RECORD_COLUMNS[:4] == ("t", "min_rho", "max_rho", "area")
    assert RECORD_COLUMNS[-2:] == ("mink1_residual", "mink2_residual")
    assert len(record(slice_profile(de_sitter(2), 32, 1.0)).as_row()) == len(RECORD_COLUMNS)


def test_slice_area_integral(ds2):
    p = slice_profile(ds2, 400, 1.0)
    fr = frame(p)
    assert surface_integral(p, fr, 1.0) == pytest.approx(4 * np.pi * np.cosh(1.0) ** 2, rel=1e-8)
    assert surface_integral(p, fr, 1.0) == pytest.approx(29.9218, abs=1e-4)
    assert surface_integral(p, fr, 0.0) == 0.0


def test_area_refinement_order(model):
    ref_p = legendre_profile(model, 3200, 1.0, 0.1, 2)
    ref = surface_integral(ref_p, frame(ref_p), 1.0)
    Ns = [100, 200, 400]
    errs = []
    for N in Ns:
        p = legendre_profile(model, N, 1.0, 0.1, 2)
        errs.append(abs(surface_integral(p, frame(p), 1.0) - ref))
    assert fitted_order(Ns, errs) >= 1.8


def test_sine_weights_exact_on_constants(model):
    from scipy.special import beta
    k = model.n - 1
    for N in (8, 64, 400):
        assert sine_weights(N, k).sum() == pytest.approx(beta(0.5, (k + 1) / 2), rel=1e-13)


def test_slice_volume(model):
    p = slice_profile(model, 200, 1.0)
    assert enclosed_volume(p) == pytest.approx(slice_data(model, 1.0).volume, rel=1e-10)


def test_slice_volume_value(ds2):
    assert enclosed_volume(slice_profile(ds2, 200, 1.0)) == pytest.approx(17.67730, abs=1e-5)


def test_volume_vanishes_toward_equator(ds2):
    assert enclosed_volume(slice_profile(ds2, 64, 1e-6)) < 1e-4


def test_volume_monotone_in_profile(ds2):
    a = legendre_profile(ds2, 64, 1.0, 0.1, 2)
    b = a.with_rho(a.rho + 0.01 * (1 + np.sin(a.psi)))
    assert enclosed_volume(a) < enclosed_volume(b)


def test_slice_record(model):
    rec = record(slice_profile(model, 400, 1.0))
    assert rec.mink1_residual < 1e-14 and rec.mink2_residual < 1e-14
    assert rec.W2 == pytest.approx(phi2(model, 1.0), rel=1e-8)
    assert rec.W2 == rec.total_H1 - rec.volume
    assert abs(rec.dW2_predicted) < 1e-12


def test_slice_W2_value(ds2):
    assert record(slice_profile(ds2, 400, 1.0)).W2 == pytest.approx(5.11093, abs=1e-5)


def test_perturbed_minkowski_residuals(ds2):
    rec = record(legendre_profile(ds2, 400, 1.0, 0.1, 2))
    assert rec.mink1_residual < 1e-5 and rec.mink2_residual < 1e-5


def test_minkowski_residual_order(model):
    Ns = [100, 200, 400, 800]
    res = np.array([minkowski_residuals(p, frame(p)) for p in
                    (legendre_profile(model, N, 1.0, 0.1, 2) for N in Ns)])
    assert fitted_order(Ns, res[:, 0]) >= 1.8
    assert fitted_order(Ns, res[:, 1]) >= 1.8


def test_predicted_w2_rate_nonnegative(model):
    for eps in (-0.1, 0.05, 0.1):
        p = legendre_profile(model, 200, 1.0, eps, 2)
        assert w2_rate(p, frame(p)) > 0


def test_w2_rate_equals_trace_free_form(model):
    """``(n-1) int warp'(H1 - H2/H1) = (1/n) int warp' |A0|^2 / H1``."""
    p = legendre_profile(model, 200, 1.0, 0.1, 2)
    fr = frame(p)
    alt = surface_integral(p, fr, fr.warp_prime * fr.ring2 / fr.H1) / model.n
    assert w2_rate(p, fr) == pytest.approx(alt, rel=1e-12)


@pytest.mark.parametrize("r", [0.3, 1.0, 2.0])
def test_slice_gap_zero(model, r):
    assert abs(minkowski_gap(record(slice_profile(model, 200, r)), model)) < 1e-8


def test_gap_frozen_fine_grid(ds2):
    g = minkowski_gap(record(legendre_profile(ds2, 3200, 1.0, 0.1, 2)), ds2)
    assert g == pytest.approx(GAP_STANDARD_N3200, rel=1e-10)


def test_gap_regression(ds2):
    g400 = minkowski_gap(record(legendre_profile(ds2, 400, 1.0, 0.1, 2)), ds2)
    g200 = minkowski_gap(record(legendre_profile(ds2, 200, 1.0, 0.1, 2)), ds2)
    assert g400 > 0
    assert abs(g400 - GAP_STANDARD_LIMIT) / GAP_STANDARD_LIMIT < 5e-4
    rich = (4 * g400 - g200) / 3
    assert abs(rich - GAP_STANDARD_LIMIT) < 1e-8


def test_gap_refinement_order(ds2):
    Ns = [100, 200, 400, 800]
    errs = [abs(minkowski_gap(record(legendre_profile(ds2, N, 1.0, 0.1, 2)), ds2) - GAP_STANDARD_LIMIT)
            for N in Ns]
    assert fitted_order(Ns, errs) >= 1.8


def test_gap_needs_area_above_equator(ds2):
    rec = record(slice_profile(ds2, 64, 1.0))
    small = FunctionalRecord(**{**rec.__dict__, "area": 4 * np.pi})
    with pytest.raises(DomainError):
        minkowski_gap(small, ds2)


def test_gap_positive_on_random_profiles():
    rng = np.random.default_rng(7)
    m = de_sitter(2)
    for _ in range(10):
        c = rng.uniform(-0.05, 0.05, 3)
        f = lambda s, c=c: 1.0 + sum(ck * eval_legendre(k + 2, np.cos(s)) for k, ck in enumerate(c))
        p = profile_from_function(m, 400, f)
        assert minkowski_gap(record(p), m) > 1e-6
