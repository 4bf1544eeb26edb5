"""Closed-form spectrum, eigenpolynomials, and transported eigenfunctions."""

import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from klform import (
    BasisConfig,
    BivariatePoly,
    EigenLabel,
    FrameMismatch,
    GENERATOR_ORDER,
    LabelError,
    UnsupportedLabel,
    assemble_liouvillian,
    assemble_matrix,
    c_coefficient,
    cl_coefficients,
    conjugate_coefficients,
    distinct_labels,
    eigenvalue,
    expand,
    hermite,
    hermite_coefficients,
    hpz_coefficients,
    kl_coefficients,
    kl_eigenfunction,
    pi_polynomial,
    reduce_to_kl,
    reference_eigenfunction,
    residual,
    transformed_eigenfunction,
)


def expand_quiet(f, cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FrameMismatch)
        return expand(f, cfg)


def test_eigenvalue_formula_fixtures():
    w0, gam = 1.0, 0.3
    assert eigenvalue(EigenLabel(0, 0, 1), w0, gam) == 0.0
    assert eigenvalue(EigenLabel(1, 0, 1), w0, gam) == pytest.approx(gam)
    assert eigenvalue(EigenLabel(1, 1, 1), w0, gam) == pytest.approx(0.15 + 1j)
    assert eigenvalue(EigenLabel(1, 1, -1), w0, gam) == pytest.approx(0.15 - 1j)
    assert eigenvalue(EigenLabel(2, 2, -1), w0, gam) == pytest.approx(0.3 - 2j)


def test_eigenvalue_input_validation():
    with pytest.raises(ValueError):
        eigenvalue(EigenLabel(1, 0, 1), -1.0, 0.3)
    with pytest.raises(ValueError):
        eigenvalue(EigenLabel(1, 0, 1), 1.0, -0.3)


def test_label_validation():
    with pytest.raises(LabelError):
        EigenLabel(1, 2, 1)
    with pytest.raises(LabelError):
        EigenLabel(-1, 0, 1)
    with pytest.raises(LabelError):
        EigenLabel(2, 1, 0)


def test_distinct_labels_counts_and_dedup():
    labels = distinct_labels(2)
    assert len(labels) == 9
    assert len(distinct_labels(4)) == 25
    n0 = [lab for lab in labels if lab.n == 0]
    assert all(lab.sigma == 1 for lab in n0)
    assert len({(lab.m, lab.n, lab.sigma) for lab in labels}) == 9


def test_hermite_polynomial_values_and_coefficients():
    x = np.linspace(-2.0, 2.0, 9)
    assert_allclose(hermite(3, x), 8.0 * x**3 - 12.0 * x, atol=1e-12)
    assert hermite_coefficients(4) == [12, 0, -48, 0, 16]
    assert hermite_coefficients(0) == [1]
    assert hermite_coefficients(1) == [0, 2]


def test_c_coefficient_fixture():
    assert c_coefficient(1, 1, 0, 0, 0, 1) == pytest.approx(-1j)
    # the sign flip enters through (-1)^(n + sigma_idx)
    assert c_coefficient(1, 1, 0, 0, 0, -1) == pytest.approx(1j)


def test_pi_polynomial_lowest_modes():
    pi_plus = pi_polynomial(EigenLabel(1, 1, 1))
    assert pi_plus.isclose(BivariatePoly({(1, 0): -1j, (0, 1): -1j}))
    pi_minus = pi_polynomial(EigenLabel(1, 1, -1))
    assert pi_minus.isclose(BivariatePoly({(1, 0): 1j, (0, 1): -1j}))
    pi_10 = pi_polynomial(EigenLabel(1, 0, 1))
    assert pi_10.isclose(BivariatePoly({(0, 0): 0.5, (2, 0): -1.0, (0, 2): 1.0}))


def test_pi_polynomial_degree_is_2m_minus_n():
    for lab in distinct_labels(5):
        assert pi_polynomial(lab).degree() == 2 * lab.m - lab.n


def test_pi_polynomial_sigma_degenerate_only_at_n0():
    for m in range(1, 5):
        plus = pi_polynomial(EigenLabel(m, 0, 1))
        minus = pi_polynomial(EigenLabel(m, 0, -1))
        assert plus.isclose(minus)
    # away from n = 0 the two signs are genuinely different polynomials
    p = pi_polynomial(EigenLabel(2, 2, 1))
    q = pi_polynomial(EigenLabel(2, 2, -1))
    assert not p.isclose(q)


def test_pi_polynomial_conjugate_reflection_pairing():
    """The sign partner is the complex conjugate under r -> -r."""
    x = np.linspace(-1.3, 1.3, 7)[:, None]
    y = np.linspace(-0.9, 0.9, 6)[None, :]
    for lab in distinct_labels(3):
        if lab.n == 0:
            continue
        partner = EigenLabel(lab.m, lab.n, -lab.sigma)
        direct = pi_polynomial(partner).evaluate(x, y)
        reflected = np.conj(pi_polynomial(lab).evaluate(x, -y))
        assert_allclose(direct, reflected, atol=1e-12)


def test_pi_polynomial_m_cap():
    with pytest.raises(LabelError):
        pi_polynomial(EigenLabel(40, 0, 1))


def test_kl_eigenfunction_residuals_low_modes():
    w0, gam, b = 1.0, 0.3, 1.0
    k_op = assemble_liouvillian(kl_coefficients(w0, gam, b))
    f00 = kl_eigenfunction(EigenLabel(0, 0, 1), b, w0, gam)
    cfg = BasisConfig(32, 32, f00.frame)
    k_mat = assemble_matrix(k_op, cfg)
    for lab in distinct_labels(2):
        f = kl_eigenfunction(lab, b, w0, gam)
        vec = expand(f, cfg)
        assert residual(k_mat, vec, f.eigenvalue) <= 1e-10


def test_transformed_eigenfunction_random_sources():
    """Scrambled normal forms keep the closed-form spectrum."""
    rng = np.random.default_rng(512)
    for _ in range(5):
        omega0 = float(rng.uniform(0.6, 1.4))
        gamma = float(rng.uniform(0.2, 0.9))
        b = float(rng.uniform(0.7, 1.5))
        src = kl_coefficients(omega0, gamma, b)
        for _ in range(int(rng.integers(3, 6))):
            gid = list(GENERATOR_ORDER)[rng.integers(7)]
            src = conjugate_coefficients(gid, float(rng.uniform(-0.5, 0.5)), src)
        plan = reduce_to_kl(src, b_target=1.0)
        k_mat = None
        for lab in distinct_labels(2):
            f = transformed_eigenfunction(plan, lab, src)
            if k_mat is None:
                cfg = BasisConfig(40, 40, f.gaussian.frame())
                k_mat = assemble_matrix(assemble_liouvillian(src), cfg)
            vec = expand_quiet(f, cfg)
            lam = eigenvalue(lab, plan.omega0, gamma)
            assert f.eigenvalue == pytest.approx(lam)
            assert residual(k_mat, vec, lam) <= 1e-7


def test_reference_kl_equals_direct_construction():
    w0, gam, b = 1.0, 0.3, 1.0
    for lab in (EigenLabel(1, 1, 1), EigenLabel(1, 1, -1), EigenLabel(1, 0, 1)):
        ref = reference_eigenfunction("kl", lab, b=b, omega0=w0, gamma=gam)
        direct = kl_eigenfunction(lab, b, w0, gam)
        assert ref.pi.isclose(direct.pi)
        assert ref.eigenvalue == direct.eigenvalue
        q = np.linspace(-1.0, 1.0, 5)[:, None]
        r = np.linspace(-1.0, 1.0, 4)[None, :]
        assert_allclose(ref.evaluate(q, r), direct.evaluate(q, r), atol=1e-13)


def sampled_proportionality(f_test, f_ref):
    """Largest relative deviation from a single complex constant."""
    q = np.linspace(-1.5, 1.5, 10)[:, None]
    r = np.linspace(-1.2, 1.2, 10)[None, :]
    a = f_test.evaluate(q, r)
    b = f_ref.evaluate(q, r)
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    const = a[idx] / b[idx]
    return const, float(np.max(np.abs(a - const * b)) / np.max(np.abs(a)))


def test_reference_cl_matches_plan_transport():
    w0p, gam, b_cl = 1.0, 0.6, 1.0
    src = cl_coefficients(w0p, gam, b_cl)
    plan = reduce_to_kl(src, b_target=1.0)
    for lab in (EigenLabel(1, 1, 1), EigenLabel(1, 1, -1), EigenLabel(1, 0, 1)):
        ref = reference_eigenfunction("cl", lab, omega0_prime=w0p, gamma=gam, b_cl=b_cl)
        f = transformed_eigenfunction(plan, lab, src)
        assert ref.eigenvalue == pytest.approx(f.eigenvalue, abs=1e-12)
        _, dev = sampled_proportionality(f, ref)
        assert dev <= 1e-10


def test_reference_hpz_matches_plan_transport():
    w0p, gam, b_hpz, d = 1.0, 0.6, 1.0, 0.2
    src = hpz_coefficients(w0p, gam, b_hpz, d)
    plan = reduce_to_kl(src, b_target=1.0)
    for lab in (EigenLabel(1, 1, 1), EigenLabel(1, 1, -1), EigenLabel(1, 0, 1)):
        ref = reference_eigenfunction(
            "hpz", lab, omega0_prime=w0p, gamma=gam, b_hpz=b_hpz, d=d
        )
        f = transformed_eigenfunction(plan, lab, src)
        _, dev = sampled_proportionality(f, ref)
        assert dev <= 1e-10


def test_reference_unsupported_label():
    with pytest.raises(UnsupportedLabel):
        reference_eigenfunction("kl", EigenLabel(2, 2, 1), b=1.0, omega0=1.0, gamma=0.3)


def test_bivariate_poly_algebra():
    p = BivariatePoly({(1, 0): 2.0, (0, 1): -1j})
    q = BivariatePoly({(1, 0): -2.0})
    s = p + q
    assert s.isclose(BivariatePoly({(0, 1): -1j}))
    assert (2.0 * p).isclose(BivariatePoly({(1, 0): 4.0, (0, 1): -2j}))
    x = np.array([[0.5]])
    y = np.array([[2.0]])
    assert_allclose(p.evaluate(x, y), [[1.0 - 2j]])
