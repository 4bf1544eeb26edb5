"""Generator algebra, normal ordering, and conjugation of coefficient vectors."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from klform import (
    GENERATOR_ORDER,
    CoordinateFrame,
    GeneratorId,
    LinearPhaseOperator,
    LiouvillianCoeffs,
    PhasePolyOperator,
    adjoint_conjugate_coefficients,
    assemble_liouvillian,
    cl_coefficients,
    commutator,
    conjugate_coefficients,
    conjugate_linear,
    generator,
    hpz_coefficients,
    kl_coefficients,
    rescale_coordinates,
)

GENERATOR_TABLE = {
    GeneratorId.IL0: {(1, 1, 0, 0): 0.5j, (0, 0, 1, 1): -0.5j},
    GeneratorId.IM1: {(1, 1, 0, 0): 0.5j, (0, 0, 1, 1): 0.5j},
    GeneratorId.IM2: {(1, 0, 1, 0): -0.5, (0, 0, 0, 0): -0.5, (0, 1, 0, 1): -0.5},
    GeneratorId.O0MI: {(1, 0, 1, 0): -0.5, (0, 0, 0, 0): -0.5, (0, 1, 0, 1): 0.5},
    GeneratorId.OPLUS: {(0, 0, 2, 0): 0.25, (0, 2, 0, 0): -0.25},
    GeneratorId.L1PLUS: {(0, 0, 2, 0): -0.25, (0, 2, 0, 0): -0.25},
    GeneratorId.L2PLUS: {(0, 1, 1, 0): -0.5j},
}


def random_coeffs(rng):
    h = rng.uniform(-2.0, 2.0, size=3)
    g = rng.uniform(-2.0, 2.0, size=3)
    gamma = rng.uniform(0.0, 2.0)
    return LiouvillianCoeffs(tuple(h), gamma, tuple(g))


def test_generator_term_tables():
    for gid, table in GENERATOR_TABLE.items():
        got = generator(gid).terms
        assert set(got) == set(table)
        for key, val in table.items():
            assert got[key] == val


def test_generators_have_even_parity_and_degree_two():
    # every term has total exponent parity 0 so j+k parity is conserved
    for gid in GENERATOR_ORDER:
        for (a, b, c, d), coeff in generator(gid).terms.items():
            assert (a + b + c + d) % 2 == 0
            assert a + b + c + d <= 2
            assert coeff != 0


def test_normal_ordering_simple_product():
    dq = PhasePolyOperator({(0, 0, 1, 0): 1.0})
    q = PhasePolyOperator({(1, 0, 0, 0): 1.0})
    prod = dq @ q
    assert prod.terms == {(1, 0, 1, 0): 1.0, (0, 0, 0, 0): 1.0}


def test_normal_ordering_second_derivative():
    # dQ^2 Q^2 = Q^2 dQ^2 + 4 Q dQ + 2
    dq2 = PhasePolyOperator({(0, 0, 2, 0): 1.0})
    q2 = PhasePolyOperator({(2, 0, 0, 0): 1.0})
    prod = dq2 @ q2
    expected = PhasePolyOperator(
        {(2, 0, 2, 0): 1.0, (1, 0, 1, 0): 4.0, (0, 0, 0, 0): 2.0}
    )
    assert prod.isclose(expected)


def test_commutator_oscillation_and_boost():
    lhs = commutator(generator(GeneratorId.IL0), generator(GeneratorId.IM1))
    rhs = (-1.0) * generator(GeneratorId.IM2)
    assert lhs.isclose(rhs, tol=1e-15)


def test_commutators_close_over_span():
    """Pairwise commutators stay inside generators + identity."""
    basis_keys = sorted(
        {key for gid in GENERATOR_ORDER for key in generator(gid).terms} | {(0, 0, 0, 0)}
    )
    cols = []
    for gid in GENERATOR_ORDER:
        vec = np.zeros(len(basis_keys), dtype=complex)
        for key, val in generator(gid).terms.items():
            vec[basis_keys.index(key)] = val
        cols.append(vec)
    ident = np.zeros(len(basis_keys), dtype=complex)
    ident[basis_keys.index((0, 0, 0, 0))] = 1.0
    cols.append(ident)
    span = np.array(cols).T
    for ga in GENERATOR_ORDER:
        for gb in GENERATOR_ORDER:
            comm = commutator(generator(ga), generator(gb))
            assert comm.degree() <= 2
            vec = np.zeros(len(basis_keys), dtype=complex)
            for key, val in comm.terms.items():
                assert key in basis_keys, f"[{ga},{gb}] leaves the span at {key}"
                vec[basis_keys.index(key)] = val
            _, res, _, _ = np.linalg.lstsq(span, vec, rcond=None)
            if res.size:
                assert res[0] < 1e-24


def test_assemble_liouvillian_matches_hand_expansion():
    # K_CL collapses to i*w0p*(Qr - dQdr) + gamma*r*dr + gamma*b*r^2
    w0p, gam, b = 1.3, 0.45, 0.8
    op = assemble_liouvillian(cl_coefficients(w0p, gam, b))
    expected = PhasePolyOperator(
        {
            (1, 1, 0, 0): 1j * w0p,
            (0, 0, 1, 1): -1j * w0p,
            (0, 1, 0, 1): gam,
            (0, 2, 0, 0): gam * b,
        }
    )
    assert op.isclose(expected, tol=1e-14)


def test_assemble_liouvillian_hpz_extra_term():
    w0p, gam, b, d = 1.0, 0.6, 1.0, 0.2
    op_cl = assemble_liouvillian(cl_coefficients(w0p, gam, b))
    op_hpz = assemble_liouvillian(hpz_coefficients(w0p, gam, b, d))
    diff = op_hpz + (-1.0) * op_cl
    # the cross coupling contributes -d * L2PLUS = (i d/2) r dQ
    assert diff.isclose(PhasePolyOperator({(0, 1, 1, 0): 0.5j * d}), tol=1e-14)


def test_model_coefficient_tuples():
    c = kl_coefficients(1.0, 0.3, 1.0)
    assert c.h == (2.0, 0.0, 0.0)
    assert c.gamma == 0.3
    assert c.g == (-0.6, 0.0, 0.0)
    c = cl_coefficients(1.0, 0.6, 1.0)
    assert c.h == (2.0, 0.0, -0.6)
    assert c.g == (-1.2, -1.2, 0.0)
    c = hpz_coefficients(1.0, 0.6, 1.0, 0.2)
    assert c.g == (-1.2, -1.2, -0.2)


def test_coefficient_vector_round_trip():
    c = LiouvillianCoeffs((0.3, -0.4, 0.5), 0.7, (-0.1, 0.2, -0.3))
    back = LiouvillianCoeffs.from_vector(c.as_vector())
    assert back.max_abs_diff(c) == 0.0


def test_negative_gamma_rejected():
    with pytest.raises(ValueError):
        LiouvillianCoeffs((1.0, 0.0, 0.0), -0.1, (0.0, 0.0, 0.0))


def test_conjugation_closed_form_vs_adjoint_exponential():
    """Closed-form coefficient flows against the structure-constant oracle."""
    rng = np.random.default_rng(42)
    gids = list(GENERATOR_ORDER)
    worst = 0.0
    for _ in range(300):
        c = random_coeffs(rng)
        gid = gids[rng.integers(len(gids))]
        p = float(rng.uniform(-1.5, 1.5))
        closed = conjugate_coefficients(gid, p, c)
        oracle = adjoint_conjugate_coefficients(gid, p, c)
        worst = max(worst, closed.max_abs_diff(oracle))
        assert closed.gamma == c.gamma
        assert oracle.gamma == c.gamma
    assert worst <= 1e-10


def test_conjugation_operator_level():
    """Conjugating every linear factor reproduces the coefficient flow."""
    rng = np.random.default_rng(7)
    for _ in range(20):
        c = random_coeffs(rng)
        gid = list(GENERATOR_ORDER)[rng.integers(7)]
        p = float(rng.uniform(-1.2, 1.2))
        op = assemble_liouvillian(c)
        basis = {
            "q": LinearPhaseOperator(1.0, 0.0, 0.0, 0.0),
            "r": LinearPhaseOperator(0.0, 1.0, 0.0, 0.0),
            "dq": LinearPhaseOperator(0.0, 0.0, 1.0, 0.0),
            "dr": LinearPhaseOperator(0.0, 0.0, 0.0, 1.0),
        }
        moved = {k: conjugate_linear(gid, p, v).to_poly() for k, v in basis.items()}
        total = PhasePolyOperator({})
        for (a, b, cc, d), coeff in op.terms.items():
            term = PhasePolyOperator({(0, 0, 0, 0): coeff})
            for key, count in (("q", a), ("r", b), ("dq", cc), ("dr", d)):
                for _ in range(count):
                    term = term @ moved[key]
            total = total + term
        direct = assemble_liouvillian(conjugate_coefficients(gid, p, c))
        assert total.max_abs_diff(direct) <= 1e-12


def test_conjugation_group_law_single_generator():
    rng = np.random.default_rng(11)
    c = random_coeffs(rng)
    for gid in GENERATOR_ORDER:
        once = conjugate_coefficients(gid, 0.4, conjugate_coefficients(gid, 0.3, c))
        both = conjugate_coefficients(gid, 0.7, c)
        assert once.max_abs_diff(both) <= 1e-12


def test_conjugate_linear_fixtures():
    q = LinearPhaseOperator(1.0, 0.0, 0.0, 0.0)
    r = LinearPhaseOperator(0.0, 1.0, 0.0, 0.0)
    # scaling flow acts diagonally on coordinates
    out = conjugate_linear(GeneratorId.O0MI, 0.8, q)
    assert_allclose(out.as_vector(), [math.exp(-0.4), 0, 0, 0], atol=1e-14)
    out = conjugate_linear(GeneratorId.O0MI, 0.8, r)
    assert_allclose(out.as_vector(), [0, math.exp(0.4), 0, 0], atol=1e-14)
    # cross diffusion is nilpotent: Q -> Q - (i p/2) r
    out = conjugate_linear(GeneratorId.L2PLUS, 0.6, q)
    assert_allclose(out.as_vector(), [1.0, -0.3j, 0, 0], atol=1e-14)


def test_conjugate_linear_preserves_commutator_pairing():
    rng = np.random.default_rng(23)
    for _ in range(50):
        a = LinearPhaseOperator.from_vector(
            rng.standard_normal(4) + 1j * rng.standard_normal(4)
        )
        b = LinearPhaseOperator.from_vector(
            rng.standard_normal(4) + 1j * rng.standard_normal(4)
        )
        gid = list(GENERATOR_ORDER)[rng.integers(7)]
        p = float(rng.uniform(-1.0, 1.0))
        before = a.commutator_scalar(b)
        after = conjugate_linear(gid, p, a).commutator_scalar(conjugate_linear(gid, p, b))
        assert abs(before - after) <= 1e-12 * (1.0 + abs(before))


def test_rescale_coordinates_monomials():
    frame = CoordinateFrame(2.0, 0.5)
    op = PhasePolyOperator({(2, 0, 0, 0): 1.0, (0, 1, 0, 1): 3.0, (1, 0, 1, 0): 5.0})
    scaled = rescale_coordinates(op, frame)
    # Q^2 picks s_q^2, r*dr is invariant, Q*dQ is invariant
    assert scaled.terms[(2, 0, 0, 0)] == 4.0
    assert scaled.terms[(0, 1, 0, 1)] == 3.0
    assert scaled.terms[(1, 0, 1, 0)] == 5.0


def test_multi_step_conjugation_gamma_bit_identical():
    rng = np.random.default_rng(99)
    for _ in range(25):
        c = random_coeffs(rng)
        gamma0 = c.gamma
        for _ in range(6):
            gid = list(GENERATOR_ORDER)[rng.integers(7)]
            p = float(rng.uniform(-0.7, 0.7))
            c = conjugate_coefficients(gid, p, c)
        assert c.gamma == gamma0
