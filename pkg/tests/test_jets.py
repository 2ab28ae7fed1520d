import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from centroaffine import jets
from centroaffine.errors import DomainError, SingularJetError, SingularSystemError
from centroaffine.jets import TaylorJet, extract_partial, seed_variable


def u(i=0, value=0.0, nvars=1):
    return seed_variable(i, value, nvars)


def coeffs_1d(jet):
    return [jet.coeff((k,)) for k in range(5)]


# ---------------------------------------------------------------- layout


def test_multi_index_count_and_order():
    for n in range(1, 6):
        alphas = jets.multi_indices(n)
        assert len(alphas) == math.comb(n + 4, 4)
        assert alphas[0] == (0,) * n
        degrees = [sum(a) for a in alphas]
        assert degrees == sorted(degrees)
        assert len(set(alphas)) == len(alphas)


def test_graded_lex_within_degree():
    alphas = jets.multi_indices(2)
    assert alphas[:6] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


# ---------------------------------------------------------------- seeding


def test_seed_variable_first():
    a = seed_variable(0, 0.3, 2)
    assert a.value == 0.3
    assert a.coeff((1, 0)) == 1.0
    assert np.count_nonzero(a.coeffs) == 2


def test_seed_variable_second():
    a = seed_variable(1, 0.0, 2)
    assert a.coeff((0, 1)) == 1.0
    assert np.count_nonzero(a.coeffs) == 1


def test_seed_variable_out_of_range():
    with pytest.raises(IndexError):
        seed_variable(3, 1.0, 2)


# ---------------------------------------------------------------- arithmetic


def test_difference_of_squares():
    x = u()
    p = (1 + x) * (1 - x)
    assert coeffs_1d(p) == [1.0, 0.0, -1.0, 0.0, 0.0]


def test_geometric_series():
    x = u()
    assert coeffs_1d(1 / (1 - x)) == pytest.approx([1, 1, 1, 1, 1], abs=1e-15)


def test_division_by_zero_constant():
    x = u()
    with pytest.raises(SingularJetError):
        1 / x
    with pytest.raises(ZeroDivisionError):
        jets.jet_arith(TaylorJet.const(1.0, 1), x, "div")


def test_jet_arith_ops():
    x, y = u(0, 0.5, 2), u(1, -0.25, 2)
    assert jets.jet_arith(x, y, "add").value == 0.25
    assert jets.jet_arith(x, y, "sub").value == 0.75
    assert jets.jet_arith(x, y, "mul").coeff((1, 1)) == 1.0
    with pytest.raises(ValueError):
        jets.jet_arith(x, y, "mod")


def test_immutable():
    x = u()
    with pytest.raises(AttributeError):
        x.coeffs = None


# ---------------------------------------------------------------- elementary


def test_log_series():
    x = u()
    assert coeffs_1d(jets.log(1 + x)) == pytest.approx([0, 1, -1 / 2, 1 / 3, -1 / 4], abs=1e-15)


def test_sqrt_constant():
    assert coeffs_1d(jets.sqrt(TaylorJet.const(4.0, 1))) == [2.0, 0, 0, 0, 0]


def test_log_domain():
    with pytest.raises(DomainError):
        jets.log(TaylorJet.const(-1.0, 1))
    with pytest.raises(DomainError):
        jets.sqrt(TaylorJet.const(0.0, 1))


@pytest.mark.parametrize(
    "fn, series",
    [
        (jets.exp, [1, 1, 1 / 2, 1 / 6, 1 / 24]),
        (jets.sin, [0, 1, 0, -1 / 6, 0]),
        (jets.cos, [1, 0, -1 / 2, 0, 1 / 24]),
    ],
)
def test_elementary_series_at_zero(fn, series):
    assert coeffs_1d(fn(u())) == pytest.approx(series, abs=1e-15)


def test_power_integer_and_fractional():
    x = u(0, 2.0)
    cube = jets.power(x, 3)
    assert coeffs_1d(cube) == pytest.approx([8, 12, 6, 1, 0])
    half = jets.power(x, 0.5)
    assert half.value == pytest.approx(math.sqrt(2))
    assert half.coeff((1,)) == pytest.approx(0.5 / math.sqrt(2))
    with pytest.raises(DomainError):
        jets.power(u(0, -1.0), 0.5)


def test_jet_elementary_dispatch():
    x = u(0, 1.0)
    assert jets.jet_elementary(x, "ln").value == 0.0
    assert jets.jet_elementary(x, "pow", 2).coeff((1,)) == 2.0
    with pytest.raises(ValueError):
        jets.jet_elementary(x, "tan")


# ---------------------------------------------------------------- partials


def test_extract_partial_examples():
    x = u()
    assert extract_partial(x**4, (4,)) == 24.0
    assert extract_partial(TaylorJet.const(3.0, 2), (1, 0)) == 0.0
    assert extract_partial(u(0, 0, 2) * u(1, 0, 2), (1, 1)) == 1.0
    with pytest.raises(ValueError):
        extract_partial(x, (5,))


# ---------------------------------------------------------------- linear solve


def test_solve_identity():
    sp = jets.space(2)
    b = [seed_variable(0, 0.3, 2) * 2, seed_variable(1, -0.1, 2) + 5]
    one, zero = TaylorJet.const(1.0, 2), TaylorJet.const(0.0, 2)
    x = jets.jet_linear_solve([[one, zero], [zero, one]], b)
    for xi, bi in zip(x, b):
        np.testing.assert_array_equal(xi.coeffs, bi.coeffs)
    assert sp.size == 15


def test_solve_diagonal_geometric():
    x = u()
    sol = jets.jet_linear_solve([[1 + x]], [TaylorJet.const(1.0, 1)])
    assert coeffs_1d(sol[0]) == pytest.approx([1, -1, 1, -1, 1], abs=1e-15)


def test_solve_singular():
    x = u(0, 0.0, 2)
    y = u(1, 0.0, 2)
    with pytest.raises(SingularSystemError):
        jets.jet_linear_solve([[x, y], [y, x]], [x, y])


# ---------------------------------------------------------------- properties

# Polynomials with integer coefficients in two variables; expanding them by
# hand is exact, so every extracted partial must match bit for bit.

poly_terms = st.dictionaries(
    st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(lambda a: sum(a) <= 4),
    st.integers(-9, 9),
    max_size=8,
)


def poly_value_jet(terms, x, y):
    out = TaylorJet.const(0.0, 2)
    for (i, j), c in terms.items():
        out = out + c * (x**i) * (y**j)
    return out


def shift_coeffs(terms, a, b):
    """Taylor coefficients of p(a + s, b + t) in (s, t), by binomial expansion."""
    out = {}
    for (i, j), c in terms.items():
        for p in range(i + 1):
            for q in range(j + 1):
                k = c * math.comb(i, p) * math.comb(j, q) * a ** (i - p) * b ** (j - q)
                out[(p, q)] = out.get((p, q), 0) + k
    return out


@given(poly_terms, st.integers(-2, 2), st.integers(-2, 2))
def test_polynomial_coefficients_exact(terms, a, b):
    x, y = seed_variable(0, a, 2), seed_variable(1, b, 2)
    jet = poly_value_jet(terms, x, y)
    expected = shift_coeffs(terms, a, b)
    for alpha in jets.multi_indices(2):
        assert jet.coeff(alpha) == expected.get(alpha, 0)


@given(poly_terms, poly_terms)
def test_product_matches_polynomial_product(p, q):
    x, y = seed_variable(0, 0.0, 2), seed_variable(1, 0.0, 2)
    prod = poly_value_jet(p, x, y) * poly_value_jet(q, x, y)
    expected = {}
    for (a, ca), (b, cb) in itertools.product(p.items(), q.items()):
        c = (a[0] + b[0], a[1] + b[1])
        if sum(c) <= 4:
            expected[c] = expected.get(c, 0) + ca * cb
    for alpha in jets.multi_indices(2):
        assert prod.coeff(alpha) == expected.get(alpha, 0)


def _order3_view(jet4):
    sp3 = jets.space(jet4.nvars, 3)
    return np.array([jet4.coeff(a) for a in sp3.alphas])


unit_floats = st.floats(-0.9, 0.9, allow_nan=False)


@given(unit_floats, unit_floats, st.sampled_from(["exp", "sin", "cos", "ln", "sqrt", "div", "mul"]))
def test_truncation_commutes(a, b, op):
    def build(order):
        x = jets.TaylorJet(jets.space(2, order), jets.space(2, order).variable(0, a))
        y = jets.TaylorJet(jets.space(2, order), jets.space(2, order).variable(1, b))
        base = 1.5 + x * y + 0.3 * x * x
        if op == "div":
            return base / (2 + y)
        if op == "mul":
            return base * (x - y)
        return jets.ELEMENTARY[op](base)

    np.testing.assert_allclose(_order3_view(build(4)), build(3).coeffs, rtol=1e-13, atol=1e-14)


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_linear_solve_residual(k, seed):
    r = np.random.default_rng(seed)
    n = 2
    sp = jets.space(n)
    A = r.normal(size=(k, k, sp.size))
    A[:, :, 0] += 3 * np.eye(k)
    b = r.normal(size=(k, sp.size))
    x = sp.solve(A, b)
    resid = sp.mul(A, x[None, :, :]).sum(axis=1) - b
    low = sp.degree <= 1
    assert np.max(np.abs(resid[:, low])) <= 1e-10 * (1 + np.max(np.abs(b)))
    assert np.max(np.abs(resid)) <= 1e-9 * (1 + np.max(np.abs(b)))


# Fixed set of 20 identities, checked coefficient by coefficient.
IDENTITIES = [
    (lambda x, y: (x + y) ** 2, lambda x, y: x * x + 2 * x * y + y * y),
    (lambda x, y: (x - y) * (x + y), lambda x, y: x * x - y * y),
    (lambda x, y: (x + y) ** 3, lambda x, y: x**3 + 3 * x * x * y + 3 * x * y * y + y**3),
    (lambda x, y: (x + y) ** 4, lambda x, y: x**4 + 4 * x**3 * y + 6 * x**2 * y**2 + 4 * x * y**3 + y**4),
    (lambda x, y: (1 + x) * (1 - x + x * x), lambda x, y: 1 + x**3),
    (lambda x, y: (1 - x) * (1 + x + x * x + x**3), lambda x, y: 1 - x**4),
    (lambda x, y: (x * y) ** 2, lambda x, y: x * x * y * y),
    (lambda x, y: (x + 2) * (y - 3), lambda x, y: x * y - 3 * x + 2 * y - 6),
    (lambda x, y: (x - 1) ** 4, lambda x, y: x**4 - 4 * x**3 + 6 * x * x - 4 * x + 1),
    (lambda x, y: (x + y + 1) ** 2, lambda x, y: x * x + y * y + 1 + 2 * x * y + 2 * x + 2 * y),
    (lambda x, y: (x * x + y * y) ** 2, lambda x, y: x**4 + 2 * x * x * y * y + y**4),
    (lambda x, y: (x - y) ** 3, lambda x, y: x**3 - 3 * x * x * y + 3 * x * y * y - y**3),
    (lambda x, y: x * (y + 1) - y * (x - 1), lambda x, y: x + y),
    (lambda x, y: (2 * x + 3 * y) * (2 * x - 3 * y), lambda x, y: 4 * x * x - 9 * y * y),
    (lambda x, y: (x + 1) ** 2 * (y + 1) ** 2, lambda x, y: ((x + 1) * (y + 1)) ** 2),
    (lambda x, y: (x**2 - y) * (x**2 + y), lambda x, y: x**4 - y * y),
    (lambda x, y: (1 + x + y) ** 3 - (x + y) ** 3, lambda x, y: 1 + 3 * (x + y) + 3 * (x + y) ** 2),
    (lambda x, y: x**3 * y - y**3 * x, lambda x, y: x * y * (x - y) * (x + y)),
    (lambda x, y: (x - 2) ** 2 + (y + 2) ** 2, lambda x, y: x * x + y * y - 4 * x + 4 * y + 8),
    (lambda x, y: (3 * x - y + 2) * 5, lambda x, y: 15 * x - 5 * y + 10),
]


@pytest.mark.parametrize("lhs, rhs", IDENTITIES)
def test_polynomial_identities(lhs, rhs):
    for a, b in [(0.0, 0.0), (1.0, -2.0), (3.0, 0.5)]:
        x, y = seed_variable(0, a, 2), seed_variable(1, b, 2)
        np.testing.assert_array_equal(lhs(x, y).coeffs, rhs(x, y).coeffs)
