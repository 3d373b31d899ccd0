import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab import expr as ex


@pytest.mark.parametrize(
    "source, value",
    [
        ("1 + 2*3", 7.0),
        ("(1 + 2)*3", 9.0),
        ("2^3", 8.0),
        ("-x1^2", -4.0),
        ("x1*y2 - y1/x2", 2 * 5 - 3 / 0.5),
        ("sqrt(x1^2 + 5)", 3.0),
        ("(x1 + 2)^(1/2)", 2.0),
        ("(x1)^(-2)", 0.25),
        ("exp(0) + sin(0) + cos(0)", 2.0),
    ],
)
def test_parse_and_evaluate(source, value):
    e = ex.parse_expr(source, 2)
    assert ex.evaluate(e, [2.0, 0.5], [3.0, 5.0]) == pytest.approx(value)


def test_print_round_trip():
    for s in ["x1*y1 + (x2 - 1)^2", "sqrt(y1^2 + y2^2)/(1 + x1^2)", "-(x1 - x2)^(3/2)", "exp(-x1)*cos(y2)"]:
        e = ex.parse_expr(s, 2)
        assert ex.parse_expr(ex.to_source(e), 2) == e


def test_syntax_error_offset():
    with pytest.raises(ex.ExprSyntaxError) as info:
        ex.parse_expr("x1 + * y1", 2)
    assert info.value.offset == 5


def test_chained_power_is_rejected():
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse_expr("x1^2^3", 1)


def test_unknown_identifier():
    with pytest.raises(ex.UnknownIdentifierError) as info:
        ex.parse_expr("x1 + z3", 3)
    assert info.value.name == "z3"


def test_index_out_of_range():
    with pytest.raises(ex.IndexOutOfRangeError):
        ex.parse_expr("x4", 3)
    with pytest.raises(ex.IndexOutOfRangeError):
        ex.parse_expr("y0", 3)


def test_domain_error_names_subexpression():
    e = ex.parse_expr("1 + sqrt(x1 - 2)", 1)
    with pytest.raises(ex.DomainError) as info:
        ex.evaluate(e, [1.0], [1.0])
    assert "x1 - 2" in str(info.value)
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse_expr("1/(x1 - 1)", 1), [1.0], [1.0])


def test_depends_on_and_max_index():
    e = ex.parse_expr("x1*y3 + x2", 3)
    assert ex.max_index(e) == 3
    assert ex.depends_on(e, "x") and ex.depends_on(e, "y")
    assert not ex.depends_on(ex.parse_expr("x1 + 2", 3), "y")


def test_mpmath_evaluation_matches_float():
    e = ex.parse_expr("sqrt(1 + x1^2)*exp(-y1)/(2 + sin(x1))", 1)
    with mpmath.workdps(30):
        hi = ex.evaluate(e, [mpmath.mpf("0.3")], [mpmath.mpf("0.7")], lib=mpmath)
    assert float(hi) == pytest.approx(ex.evaluate(e, [0.3], [0.7]), rel=1e-15)


_atoms = st.sampled_from(["x1", "x2", "y1", "y2", "1", "2.5"])


@st.composite
def _sources(draw, depth=3):
    if depth == 0:
        return draw(_atoms)
    op = draw(st.sampled_from(["+", "-", "*", "atom", "sq"]))
    if op == "atom":
        return draw(_atoms)
    if op == "sq":
        return f"({draw(_sources(depth - 1))})^2"
    return f"({draw(_sources(depth - 1))}) {op} ({draw(_sources(depth - 1))})"


@settings(max_examples=60, deadline=None)
@given(_sources())
def test_printer_preserves_value(source):
    e = ex.parse_expr(source, 2)
    back = ex.parse_expr(ex.to_source(e), 2)
    x, y = [0.3, -0.7], [1.1, 0.4]
    assert math.isclose(ex.evaluate(back, x, y), ex.evaluate(e, x, y), rel_tol=1e-12, abs_tol=1e-12)
