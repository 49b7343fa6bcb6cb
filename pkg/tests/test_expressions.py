import math

import numpy as np
import pytest

from sizepop.expressions import (BinOp, Call, ExpressionError, Neg, Number,
                                 Variable, parse_rate, to_text)


class TestEvaluation:
    def test_constant(self):
        expr = parse_rate("1")
        assert expr(0.0, 0.0) == 1.0
        assert expr(3.7, 12.0) == 1.0

    def test_exp_at_zero(self):
        assert parse_rate("exp(-s)")(0.0, 5.0) == pytest.approx(1.0)

    def test_published_fertility_text(self):
        # oracle: direct arithmetic on the same literal text
        expr = parse_rate("(P^2*exp(-P)*s*exp(-s)+0.5*P^2*exp(-P))/0.40407578")
        expected = 0.5 * 4.0 * math.exp(-2.0) / 0.40407578
        assert expr(0.0, 2.0) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.66985100288175001, abs=1e-15)

    def test_vectorized_over_s(self):
        expr = parse_rate("s*exp(-s) + 0.5")
        s = np.linspace(0.0, 6.0, 11)
        assert np.allclose(expr(s, 1.0), s * np.exp(-s) + 0.5)

    def test_power_right_associative(self):
        assert parse_rate("2^3^2")(0.0, 0.0) == 512.0

    def test_unary_minus_precedence(self):
        assert parse_rate("-s^2")(3.0, 0.0) == -9.0
        assert parse_rate("(-s)^2")(3.0, 0.0) == 9.0

    def test_division(self):
        assert parse_rate("s/P")(1.0, 4.0) == 0.25


class TestErrors:
    def test_syntax_error_carries_offset(self):
        with pytest.raises(ExpressionError, match=r"byte 10"):
            parse_rate("exp(-s) * * P")

    def test_unknown_identifier_named(self):
        with pytest.raises(ExpressionError, match="'q'"):
            parse_rate("q + 1")

    def test_unknown_function_named(self):
        with pytest.raises(ExpressionError, match="'sin'"):
            parse_rate("sin(s)")

    def test_trailing_garbage(self):
        with pytest.raises(ExpressionError, match="trailing"):
            parse_rate("1 + 2) ")

    def test_unbalanced_parenthesis(self):
        with pytest.raises(ExpressionError):
            parse_rate("exp(-s")

    def test_stray_character(self):
        with pytest.raises(ExpressionError):
            parse_rate("s # P")


def _random_ast(rng, depth=0):
    choice = rng.integers(0, 6 if depth < 4 else 2)
    if choice == 0:
        return Number(float(rng.choice([0.0, 1.0, 0.5, 2.0, 3.25, 10.0])))
    if choice == 1:
        return Variable(str(rng.choice(["s", "P"])))
    if choice == 2:
        return Neg(_random_ast(rng, depth + 1))
    if choice == 3:
        return Call("exp", _random_ast(rng, depth + 1))
    op = str(rng.choice(["+", "-", "*", "/", "^"]))
    return BinOp(op, _random_ast(rng, depth + 1), _random_ast(rng, depth + 1))


class TestRoundTrip:
    def test_parse_print_parse_identity(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            tree = _random_ast(rng)
            text = to_text(tree)
            assert parse_rate(text).ast == tree, text

    def test_round_trip_on_source_text(self):
        texts = [
            "1.9*exp(-s)/0.99752125",
            "(P^2*exp(-P)*s*exp(-s)+0.5*P^2*exp(-P))/0.40407578",
            "s-3",
            "-s^2 + (P/2)^3",
        ]
        for text in texts:
            expr = parse_rate(text)
            assert parse_rate(expr.to_text()).ast == expr.ast

    def test_uses_variable(self):
        assert parse_rate("exp(-0.4*s)").uses_variable("s")
        assert not parse_rate("exp(-0.4*s)").uses_variable("P")
