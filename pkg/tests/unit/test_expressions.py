"""
Expression Language Tests
=========================

Tokenizer, recursive-descent parser, vectorized evaluation and symbolic
differentiation of test-function expressions.

Run with:
    pytest tests/unit/test_expressions.py -v
"""
import math

import numpy as np
import pytest

from gfc_engine.errors import ExpressionSyntaxError, UnknownIdentifierError, UnsupportedDerivativeError
from gfc_engine.expressions import (
    BinOp,
    Call,
    Const,
    Neg,
    Num,
    Var,
    compile_expression,
    depends_on_t,
    differentiate_expression,
    evaluate,
    parse_expression,
    to_source,
    tokenize,
)


@pytest.mark.unit
class TestParser:
    """Grammar, precedence and error offsets"""

    def test_polynomial_tree(self):
        assert parse_expression("t^2 + 1") == BinOp("+", BinOp("^", Var(), Num(2)), Num(1))

    def test_multiplication_binds_tighter_than_addition(self):
        assert parse_expression("1 + 2 * 3") == BinOp("+", Num(1), BinOp("*", Num(2), Num(3)))

    def test_power_is_right_associative(self):
        expr = parse_expression("2^3^2")
        assert expr == BinOp("^", Num(2), BinOp("^", Num(3), Num(2)))
        assert evaluate(expr, 0.0) == 512.0

    def test_unary_minus_binds_looser_than_power(self):
        assert evaluate(parse_expression("-t^2"), 3.0) == -9.0
        assert evaluate(parse_expression("2^-1"), 0.0) == 0.5

    def test_constants_and_calls(self):
        expr = parse_expression("pow(t, 2) * pi")
        assert expr == BinOp("*", Call("pow", (Var(), Num(2))), Const("pi"))

    def test_token_offsets(self):
        tokens = tokenize("exp( t)")
        assert [(tok.kind, tok.offset) for tok in tokens] == [
            ("ident", 0), ("op", 3), ("ident", 5), ("op", 6), ("end", 7),
        ]

    def test_missing_operand_offset(self):
        with pytest.raises(ExpressionSyntaxError) as exc_info:
            parse_expression("2*^t")
        assert exc_info.value.offset == 2
        assert exc_info.value.one_line().startswith("error[syntax]")

    def test_unbalanced_parenthesis(self):
        with pytest.raises(ExpressionSyntaxError) as exc_info:
            parse_expression("(t + 1")
        assert exc_info.value.offset == 6

    def test_unexpected_character(self):
        with pytest.raises(ExpressionSyntaxError) as exc_info:
            parse_expression("t $ 2")
        assert exc_info.value.offset == 2

    @pytest.mark.parametrize("src", ["", "   "])
    def test_empty_expression(self, src):
        with pytest.raises(ExpressionSyntaxError):
            parse_expression(src)

    def test_trailing_tokens(self):
        with pytest.raises(ExpressionSyntaxError):
            parse_expression("t t")

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError) as exc_info:
            parse_expression("1 + foo(t)")
        assert exc_info.value.name == "foo"
        assert exc_info.value.offset == 4
        assert exc_info.value.code == "identifier"

    @pytest.mark.parametrize("src", ["pow(t)", "exp(t, 1)", "sin()"])
    def test_wrong_arity(self, src):
        with pytest.raises(ExpressionSyntaxError):
            parse_expression(src)

    @pytest.mark.parametrize("src", [
        "exp(-t)*sin(2*t) + pi",
        "-t^0.5 / (1 + t)",
        "pow(t, 1.5e-3) - gamma(2.5)",
        "2^3^2",
    ])
    def test_source_round_trip(self, src):
        expr = parse_expression(src)
        assert parse_expression(to_source(expr)) == expr


@pytest.mark.unit
class TestEvaluation:
    """Vectorized evaluation"""

    def test_singular_product(self):
        assert evaluate(parse_expression("exp(-1*t)*t^(-0.5)"), 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_scalar_and_array_results(self):
        fn = compile_expression("t^2 + 1")
        assert isinstance(fn(2.0), float)
        np.testing.assert_array_equal(fn(np.array([0.0, 1.0, 2.0])), [1.0, 2.0, 5.0])

    def test_constant_expression_broadcasts(self):
        values = compile_expression("pi")(np.zeros(4))
        assert values.shape == (4,)
        np.testing.assert_allclose(values, math.pi)

    def test_gamma_is_vectorized(self):
        np.testing.assert_allclose(compile_expression("gamma(t)")(np.array([1.0, 2.0, 3.0, 0.5])),
                                   [1.0, 1.0, 2.0, math.sqrt(math.pi)], rtol=1e-13)

    def test_log_and_sqrt(self):
        assert evaluate(parse_expression("log(exp(2)) + sqrt(t)"), 9.0) == pytest.approx(5.0)


@pytest.mark.unit
class TestDerivative:
    """Symbolic differentiation with light constant folding"""

    def test_power_rule_tree(self):
        assert differentiate_expression(parse_expression("t^2")) == BinOp("*", Num(2), BinOp("^", Var(), Num(1)))

    def test_exponential_is_its_own_derivative(self):
        expr = parse_expression("exp(t)")
        assert differentiate_expression(expr) == Call("exp", (Var(),))

    def test_chain_rule_tree(self):
        result = differentiate_expression(parse_expression("sin(2*t)"))
        assert result == BinOp("*", Call("cos", (BinOp("*", Num(2), Var()),)), Num(2.0))

    def test_constant_folds_to_zero(self):
        assert differentiate_expression(parse_expression("pi * 3 + gamma(2.5)")) == Num(0.0)

    def test_gamma_of_t_is_rejected(self):
        with pytest.raises(UnsupportedDerivativeError) as exc_info:
            differentiate_expression(parse_expression("gamma(t)"))
        assert exc_info.value.code == "derivative"

    @pytest.mark.parametrize("src", [
        "sin(t)^2 * exp(-t) / (1 + t)",
        "t^t",
        "2^t + cos(t^2)",
        "sqrt(1 + t) - log(2 + t)",
        "pow(t, 1.5) * (-t)",
    ])
    def test_matches_central_difference(self, src):
        expr = parse_expression(src)
        derivative = differentiate_expression(expr)
        t = np.array([0.3, 1.1, 1.7])
        h = 1e-6
        numeric = (evaluate(expr, t + h) - evaluate(expr, t - h)) / (2.0 * h)
        np.testing.assert_allclose(evaluate(derivative, t), numeric, rtol=1e-6, atol=1e-8)

    def test_depends_on_t(self):
        assert depends_on_t(parse_expression("exp(2 * t)"))
        assert not depends_on_t(parse_expression("gamma(0.5) + pi"))
        assert depends_on_t(Neg(Var()))
