"""
Custom coefficient fields from arithmetic expressions such as `2*sin(a)*cos(b)`.

Only numbers, parameter names, `pi`, `sin`, `cos`, `sqrt`, `+ - * / ^ **` and parentheses
are accepted; anything else is rejected before sympy sees the text.
"""

import re
import tokenize
from collections.abc import Sequence
from io import StringIO

import numpy as np
import sympy
from qg import HamiltonianField
from qg.geometry import Point
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

FUNCTIONS = {"sin": sympy.sin, "cos": sympy.cos, "sqrt": sympy.sqrt}
CONSTANTS = {"pi": sympy.pi}
OPERATORS = {"+", "-", "*", "/", "^", "**", "(", ")"}
NAME_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_TRANSFORMATIONS = standard_transformations + (convert_xor,)
# the evaluation namespace parse_expr needs for literals and nothing else
_GLOBALS = {
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
}


class ExpressionError(ValueError): ...


def _check_tokens(text: str, allowed_names: set[str]) -> None:
    try:
        tokens = list(tokenize.generate_tokens(StringIO(text).readline))
    except (tokenize.TokenError, IndentationError) as e:
        raise ExpressionError(f"cannot tokenize '{text}': {e}") from e

    for token in tokens:
        match token.type:
            case tokenize.NUMBER | tokenize.NEWLINE | tokenize.NL | tokenize.ENDMARKER:
                continue
            case tokenize.NAME if token.string in allowed_names:
                continue
            case tokenize.OP if token.string in OPERATORS:
                continue
            case _:
                raise ExpressionError(
                    f"'{token.string}' at column {token.start[1]} is not allowed in '{text}'"
                )


def parse_component(text: str, names: Sequence[str]) -> sympy.Expr:
    allowed = set(names) | set(FUNCTIONS) | set(CONSTANTS)
    _check_tokens(text, allowed)

    symbols = {name: sympy.Symbol(name, real=True) for name in names}
    try:
        expr = parse_expr(
            text,
            local_dict={**symbols, **FUNCTIONS, **CONSTANTS},
            global_dict=_GLOBALS,
            transformations=_TRANSFORMATIONS,
        )
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        raise ExpressionError(f"cannot parse '{text}': {e}") from e

    if not isinstance(expr, sympy.Expr):
        raise ExpressionError(f"'{text}' is not a real arithmetic expression")
    return expr


def field_from_expressions(
    components: Sequence[str], names: Sequence[str], label: str = "custom"
) -> HamiltonianField:
    """
    Builds X(λ) from three component expressions. Partials come from symbolic
    differentiation, so the field carries exact derivatives.
    """

    if len(components) != 3:
        raise ExpressionError(f"a field needs 3 components, got {len(components)}")
    if not names:
        raise ExpressionError("a field needs at least one parameter name")
    for name in names:
        if not NAME_PATTERN.match(name) or name in FUNCTIONS or name in CONSTANTS:
            raise ExpressionError(f"'{name}' cannot be used as a parameter name")
    if len(set(names)) != len(names):
        raise ExpressionError(f"parameter names must be distinct, got {list(names)}")

    exprs = sympy.Matrix([parse_component(text, names) for text in components])
    symbols = [sympy.Symbol(name, real=True) for name in names]
    jacobian = exprs.jacobian(symbols)

    value_fn = sympy.lambdify(symbols, exprs, modules="numpy")
    partial_fns = {
        name: sympy.lambdify(symbols, jacobian[:, i], modules="numpy")
        for i, name in enumerate(names)
    }
    ordered = tuple(names)

    def value(point: Point) -> np.ndarray:
        return np.asarray(value_fn(*(point[n] for n in ordered)), dtype=np.float64).reshape(3)

    def partial(point: Point, name: str) -> np.ndarray:
        result = partial_fns[name](*(point[n] for n in ordered))
        return np.asarray(result, dtype=np.float64).reshape(3)

    return HamiltonianField(names=ordered, value=value, partial=partial, label=label)
