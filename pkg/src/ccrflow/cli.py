"""Command-line front end: expression parsing, model runs, bit-stable output.

Grammar for operator expressions (whitespace-insensitive)::

    expr    := ['+'|'-'] term (('+'|'-') term)*
    term    := factor ('*' factor)*
    factor  := primary ['^' ['+'|'-'] integer]
    primary := rational | '(' rational ',' rational ')'   # (real, imag)
             | 'X' | 'P' | name | '(' expr ')'
    rational := integer ['/' integer]

Products are left-associative and preserve noncommutative order.  Negative
exponents are accepted only on scalar parameter factors (so ``m^-1`` is the
inverse mass); ``X^-1`` and ``P^-1`` are rejected.  Any identifier other than
X and P names a real parameter.

CSV convention: header row; complex values as two columns ``re``, ``im``;
17 significant digits in scientific notation; '.' decimal separator; LF line
endings.  Exit codes: 0 success, 1 verification failure, 2 usage error,
3 domain error (caustic, grid too coarse, non-affine flow).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import verify as verify_mod
from .heisenberg import (
    DEFAULT_ORDER,
    NonAffineFlow,
    force_for_model,
    generator,
    newtonian_velocity,
    taylor_flow,
)
from .opalg import OpExpr, P, Polynomial, ScalarCoeff, X, commutator
from .pathint import ConvergenceReport, convergence_study, propagate, short_time_matrix
from .propagator import (
    AffineFlowExact,
    CausticSingularity,
    GridTooCoarse,
    UniformGrid,
    WaveFunction,
    evolve_exact,
    gaussian_kernel,
)

__all__ = ["main", "parse_expression", "ExpressionError", "format_float"]


class ExpressionError(ValueError):
    """Syntax or semantic error in an operator expression, with byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


# ---------------------------------------------------------------------------
# tokenizer / recursive-descent parser
# ---------------------------------------------------------------------------

_SYMBOLS = set("+-*/^(),")


class _Token:
    __slots__ = ("kind", "value", "offset")

    def __init__(self, kind: str, value, offset: int):
        self.kind = kind  # "int" | "name" | one of _SYMBOLS | "end"
        self.value = value
        self.offset = offset


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        start = i
        if ch.isdigit():
            while i < len(text) and text[i].isdigit():
                i += 1
            tokens.append(_Token("int", int(text[start:i]), _byte_offset(text, start)))
        elif ch.isalpha() or ch == "_":
            while i < len(text) and (text[i].isalnum() or text[i] == "_"):
                i += 1
            tokens.append(_Token("name", text[start:i], _byte_offset(text, start)))
        elif ch in _SYMBOLS:
            tokens.append(_Token(ch, ch, _byte_offset(text, start)))
            i += 1
        else:
            raise ExpressionError(f"unexpected character {ch!r}", _byte_offset(text, i))
    tokens.append(_Token("end", None, _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ExpressionError(f"expected {kind!r}", tok.offset)
        return self.advance()

    def parse(self) -> OpExpr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError("trailing input", tok.offset)
        return e

    def expr(self) -> OpExpr:
        sign = 1
        if self.peek().kind in ("+", "-"):
            sign = -1 if self.advance().kind == "-" else 1
        total = self.term() * sign
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            rhs = self.term()
            total = total + rhs if op == "+" else total - rhs
        return total

    def term(self) -> OpExpr:
        total = self.factor()
        while self.peek().kind == "*":
            self.advance()
            total = total * self.factor()
        return total

    def factor(self) -> OpExpr:
        base = self.primary()
        if self.peek().kind == "^":
            caret = self.advance()
            sign = 1
            if self.peek().kind in ("+", "-"):
                sign = -1 if self.advance().kind == "-" else 1
            exponent = sign * self.expect("int").value
            if exponent >= 0:
                return base ** exponent
            scalar = _as_scalar_monomial(base)
            if scalar is None:
                raise ExpressionError(
                    "negative powers unsupported in words", caret.offset)
            return OpExpr.scalar(scalar ** exponent)
        return base

    def primary(self) -> OpExpr:
        tok = self.peek()
        if tok.kind == "int":
            return OpExpr.scalar(self.rational())
        if tok.kind == "name":
            self.advance()
            if tok.value == "X":
                return X
            if tok.value == "P":
                return P
            return OpExpr.scalar(ScalarCoeff.param(tok.value))
        if tok.kind == "(":
            self.advance()
            saved = self.pos
            try:
                re = self.signed_rational()
                if self.peek().kind == ",":
                    self.advance()
                    im = self.signed_rational()
                    self.expect(")")
                    return OpExpr.scalar(ScalarCoeff.rational(re, im))
            except ExpressionError:
                pass
            self.pos = saved
            inner = self.expr()
            self.expect(")")
            return inner
        raise ExpressionError("expected a coefficient, X, P, or '('", tok.offset)

    def rational(self) -> Fraction:
        num = self.expect("int").value
        if self.peek().kind == "/":
            self.advance()
            den = self.expect("int").value
            if den == 0:
                raise ExpressionError("zero denominator", self.tokens[self.pos - 1].offset)
            return Fraction(num, den)
        return Fraction(num)

    def signed_rational(self) -> Fraction:
        sign = 1
        if self.peek().kind in ("+", "-"):
            sign = -1 if self.advance().kind == "-" else 1
        return sign * self.rational()


def _as_scalar_monomial(e: OpExpr) -> ScalarCoeff | None:
    if set(e.terms) <= {""}:
        coeff = e.terms.get("", ScalarCoeff.zero())
        if coeff.is_single_monomial():
            return coeff
    return None


def parse_expression(text: str) -> OpExpr:
    """Parse an operator expression; raises ExpressionError with byte offset."""
    return _Parser(text).parse()


def _force_polynomial(e: OpExpr) -> Polynomial:
    """Interpret a parsed expression as a polynomial in X alone."""
    coeffs = {}
    for word, coeff in e.normal_order().terms.items():
        if "P" in word:
            raise ExpressionError("force must be a polynomial in X only", 0)
        coeffs[len(word)] = coeff
    return Polynomial(coeffs)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """17 significant digits, scientific notation."""
    return f"{x:.16e}"


def _write_lines(lines, path: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def kernel_csv_lines(kernel, grid: UniformGrid) -> list[str]:
    x = grid.points()
    lines = ["x_b,x_a,re,im"]
    for xb in x:
        row = kernel(xb, x)
        for xa, val in zip(x, row):
            lines.append(",".join((format_float(xb), format_float(xa),
                                   format_float(val.real), format_float(val.imag))))
    return lines


def kernel_coefficient_lines(kernel) -> list[str]:
    """The six complex kernel coefficients (a, b, c, d, e, A) as one CSV row."""
    header = []
    values = []
    for name in ("a", "b", "c", "d", "e", "A"):
        z = complex(getattr(kernel, name))
        header += [f"{name}_re", f"{name}_im"]
        values += [format_float(z.real), format_float(z.imag)]
    return [",".join(header), ",".join(values)]


def wavefunction_csv_lines(psi: WaveFunction) -> list[str]:
    lines = ["x,re,im"]
    for xv, val in zip(psi.points(), psi.samples):
        lines.append(",".join((format_float(xv), format_float(val.real),
                               format_float(val.imag))))
    return lines


def report_csv_lines(report: ConvergenceReport) -> list[str]:
    lines = ["steps,dt,l2_error,ratio"]
    for row in report.rows:
        lines.append(",".join((str(row.steps), format_float(row.dt),
                               format_float(row.l2_error), format_float(row.ratio))))
    return lines


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "model": str, "m": float, "omega": float, "F0": float,
    "x_min": float, "x_max": float, "n": int,
    "t": float, "t_total": float, "steps": int, "order": int,
    "x0": float, "p0": float, "sigma": float,
    "force": str, "convergence": str, "output": str,
}


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _CONFIG_KEYS[key](val)
    return values


def _merge_config(args: argparse.Namespace) -> None:
    """Fill unset flags from the config file; flags win."""
    if getattr(args, "config", None) is None:
        return
    file_values = _read_config_file(args.config)
    for key, value in file_values.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _require(args: argparse.Namespace, names: list[str]) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise ValueError(f"missing required option --{name.replace('_', '-')}")


def _default(args: argparse.Namespace, **defaults) -> None:
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _validated_grid(args: argparse.Namespace) -> UniformGrid:
    if args.n < 2:
        raise ValueError("grid needs n >= 2")
    return UniformGrid.from_bounds(args.x_min, args.x_max, args.n)


def _flow_from_args(args: argparse.Namespace) -> AffineFlowExact:
    if args.m is None or not args.m > 0:
        raise ValueError("mass must be given and positive (--m)")
    if args.model == "free":
        return AffineFlowExact.free(args.m)
    if args.model == "harmonic":
        if args.omega is None:
            raise ValueError("harmonic model needs --omega")
        return AffineFlowExact.harmonic(args.m, args.omega)
    if args.model == "linear":
        if args.F0 is None:
            raise ValueError("linear model needs --F0")
        return AffineFlowExact.linear(args.m, args.F0)
    raise ValueError(f"unknown model {args.model!r}")


def _packet(args: argparse.Namespace, grid: UniformGrid) -> WaveFunction:
    return WaveFunction.gaussian_packet(grid, center=args.x0, width=args.sigma,
                                        momentum=args.p0)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_normord(args) -> int:
    expr = parse_expression(args.expr)
    _write_lines([expr.canonical_text()], args.output)
    return 0


def _cmd_comm(args) -> int:
    a = parse_expression(args.expr_a)
    b = parse_expression(args.expr_b)
    _write_lines([commutator(a, b).canonical_text()], args.output)
    return 0


def _cmd_series(args) -> int:
    _merge_config(args)
    _require(args, ["model"])
    _default(args, order=DEFAULT_ORDER)
    if args.order < 0:
        raise ValueError("order must be non-negative")
    force = force_for_model(args.model)
    gen = generator(force, newtonian_velocity())
    lines = [f"X(t) model={args.model} order={args.order}"]
    lines += taylor_flow(X, gen, args.order).text_lines()
    lines.append(f"P(t) model={args.model} order={args.order}")
    lines += taylor_flow(P, gen, args.order).text_lines()
    _write_lines(lines, args.output)
    return 0


def _cmd_kernel(args) -> int:
    _merge_config(args)
    _require(args, ["model", "m", "t", "x_min", "x_max", "n"])
    grid = _validated_grid(args)
    flow = _flow_from_args(args)
    if not args.t > 0:
        raise ValueError("t must be positive")
    kernel = gaussian_kernel(flow, args.t)
    if args.coefficients:
        _write_lines(kernel_coefficient_lines(kernel), args.output)
    else:
        _write_lines(kernel_csv_lines(kernel, grid), args.output)
    return 0


def _cmd_evolve(args) -> int:
    _merge_config(args)
    _require(args, ["model", "m", "t", "x_min", "x_max", "n"])
    _default(args, x0=0.0, p0=0.0, sigma=1.0)
    grid = _validated_grid(args)
    flow = _flow_from_args(args)
    if not args.t > 0:
        raise ValueError("t must be positive")
    psi = _packet(args, grid)
    out = evolve_exact(gaussian_kernel(flow, args.t), psi)
    _write_lines(wavefunction_csv_lines(out), args.output)
    return 0


def _cmd_pathint(args) -> int:
    _merge_config(args)
    _require(args, ["force", "m", "t_total", "x_min", "x_max", "n"])
    _default(args, x0=0.0, p0=0.0, sigma=1.0)
    if not args.m > 0:
        raise ValueError("mass must be positive")
    if not args.t_total > 0:
        raise ValueError("t-total must be positive")
    grid = _validated_grid(args)
    force = _force_polynomial(parse_expression(args.force))
    params = {}
    for name in ("m", "omega", "F0"):
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    psi = _packet(args, grid)
    if args.convergence:
        n_list = [int(part) for part in args.convergence.split(",") if part.strip()]
        if not n_list:
            raise ValueError("--convergence needs at least one step count")
        report = convergence_study(force, args.m, psi, args.t_total, n_list, params)
        _write_lines(report_csv_lines(report), args.report_output)
        steps = n_list[-1]
    else:
        if args.steps is None:
            raise ValueError("need --steps or --convergence")
        if args.steps < 1:
            raise ValueError("--steps must be at least 1")
        steps = args.steps
    kernel = short_time_matrix(force, args.m, args.t_total / steps, grid, params)
    out = propagate(kernel, psi, steps)
    _write_lines(wavefunction_csv_lines(out), args.output)
    return 0


def _cmd_verify(args) -> int:
    lines, ok = verify_mod.run_verification()
    _write_lines(lines, args.output)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _add_common_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=("free", "harmonic", "linear"))
    p.add_argument("--m", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--F0", type=float)


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x-min", dest="x_min", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--n", type=int)


def _add_packet_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x0", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--sigma", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccrflow",
        description="Operator algebra over [X,P]=i, operator flows, Gaussian "
                    "propagators, and a time-sliced grid path integral.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normord", help="print the canonical normal-ordered form")
    p.add_argument("expr")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_normord)

    p = sub.add_parser("comm", help="print the normal-ordered commutator [A, B]")
    p.add_argument("expr_a")
    p.add_argument("expr_b")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_comm)

    p = sub.add_parser("series", help="print operator Taylor series X(t), P(t)")
    p.add_argument("--model", choices=("free", "harmonic", "linear"))
    p.add_argument("--order", type=int)
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_series)

    p = sub.add_parser("kernel", help="CSV of the propagator on a grid")
    _add_common_model_flags(p)
    _add_grid_flags(p)
    p.add_argument("--t", type=float)
    p.add_argument("--coefficients", action="store_true",
                   help="emit the 6 complex kernel coefficients instead")
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("evolve", help="CSV of a packet evolved by the exact kernel")
    _add_common_model_flags(p)
    _add_grid_flags(p)
    _add_packet_flags(p)
    p.add_argument("--t", type=float)
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("pathint", help="CSV of a packet evolved by kernel chaining")
    p.add_argument("--force", help="force polynomial in X, e.g. \"-4*X\"")
    p.add_argument("--m", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--F0", type=float)
    _add_grid_flags(p)
    _add_packet_flags(p)
    p.add_argument("--t-total", dest="t_total", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--convergence", help="comma-separated step counts")
    p.add_argument("--report-output", dest="report_output")
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_pathint)

    p = sub.add_parser("verify", help="run the invariant suite; exit 1 on failure")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CausticSingularity, GridTooCoarse, NonAffineFlow) as exc:
        print(f"ccrflow: domain error: {exc}", file=sys.stderr)
        return 3
    except (ExpressionError, ValueError, OSError) as exc:
        print(f"ccrflow: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
