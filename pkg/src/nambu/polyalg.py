"""Exact scalar arithmetic: multivariate polynomials over Q and rational matrices.

Everything in this module is exact. Polynomials are kept in a sparse
exponent-vector representation with `fractions.Fraction` coefficients and a
graded-lexicographic canonical ordering, so printing and JSON output are
byte-stable. Matrices carry Fraction entries and support exact rank, kernel,
solving (with a Farkas inconsistency certificate), congruence diagonalization
of symmetric forms, and exact characteristic polynomials.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

Rational = Fraction

NEG_INF = float("-inf")


class NambuError(Exception):
    """Base class for all library errors."""


class InputError(NambuError):
    """Malformed user input (bad JSON, bad polynomial text, schema violation)."""


class PreconditionError(NambuError):
    """A documented precondition of an operation is not met."""


class SolveInconsistencyError(NambuError):
    """An internal graded linear solve turned out inconsistent."""

    def __init__(self, message: str, degree: Optional[int] = None, residual=None):
        super().__init__(message)
        self.degree = degree
        self.residual = residual


class PolyParseError(InputError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot coerce {value!r} to an exact rational")


def _grlex_key(exps: Tuple[int, ...]) -> Tuple[int, Tuple[int, ...]]:
    return (sum(exps), exps)


class Poly:
    """Multivariate polynomial with exact rational coefficients.

    ``terms`` maps exponent vectors (tuples of length ``nvars``) to nonzero
    Fractions. Instances are immutable; arithmetic returns new objects.
    The degree of the zero polynomial is ``float('-inf')``.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        clean = {}
        if terms:
            for exps, coeff in terms.items():
                exps = tuple(int(e) for e in exps)
                if len(exps) != nvars:
                    raise ValueError(
                        f"exponent vector {exps} has length {len(exps)}, expected {nvars}")
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative exponent in {exps}")
                coeff = _as_fraction(coeff)
                if coeff != 0:
                    clean[exps] = coeff
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def _make(cls, nvars: int, terms: dict) -> "Poly":
        """Internal constructor for already-normalized term dicts."""
        self = object.__new__(cls)
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "terms", terms)
        return self

    @staticmethod
    def zero(nvars: int) -> "Poly":
        return Poly._make(nvars, {})

    @staticmethod
    def const(nvars: int, value) -> "Poly":
        return Poly(nvars, {(0,) * nvars: _as_fraction(value)})

    @staticmethod
    def one(nvars: int) -> "Poly":
        return Poly.const(nvars, 1)

    @staticmethod
    def variable(nvars: int, i: int) -> "Poly":
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for nvars={nvars}")
        exps = tuple(1 if j == i else 0 for j in range(nvars))
        return Poly(nvars, {exps: Fraction(1)})

    @staticmethod
    def monomial(nvars: int, exps: Sequence[int], coeff=1) -> "Poly":
        return Poly(nvars, {tuple(exps): _as_fraction(coeff)})

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self):
        if not self.terms:
            return NEG_INF
        return max(sum(e) for e in self.terms)

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exps), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def sorted_terms(self):
        """Terms in graded-lexicographic order (deterministic)."""
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]))

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    __hash__ = None

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "Poly"):
        if self.nvars != other.nvars:
            raise ValueError(
                f"variable-count mismatch: {self.nvars} vs {other.nvars}")

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        out = dict(self.terms)
        for exps, c in other.terms.items():
            s = out.get(exps, Fraction(0)) + c
            if s:
                out[exps] = s
            else:
                out.pop(exps, None)
        return Poly._make(self.nvars, out)

    def __sub__(self, other: "Poly") -> "Poly":
        self._check(other)
        out = dict(self.terms)
        for exps, c in other.terms.items():
            s = out.get(exps, Fraction(0)) - c
            if s:
                out[exps] = s
            else:
                out.pop(exps, None)
        return Poly._make(self.nvars, out)

    def __neg__(self) -> "Poly":
        return Poly._make(self.nvars, {e: -c for e, c in self.terms.items()})

    def scale(self, scalar) -> "Poly":
        scalar = _as_fraction(scalar)
        if scalar == 0:
            return Poly.zero(self.nvars)
        return Poly._make(self.nvars, {e: c * scalar for e, c in self.terms.items()})

    def mul(self, other: "Poly", trunc: Optional[int] = None) -> "Poly":
        """Exact product; terms of total degree > trunc are dropped if given."""
        self._check(other)
        out = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2 in other.terms.items():
                if trunc is not None and d1 + sum(e2) > trunc:
                    continue
                exps = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(exps, Fraction(0)) + c1 * c2
                if s:
                    out[exps] = s
                else:
                    out.pop(exps, None)
        return Poly._make(self.nvars, out)

    def __mul__(self, other):
        if isinstance(other, Poly):
            return self.mul(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def pow(self, k: int, trunc: Optional[int] = None) -> "Poly":
        if k < 0:
            raise ValueError("negative power")
        result = Poly.one(self.nvars)
        base = self
        while k:
            if k & 1:
                result = result.mul(base, trunc)
            k >>= 1
            if k:
                base = base.mul(base, trunc)
        return result

    # -- calculus and grading ---------------------------------------------

    def partial(self, i: int) -> "Poly":
        """Exact partial derivative with respect to variable i (0-based)."""
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range")
        out = {}
        for exps, c in self.terms.items():
            e = exps[i]
            if e == 0:
                continue
            new = list(exps)
            new[i] = e - 1
            out[tuple(new)] = c * e
        return Poly._make(self.nvars, out)

    def homogeneous_component(self, d: int) -> "Poly":
        if d < 0:
            raise ValueError("degree must be nonnegative")
        return Poly._make(self.nvars,
                          {e: c for e, c in self.terms.items() if sum(e) == d})

    def truncate(self, max_degree: int) -> "Poly":
        return Poly._make(self.nvars,
                          {e: c for e, c in self.terms.items() if sum(e) <= max_degree})

    def min_degree(self):
        if not self.terms:
            return NEG_INF
        return min(sum(e) for e in self.terms)

    def substitute(self, args: Sequence["Poly"], trunc: Optional[int] = None) -> "Poly":
        """Substitute args[i] for variable i; all args share one variable count."""
        if len(args) != self.nvars:
            raise ValueError("substitution needs one polynomial per variable")
        if not args:
            # constant polynomial in zero variables
            return self
        m = args[0].nvars
        for a in args:
            if a.nvars != m:
                raise ValueError("substitution arguments disagree on nvars")
        out = Poly.zero(m)
        powers = [{0: Poly.one(m)} for _ in range(self.nvars)]

        def power(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = power(i, k - 1).mul(args[i], trunc)
            return cache[k]

        for exps, c in self.sorted_terms():
            term = Poly.const(m, c)
            for i, e in enumerate(exps):
                if e:
                    term = term.mul(power(i, e), trunc)
            out = out + term
        return out

    def evaluate(self, point: Sequence) -> Fraction:
        pt = [_as_fraction(v) for v in point]
        if len(pt) != self.nvars:
            raise ValueError("point has wrong dimension")
        total = Fraction(0)
        for exps, c in self.terms.items():
            v = c
            for x, e in zip(pt, exps):
                for _ in range(e):
                    v *= x
            total += v
        return total

    def exact_div(self, divisor: "Poly") -> "Poly":
        """Exact division; raises SolveInconsistencyError on a nonzero remainder."""
        self._check(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        # long division with the graded-lex leading term of the divisor
        lead = max(divisor.terms, key=_grlex_key)
        lead_c = divisor.terms[lead]
        rem = dict(self.terms)
        quot = {}
        while rem:
            exps = max(rem, key=_grlex_key)
            diff = tuple(a - b for a, b in zip(exps, lead))
            if any(d < 0 for d in diff):
                raise SolveInconsistencyError(
                    "polynomial division left a nonzero remainder")
            c = rem[exps] / lead_c
            quot[diff] = quot.get(diff, Fraction(0)) + c
            for de, dc in divisor.terms.items():
                key = tuple(a + b for a, b in zip(diff, de))
                s = rem.get(key, Fraction(0)) - c * dc
                if s:
                    rem[key] = s
                else:
                    rem.pop(key, None)
        return Poly._make(self.nvars, {k: v for k, v in quot.items() if v})

    def linear_coefficients(self) -> List[Fraction]:
        """Coefficient vector of the degree-1 part."""
        out = [Fraction(0)] * self.nvars
        for exps, c in self.terms.items():
            if sum(exps) == 1:
                out[exps.index(1)] = c
        return out

    # -- printing ----------------------------------------------------------

    def to_str(self, varname: str = "x") -> str:
        if not self.terms:
            return "0"
        pieces = []
        for exps, c in self.sorted_terms():
            factors = []
            for i, e in enumerate(exps):
                if e == 0:
                    continue
                v = f"{varname}{i + 1}"
                factors.append(v if e == 1 else f"{v}^{e}")
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = str(mag) + "*" + "*".join(factors)
            pieces.append(("-" if c < 0 else "+", body))
        sign, body = pieces[0]
        text = ("-" if sign == "-" else "") + body
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"Poly({self.nvars}, {self.to_str()!r})"


def poly_arith(op: str, lhs: Poly, rhs) -> Poly:
    """Dispatch helper mirroring the add/sub/mul/scale operation table."""
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        return lhs.mul(rhs)
    if op == "scale":
        return lhs.scale(rhs)
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# polynomial text grammar: "3/2*x1^2*x3 - x2 + 1"
# ---------------------------------------------------------------------------

def parse_poly(text: str, nvars: int, varname: str = "x") -> Poly:
    """Parse the polynomial mini-grammar.

    Terms are sums/differences of products of rational numbers and powers of
    x1..xn; "*" between factors is optional; whitespace is insignificant.
    Errors carry the offending position.
    """
    tokens = _tokenize(text, varname)
    if not tokens:
        raise PolyParseError("empty polynomial", 0)
    pos = 0
    result = Poly.zero(nvars)
    first = True
    while pos < len(tokens):
        kind, _, at = tokens[pos]
        sign = Fraction(1)
        if kind in ("+", "-"):
            sign = Fraction(1) if kind == "+" else Fraction(-1)
            pos += 1
            if pos >= len(tokens):
                raise PolyParseError("expected a term after sign", at + 1)
        elif not first:
            raise PolyParseError("expected '+' or '-' between terms", at)
        term, pos = _parse_term(tokens, pos, nvars, varname, text)
        result = result + term.scale(sign)
        first = False
    return result


def _tokenize(text: str, varname: str):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^":
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            num = int(text[i:j])
            if j < n and text[j] == "/":
                k = j + 1
                if k >= n or not text[k].isdigit():
                    raise PolyParseError("expected denominator digits", j + 1)
                m = k
                while m < n and text[m].isdigit():
                    m += 1
                tokens.append(("num", Fraction(num, int(text[k:m])), i))
                i = m
            else:
                tokens.append(("num", Fraction(num), i))
                i = j
            continue
        if text.startswith(varname, i):
            j = i + len(varname)
            k = j
            while k < n and text[k].isdigit():
                k += 1
            if k == j:
                raise PolyParseError(f"expected variable index after '{varname}'", j)
            tokens.append(("var", int(text[j:k]), i))
            i = k
            continue
        raise PolyParseError(f"unexpected character {ch!r}", i)
    return tokens


def _parse_term(tokens, pos, nvars, varname, text):
    coeff = Fraction(1)
    exps = [0] * nvars
    saw_factor = False
    star_at = None
    while pos < len(tokens):
        kind, value, at = tokens[pos]
        if kind == "num":
            coeff *= value
            pos += 1
            saw_factor = True
            star_at = None
        elif kind == "var":
            if not 1 <= value <= nvars:
                raise PolyParseError(
                    f"variable {varname}{value} out of range 1..{nvars}", at)
            power = 1
            pos += 1
            if pos < len(tokens) and tokens[pos][0] == "^":
                caret_at = tokens[pos][2]
                pos += 1
                if pos >= len(tokens) or tokens[pos][0] != "num" or \
                        tokens[pos][1].denominator != 1:
                    raise PolyParseError("expected integer exponent after '^'",
                                         caret_at + 1)
                power = int(tokens[pos][1])
                pos += 1
            exps[value - 1] += power
            saw_factor = True
            star_at = None
        elif kind == "*":
            if not saw_factor or star_at is not None:
                raise PolyParseError("unexpected '*'", at)
            star_at = at
            pos += 1
        elif kind == "^":
            raise PolyParseError("unexpected '^'", at)
        else:  # sign token ends the term
            break
    if star_at is not None:
        raise PolyParseError("expected a factor after '*'", star_at + 1)
    if not saw_factor:
        at = tokens[pos][2] if pos < len(tokens) else len(text)
        raise PolyParseError("expected a term", at)
    return Poly.monomial(nvars, exps, coeff), pos


# ---------------------------------------------------------------------------
# exact rational matrices
# ---------------------------------------------------------------------------

class RatMatrix:
    """Dense matrix with Fraction entries and exact linear algebra."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, data: Sequence[Sequence]):
        rows = [[_as_fraction(v) for v in row] for row in data]
        if rows:
            width = len(rows[0])
            for row in rows:
                if len(row) != width:
                    raise ValueError("ragged matrix")
        else:
            width = 0
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", width)
        object.__setattr__(self, "data", rows)

    def __setattr__(self, name, value):
        raise AttributeError("RatMatrix is immutable (copy data to mutate)")

    @classmethod
    def _make(cls, data) -> "RatMatrix":
        self = object.__new__(cls)
        object.__setattr__(self, "rows", len(data))
        object.__setattr__(self, "cols", len(data[0]) if data else 0)
        object.__setattr__(self, "data", data)
        return self

    @staticmethod
    def identity(n: int) -> "RatMatrix":
        return RatMatrix([[Fraction(i == j) for j in range(n)] for i in range(n)])

    @staticmethod
    def zeros(r: int, c: int) -> "RatMatrix":
        return RatMatrix([[Fraction(0)] * c for _ in range(r)])

    def __eq__(self, other):
        return isinstance(other, RatMatrix) and self.data == other.data

    __hash__ = None

    def __getitem__(self, key):
        i, j = key
        return self.data[i][j]

    def copy_data(self):
        return [row[:] for row in self.data]

    def transpose(self) -> "RatMatrix":
        return RatMatrix._make([[self.data[i][j] for i in range(self.rows)]
                                for j in range(self.cols)])

    def matmul(self, other: "RatMatrix") -> "RatMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        out = [[sum((self.data[i][k] * other.data[k][j] for k in range(self.cols)),
                    Fraction(0)) for j in range(other.cols)]
               for i in range(self.rows)]
        return RatMatrix._make(out)

    def __matmul__(self, other):
        return self.matmul(other)

    def matvec(self, vec: Sequence) -> List[Fraction]:
        v = [_as_fraction(x) for x in vec]
        if len(v) != self.cols:
            raise ValueError("dimension mismatch")
        return [sum((row[k] * v[k] for k in range(self.cols)), Fraction(0))
                for row in self.data]

    def is_symmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        return all(self.data[i][j] == self.data[j][i]
                   for i in range(self.rows) for j in range(i + 1, self.cols))

    def rref(self):
        """Reduced row echelon form.

        Returns (R, T, pivots) with T @ self == R exactly; T records the row
        operations and furnishes Farkas certificates for inconsistent systems.
        """
        m = self.copy_data()
        t = RatMatrix.identity(self.rows).copy_data()
        pivots = []
        r = 0
        for c in range(self.cols):
            pivot = None
            for i in range(r, self.rows):
                if m[i][c] != 0:
                    pivot = i
                    break
            if pivot is None:
                continue
            m[r], m[pivot] = m[pivot], m[r]
            t[r], t[pivot] = t[pivot], t[r]
            inv = Fraction(1) / m[r][c]
            m[r] = [v * inv for v in m[r]]
            t[r] = [v * inv for v in t[r]]
            for i in range(self.rows):
                if i != r and m[i][c] != 0:
                    f = m[i][c]
                    m[i] = [a - f * b for a, b in zip(m[i], m[r])]
                    t[i] = [a - f * b for a, b in zip(t[i], t[r])]
            pivots.append(c)
            r += 1
            if r == self.rows:
                break
        return RatMatrix._make(m), RatMatrix._make(t), pivots

    def rank(self) -> int:
        return len(self.rref()[2])

    def nullspace(self) -> List[List[Fraction]]:
        """Basis of the right kernel, free variables set to canonical units."""
        R, _, pivots = self.rref()
        pivot_set = set(pivots)
        free = [c for c in range(self.cols) if c not in pivot_set]
        basis = []
        for f in free:
            vec = [Fraction(0)] * self.cols
            vec[f] = Fraction(1)
            for r, c in enumerate(pivots):
                vec[c] = -R.data[r][f]
            basis.append(vec)
        return basis

    def det(self) -> Fraction:
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        m = self.copy_data()
        n = self.rows
        det = Fraction(1)
        for c in range(n):
            pivot = None
            for i in range(c, n):
                if m[i][c] != 0:
                    pivot = i
                    break
            if pivot is None:
                return Fraction(0)
            if pivot != c:
                m[c], m[pivot] = m[pivot], m[c]
                det = -det
            det *= m[c][c]
            inv = Fraction(1) / m[c][c]
            for i in range(c + 1, n):
                if m[i][c] != 0:
                    f = m[i][c] * inv
                    m[i] = [a - f * b for a, b in zip(m[i], m[c])]
        return det

    def inverse(self) -> "RatMatrix":
        if self.rows != self.cols:
            raise ValueError("inverse of a non-square matrix")
        R, T, pivots = self.rref()
        if len(pivots) != self.cols:
            raise ValueError("matrix is singular")
        return T

    def to_str_rows(self) -> List[List[str]]:
        return [[str(v) for v in row] for row in self.data]

    def __repr__(self):
        return f"RatMatrix({self.to_str_rows()})"


@dataclass
class LinearSolveResult:
    """Outcome of an exact linear solve M x = b."""

    solution: Optional[List[Fraction]]
    kernel: List[List[Fraction]]
    witness: Optional[List[Fraction]]  # y with y.M = 0, y.b != 0 when inconsistent

    @property
    def consistent(self) -> bool:
        return self.solution is not None


def solve_linear(M: RatMatrix, b: Sequence) -> LinearSolveResult:
    """Solve M x = b exactly.

    Returns a particular solution (free variables zero) plus a kernel basis,
    or an inconsistency witness row y (y.M = 0 and y.b != 0).
    """
    rhs = [_as_fraction(v) for v in b]
    if len(rhs) != M.rows:
        raise ValueError("right-hand side has wrong length")
    R, T, pivots = M.rref()
    c = T.matvec(rhs)
    for i in range(len(pivots), M.rows):
        if c[i] != 0:
            return LinearSolveResult(None, [], list(T.data[i]))
    x = [Fraction(0)] * M.cols
    for r, col in enumerate(pivots):
        x[col] = c[r]
    return LinearSolveResult(x, M.nullspace(), None)


# ---------------------------------------------------------------------------
# congruence diagonalization (Sylvester inertia)
# ---------------------------------------------------------------------------

@dataclass
class InertiaResult:
    n_plus: int
    n_zero: int
    n_minus: int
    congruence: RatMatrix          # C with C^T S C diagonal
    diagonal: List[Fraction]

    def counts(self) -> Tuple[int, int, int]:
        return (self.n_plus, self.n_zero, self.n_minus)


def inertia(S: RatMatrix) -> InertiaResult:
    """Symmetric Gaussian elimination with the rank-2 fallback.

    Produces C with C^T S C diagonal; diagonal entries stay rational (no
    square roots), so they are +-positive rationals rather than +-1.
    """
    if not S.is_symmetric():
        raise PreconditionError("inertia requires a symmetric matrix")
    n = S.rows
    a = S.copy_data()
    cmat = RatMatrix.identity(n).copy_data()

    def col_op(dst, src, factor):
        # column dst += factor * column src, and symmetric row op on a
        for i in range(n):
            a[i][dst] += factor * a[i][src]
        for j in range(n):
            a[dst][j] += factor * a[src][j]
        for i in range(n):
            cmat[i][dst] += factor * cmat[i][src]

    def col_swap(i, j):
        for r in range(n):
            a[r][i], a[r][j] = a[r][j], a[r][i]
        a[i], a[j] = a[j], a[i]
        for r in range(n):
            cmat[r][i], cmat[r][j] = cmat[r][j], cmat[r][i]

    k = 0
    while k < n:
        pivot = None
        for i in range(k, n):
            if a[i][i] != 0:
                pivot = i
                break
        if pivot is None:
            pair = None
            for i in range(k, n):
                for j in range(i + 1, n):
                    if a[i][j] != 0:
                        pair = (i, j)
                        break
                if pair:
                    break
            if pair is None:
                break  # remaining block is zero
            i, j = pair
            if i != k:
                col_swap(i, k)
            if j != k + 1:
                col_swap(j, k + 1)
            # x_k = u + v, x_{k+1} = u - v turns the off-diagonal pair into
            # a +- pair on the diagonal
            col_op(k, k + 1, Fraction(1))
            col_op(k + 1, k, Fraction(-1, 2))
            if a[k][k] == 0:
                raise SolveInconsistencyError("rank-2 inertia fallback failed")
            pivot = k
        if pivot != k:
            col_swap(pivot, k)
        d = a[k][k]
        for j in range(k + 1, n):
            if a[k][j] != 0:
                col_op(j, k, -a[k][j] / d)
        k += 1

    diag = [a[i][i] for i in range(n)]
    n_plus = sum(1 for v in diag if v > 0)
    n_minus = sum(1 for v in diag if v < 0)
    n_zero = n - n_plus - n_minus
    C = RatMatrix(cmat)
    check = C.transpose().matmul(S).matmul(C)
    for i in range(n):
        for j in range(n):
            if i != j and check.data[i][j] != 0:
                raise SolveInconsistencyError("congruence failed to diagonalize")
    return InertiaResult(n_plus, n_zero, n_minus, C, diag)


# ---------------------------------------------------------------------------
# characteristic polynomial and eigenvalues
# ---------------------------------------------------------------------------

def char_poly(M: RatMatrix) -> List[Fraction]:
    """Monic characteristic polynomial det(tI - M), coefficients ascending."""
    if M.rows != M.cols:
        raise PreconditionError("characteristic polynomial of a non-square matrix")
    n = M.rows
    # Faddeev-LeVerrier over Q
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    A = RatMatrix.identity(n)
    for k in range(1, n + 1):
        A = M.matmul(A)
        trace = sum((A.data[i][i] for i in range(n)), Fraction(0))
        c = -trace / k
        coeffs[n - k] = c
        A = RatMatrix([[A.data[i][j] + (c if i == j else 0) for j in range(n)]
                       for i in range(n)])
    return coeffs


def rational_roots(coeffs: Sequence[Fraction]) -> Tuple[List[Fraction], List[Fraction]]:
    """All rational roots (with multiplicity) plus the remaining factor.

    Uses the rational-root theorem on the integer-cleared polynomial and
    deflates each found root by synthetic division.
    """
    work = [Fraction(v) for v in coeffs]
    while work and work[-1] == 0:
        work.pop()
    if not work:
        raise ValueError("zero polynomial")
    roots = []
    # strip powers of t
    zero_mult = 0
    while work[0] == 0:
        zero_mult += 1
        work.pop(0)
    roots.extend([Fraction(0)] * zero_mult)

    def divisors(k: int):
        k = abs(k)
        out = set()
        for d in range(1, int(math.isqrt(k)) + 1):
            if k % d == 0:
                out.add(d)
                out.add(k // d)
        return sorted(out)

    changed = True
    while len(work) > 1 and changed:
        changed = False
        denom = math.lcm(*(c.denominator for c in work))
        ints = [int(c * denom) for c in work]
        lead, const = ints[-1], ints[0]
        if const == 0:
            roots.append(Fraction(0))
            work = work[1:]
            changed = True
            continue
        candidates = sorted(
            {Fraction(s * p, q) for p in divisors(const) for q in divisors(lead)
             for s in (1, -1)},
            key=lambda f: (abs(f), f < 0))
        for cand in candidates:
            # synthetic division test
            acc = Fraction(0)
            for c in reversed(work):
                acc = acc * cand + c
            if acc == 0:
                roots.append(cand)
                new = [Fraction(0)] * (len(work) - 1)
                carry = Fraction(0)
                for i in range(len(work) - 1, 0, -1):
                    carry = work[i] + carry * cand
                    new[i - 1] = carry
                work = new
                changed = True
                break
    return roots, work


@dataclass
class EigenData:
    char_coeffs: List[Fraction]          # ascending, monic
    rational_eigenvalues: List[Fraction]  # with multiplicity, ascending
    numeric_eigenvalues: List[complex]    # all eigenvalues, to tol

    @property
    def all_rational(self) -> bool:
        return len(self.rational_eigenvalues) == len(self.char_coeffs) - 1

    def char_poly_str(self) -> str:
        p = Poly(1, {(k,): c for k, c in enumerate(self.char_coeffs)})
        return p.to_str("t").replace("t1", "t")


def eigen_data(M: RatMatrix, tol: float = 1e-9) -> EigenData:
    """Exact characteristic polynomial, exact rational roots, numeric rest."""
    if M.rows != M.cols:
        raise PreconditionError("eigen_data requires a square matrix")
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    coeffs = char_poly(M)
    rats, residual = rational_roots(coeffs)
    rats.sort()
    numeric = [complex(Fraction(r)) for r in rats]
    if len(residual) > 1:
        import mpmath

        digits = max(30, int(-math.log10(tol)) + 15)
        with mpmath.workdps(digits):
            rest = mpmath.polyroots(
                [mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator)
                 for c in reversed(residual)], maxsteps=200, extraprec=80)
            extra = [complex(float(mpmath.re(r)), float(mpmath.im(r)))
                     for r in rest]
        extra.sort(key=lambda z: (z.real, z.imag))
        numeric.extend(extra)
    return EigenData(coeffs, rats, numeric)
