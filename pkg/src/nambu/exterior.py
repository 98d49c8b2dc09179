"""Antisymmetric multivector fields and differential forms over Poly coefficients.

Components are keyed by strictly increasing index tuples (0-based). The one
interior-product convention used everywhere: for an increasing tuple
(i1 < ... < im),  i_{e_{i1} ^ ... ^ e_{im}} = i_{e_{im}} o ... o i_{e_{i1}},
i.e. the lowest index is contracted first into the leading slot. All signs in
the library derive from this single choice.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .polyalg import (
    Fraction,
    InputError,
    NambuError,
    Poly,
    PreconditionError,
    RatMatrix,
    parse_poly,
    solve_linear,
)

IndexTuple = Tuple[int, ...]


_MERGE_CACHE: dict = {}
_MERGE_MISS = object()


def merge_sign(I: IndexTuple, J: IndexTuple) -> Optional[Tuple[IndexTuple, int]]:
    """Sorted concatenation of two increasing disjoint tuples with parity.

    Returns None when the tuples share an index. Memoized: the index tuples
    in play are tiny and recur constantly in wedge loops.
    """
    cached = _MERGE_CACHE.get((I, J), _MERGE_MISS)
    if cached is not _MERGE_MISS:
        return cached
    result = _merge_sign_raw(I, J)
    _MERGE_CACHE[(I, J)] = result
    return result


def _merge_sign_raw(I, J):
    if not I:
        return J, 1
    if not J:
        return I, 1
    inversions = 0
    merged = []
    a, b = 0, 0
    while a < len(I) and b < len(J):
        if I[a] == J[b]:
            return None
        if I[a] < J[b]:
            merged.append(I[a])
            a += 1
        else:
            merged.append(J[b])
            inversions += len(I) - a
            b += 1
    merged.extend(I[a:])
    merged.extend(J[b:])
    return tuple(merged), (-1 if inversions % 2 else 1)


def sort_sign(seq: Sequence[int]) -> Optional[Tuple[IndexTuple, int]]:
    """Sort an index list, returning parity; None on duplicates."""
    lst = list(seq)
    sign = 1
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
        if j > 0 and lst[j - 1] == lst[j]:
            return None
    return tuple(lst), sign


class _Alternating:
    """Shared machinery of Multivector and DiffForm."""

    __slots__ = ("nvars", "grade", "comps")
    kind = "?"

    def __init__(self, nvars: int, grade: int, comps=None):
        if not 0 <= grade <= nvars:
            raise ValueError(f"grade {grade} out of range for nvars={nvars}")
        clean: Dict[IndexTuple, Poly] = {}
        if comps:
            for key, poly in comps.items():
                key = tuple(key)
                if len(key) != grade:
                    raise ValueError(f"index tuple {key} has wrong length for grade {grade}")
                if any(not 0 <= i < nvars for i in key):
                    raise ValueError(f"index out of range in {key}")
                if any(key[t] >= key[t + 1] for t in range(len(key) - 1)):
                    raise ValueError(f"index tuple {key} not strictly increasing")
                if not isinstance(poly, Poly):
                    poly = Poly.const(nvars, poly)
                if poly.nvars != nvars:
                    raise ValueError("component polynomial has wrong nvars")
                if not poly.is_zero():
                    clean[key] = poly
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "grade", grade)
        object.__setattr__(self, "comps", clean)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def _make(cls, nvars: int, grade: int, comps: dict):
        """Internal constructor for already-normalized component dicts."""
        self = object.__new__(cls)
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "grade", grade)
        object.__setattr__(self, "comps", comps)
        return self

    # -- structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.comps

    def component(self, key: Sequence[int]) -> Poly:
        return self.comps.get(tuple(key), Poly.zero(self.nvars))

    def sorted_comps(self):
        return sorted(self.comps.items())

    def _same_shape(self, other):
        if type(self) is not type(other):
            raise ValueError(f"kind mismatch: {self.kind} vs {getattr(other, 'kind', '?')}")
        if self.nvars != other.nvars:
            raise ValueError("nvars mismatch")

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return (self.nvars, self.grade, self.comps) == \
            (other.nvars, other.grade, other.comps)

    __hash__ = None

    def __add__(self, other):
        self._same_shape(other)
        if self.grade != other.grade:
            raise ValueError("grade mismatch in addition")
        out = dict(self.comps)
        for k, p in other.comps.items():
            s = out.get(k)
            s = p if s is None else s + p
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
        return type(self)._make(self.nvars, self.grade, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return type(self)._make(self.nvars, self.grade,
                                {k: -p for k, p in self.comps.items()})

    def scale(self, scalar):
        out = {}
        for k, p in self.comps.items():
            v = p.scale(scalar)
            if not v.is_zero():
                out[k] = v
        return type(self)._make(self.nvars, self.grade, out)

    def poly_scale(self, poly: Poly, trunc: Optional[int] = None):
        out = {}
        for k, p in self.comps.items():
            v = p.mul(poly, trunc)
            if not v.is_zero():
                out[k] = v
        return type(self)._make(self.nvars, self.grade, out)

    def map_coeffs(self, fn):
        out = {}
        for k, p in self.comps.items():
            v = fn(p)
            if not v.is_zero():
                out[k] = v
        return type(self)._make(self.nvars, self.grade, out)

    def homogeneous_component(self, d: int):
        return self.map_coeffs(lambda p: p.homogeneous_component(d))

    def truncate(self, max_degree: int):
        return self.map_coeffs(lambda p: p.truncate(max_degree))

    def max_coeff_degree(self):
        degs = [p.degree for p in self.comps.values()]
        return max(degs) if degs else float("-inf")

    def min_coeff_degree(self):
        degs = [p.min_degree() for p in self.comps.values()]
        return min(degs) if degs else float("inf")

    def as_poly(self) -> Poly:
        """Grade-0 objects are bare scalars."""
        if self.grade != 0:
            raise ValueError("not a grade-0 object")
        return self.comps.get((), Poly.zero(self.nvars))

    def _basis_symbol(self, i: int) -> str:
        raise NotImplementedError

    def __str__(self):
        if not self.comps:
            return "0"
        pieces = []
        for key, poly in self.sorted_comps():
            basis = "^".join(self._basis_symbol(i) for i in key)
            text = poly.to_str()
            if basis:
                text = f"({text}) {basis}"
            pieces.append(text)
        return " + ".join(pieces)

    def __repr__(self):
        return f"{type(self).__name__}({self.nvars}, {self.grade}, {self})"

    def to_json_obj(self) -> dict:
        comps = {}
        for key, poly in self.sorted_comps():
            comps[",".join(str(i + 1) for i in key)] = poly.to_str()
        return {"kind": self.kind, "nvars": self.nvars, "grade": self.grade,
                "components": comps}


class Multivector(_Alternating):
    kind = "vector"

    def _basis_symbol(self, i: int) -> str:
        return f"d/dx{i + 1}"


class DiffForm(_Alternating):
    kind = "form"

    def _basis_symbol(self, i: int) -> str:
        return f"dx{i + 1}"


def graded_from_json(data: dict, kind: Optional[str] = None):
    """Validate and build a Multivector/DiffForm from the JSON schema."""
    if not isinstance(data, dict):
        raise InputError("expected a JSON object")
    for field in ("nvars", "grade", "components"):
        if field not in data:
            raise InputError(f"missing field {field!r}")
    kind = data.get("kind", kind or "vector")
    if kind not in ("vector", "form"):
        raise InputError(f"unknown kind {kind!r}")
    cls = Multivector if kind == "vector" else DiffForm
    nvars, grade = data["nvars"], data["grade"]
    if not isinstance(nvars, int) or not isinstance(grade, int):
        raise InputError("nvars and grade must be integers")
    if not 0 <= grade <= nvars:
        raise InputError(f"grade {grade} out of range for nvars={nvars}")
    comps = {}
    raw = data["components"]
    if not isinstance(raw, dict):
        raise InputError("components must be an object")
    for key, text in raw.items():
        parts = [s.strip() for s in key.split(",")] if key.strip() else []
        try:
            indices = tuple(int(s) for s in parts)
        except ValueError:
            raise InputError(f"bad component key {key!r}")
        if len(indices) != grade:
            raise InputError(f"component key {key!r} has wrong length for grade {grade}")
        if any(not 1 <= i <= nvars for i in indices):
            raise InputError(f"component key {key!r} has an index out of range")
        tup = tuple(i - 1 for i in indices)
        if any(tup[t] >= tup[t + 1] for t in range(len(tup) - 1)):
            raise InputError(f"indices not strictly increasing in key {key!r}")
        if not isinstance(text, str):
            raise InputError(f"component {key!r} must be a polynomial string")
        comps[tup] = parse_poly(text, nvars)
    return cls(nvars, grade, comps)


# -- convenience constructors -------------------------------------------------

def coordinate_field(nvars: int, i: int) -> Multivector:
    return Multivector(nvars, 1, {(i,): Poly.one(nvars)})


def coordinate_form(nvars: int, i: int) -> DiffForm:
    return DiffForm(nvars, 1, {(i,): Poly.one(nvars)})


def scalar_field(poly: Poly) -> Multivector:
    return Multivector(poly.nvars, 0, {(): poly})


def scalar_form(poly: Poly) -> DiffForm:
    return DiffForm(poly.nvars, 0, {(): poly})


def basis_multivector(nvars: int, key: Sequence[int]) -> Multivector:
    return Multivector(nvars, len(key), {tuple(key): Poly.one(nvars)})


def standard_volume(nvars: int, multiplier: Optional[Poly] = None) -> DiffForm:
    f = multiplier if multiplier is not None else Poly.one(nvars)
    return DiffForm(nvars, nvars, {tuple(range(nvars)): f})


# -- exterior algebra ----------------------------------------------------------

def wedge(a, b, trunc: Optional[int] = None):
    """Wedge product of two objects of the same kind.

    When the grades sum above nvars the product is identically zero and is
    returned as the zero object of top grade.
    """
    a._same_shape(b)
    grade = a.grade + b.grade
    if grade > a.nvars:
        return type(a)(a.nvars, a.nvars, {})
    out: Dict[IndexTuple, Poly] = {}
    for I, p in a.comps.items():
        for J, q in b.comps.items():
            ms = merge_sign(I, J)
            if ms is None:
                continue
            key, sign = ms
            prod = p.mul(q, trunc)
            if sign < 0:
                prod = -prod
            s = out.get(key)
            s = prod if s is None else s + prod
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
    return type(a)._make(a.nvars, grade, out)


def wedge_all(objs, trunc: Optional[int] = None):
    result = objs[0]
    for o in objs[1:]:
        result = wedge(result, o, trunc)
    return result


def _contract_single(comps: Dict[IndexTuple, Poly], j: int) -> Dict[IndexTuple, Poly]:
    """Leading-slot single contraction along direction j on raw components."""
    out: Dict[IndexTuple, Poly] = {}
    for K, c in comps.items():
        if j not in K:
            continue
        t = K.index(j)
        key = K[:t] + K[t + 1:]
        val = c if t % 2 == 0 else -c
        s = out.get(key)
        s = val if s is None else s + val
        if s.is_zero():
            out.pop(key, None)
        else:
            out[key] = s
    return out


def interior(A: Multivector, omega: DiffForm, trunc: Optional[int] = None) -> DiffForm:
    """Interior product i_A omega, contracting the lowest index of A first."""
    if A.nvars != omega.nvars:
        raise ValueError("nvars mismatch")
    if A.grade > omega.grade:
        raise ValueError(
            f"cannot contract a grade-{A.grade} multivector into a grade-{omega.grade} form")
    n = A.nvars
    total: Dict[IndexTuple, Poly] = {}
    for I, a in A.comps.items():
        comps = omega.comps
        for j in I:
            comps = _contract_single(comps, j)
            if not comps:
                break
        for K, c in comps.items():
            term = a.mul(c, trunc)
            s = total.get(K)
            s = term if s is None else s + term
            if s.is_zero():
                total.pop(K, None)
            else:
                total[K] = s
    return DiffForm._make(n, omega.grade - A.grade, total)


def contract_oneform(beta: DiffForm, T: Multivector, trunc: Optional[int] = None) -> Multivector:
    """Contraction i_beta T of a 1-form into a multivector (leading slot)."""
    if beta.grade != 1:
        raise ValueError("contract_oneform needs a 1-form")
    if beta.nvars != T.nvars:
        raise ValueError("nvars mismatch")
    if T.grade < 1:
        raise ValueError("cannot contract into a grade-0 multivector")
    out: Dict[IndexTuple, Poly] = {}
    for (j,), b in beta.comps.items():
        contracted = _contract_single(T.comps, j)
        for K, c in contracted.items():
            term = b.mul(c, trunc)
            s = out.get(K)
            s = term if s is None else s + term
            if s.is_zero():
                out.pop(K, None)
            else:
                out[K] = s
    return Multivector._make(T.nvars, T.grade - 1, out)


def dform(omega: DiffForm, var_indices: Optional[Sequence[int]] = None) -> DiffForm:
    """Exterior derivative; with var_indices, the partial derivative d' in
    those variables only (the others ride along as parameters)."""
    n = omega.nvars
    if omega.grade >= n:
        raise PreconditionError("exterior derivative of a top-grade form")
    idx = range(n) if var_indices is None else var_indices
    out: Dict[IndexTuple, Poly] = {}
    for K, c in omega.comps.items():
        for j in idx:
            dc = c.partial(j)
            if dc.is_zero():
                continue
            ms = merge_sign((j,), K)
            if ms is None:
                continue
            key, sign = ms
            val = dc if sign > 0 else -dc
            s = out.get(key)
            s = val if s is None else s + val
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
    return DiffForm._make(n, omega.grade + 1, out)


def lie_bracket(X: Multivector, Y: Multivector) -> Multivector:
    """Commutator of two vector fields."""
    if X.grade != 1 or Y.grade != 1:
        raise ValueError("lie_bracket needs two grade-1 fields")
    if X.nvars != Y.nvars:
        raise ValueError("nvars mismatch")
    n = X.nvars
    out: Dict[IndexTuple, Poly] = {}
    for k in range(n):
        acc = Poly.zero(n)
        yk = Y.component((k,))
        xk = X.component((k,))
        for (i,), xi in X.comps.items():
            acc = acc + xi.mul(yk.partial(i))
        for (i,), yi in Y.comps.items():
            acc = acc - yi.mul(xk.partial(i))
        if not acc.is_zero():
            out[(k,)] = acc
    return Multivector(n, 1, out)


def apply_vector(X: Multivector, f: Poly) -> Poly:
    """Derivation X(f)."""
    if X.grade != 1:
        raise ValueError("apply_vector needs a grade-1 field")
    acc = Poly.zero(X.nvars)
    for (i,), xi in X.comps.items():
        acc = acc + xi.mul(f.partial(i))
    return acc


def lie_derivative(X: Multivector, T: Multivector) -> Multivector:
    """Lie derivative L_X T of a multivector field along a vector field."""
    if X.grade != 1:
        raise ValueError("lie_derivative needs a grade-1 direction field")
    if X.nvars != T.nvars:
        raise ValueError("nvars mismatch")
    n = X.nvars
    out: Dict[IndexTuple, Poly] = {}

    def add(key, poly):
        if poly.is_zero():
            return
        s = out.get(key)
        s = poly if s is None else s + poly
        if s.is_zero():
            out.pop(key, None)
        else:
            out[key] = s

    for I, c in T.comps.items():
        add(I, apply_vector(X, c))
        # L_X d/dx_j = -sum_k (dX^k/dx_j) d/dx_k
        for t, j in enumerate(I):
            for (k,), xk in X.comps.items():
                coeff = xk.partial(j)
                if coeff.is_zero():
                    continue
                replaced = list(I)
                replaced[t] = k
                ss = sort_sign(replaced)
                if ss is None:
                    continue
                key, sign = ss
                term = c.mul(coeff)
                add(key, -term if sign > 0 else term)
    return Multivector(n, T.grade, out)


# -- volume duality -------------------------------------------------------------

def _check_volume(Omega: DiffForm):
    n = Omega.nvars
    if Omega.grade != n:
        raise PreconditionError("volume form must have top grade")
    key = tuple(range(n))
    if set(Omega.comps) - {key}:
        raise PreconditionError("volume form must have a single top component")
    f = Omega.comps.get(key)
    if f is None or f.constant_term() == 0:
        raise PreconditionError("volume coefficient must not vanish at the origin")
    return f


def duality_sign(nvars: int, I: IndexTuple) -> int:
    """Sign s with i_{e_I}(dx_1^...^dx_n) = s * dx_complement(I)."""
    comps: Dict[IndexTuple, Poly] = {tuple(range(nvars)): Poly.one(nvars)}
    for j in I:
        comps = _contract_single(comps, j)
    (key, poly), = comps.items()
    c = poly.constant_term()
    return 1 if c > 0 else -1


def tensor_to_form(P: Multivector, Omega: Optional[DiffForm] = None) -> DiffForm:
    """omega = i_P Omega for a volume form Omega (default dx1^...^dxn)."""
    if Omega is None:
        Omega = standard_volume(P.nvars)
    _check_volume(Omega)
    return interior(P, Omega)


def form_to_tensor(omega: DiffForm, Omega: Optional[DiffForm] = None) -> Multivector:
    """Inverse of tensor_to_form for the same volume form."""
    n = omega.nvars
    if Omega is None:
        Omega = standard_volume(n)
    f = _check_volume(Omega)
    full = set(range(n))
    out: Dict[IndexTuple, Poly] = {}
    constant_f = f.degree <= 0
    inv_c = Fraction(1) / f.constant_term() if constant_f else None
    for K, c in omega.comps.items():
        I = tuple(sorted(full - set(K)))
        sign = duality_sign(n, I)
        coeff = c.scale(inv_c) if constant_f else c.exact_div(f)
        out[I] = coeff if sign > 0 else -coeff
    return Multivector(n, n - omega.grade, out)


# -- formal coordinate changes ----------------------------------------------------

class FormalMap:
    """Polynomial coordinate change fixing the origin, truncated at trunc.

    Components express the target coordinates in terms of the source ones;
    trunc None marks an exact polynomial map (mandatory for nonlinear inverses
    to be taken at some finite order).
    """

    __slots__ = ("nvars", "comps", "trunc", "_inv_cache")

    def __init__(self, comps: Sequence[Poly], trunc: Optional[int] = None):
        comps = tuple(comps)
        if not comps:
            raise ValueError("empty map")
        nvars = comps[0].nvars
        if len(comps) != nvars:
            raise ValueError("a coordinate change needs one component per variable")
        for c in comps:
            if c.nvars != nvars:
                raise ValueError("component nvars mismatch")
            if c.constant_term() != 0:
                raise PreconditionError("coordinate changes must fix the origin")
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "comps", comps)
        object.__setattr__(self, "trunc", trunc)
        object.__setattr__(self, "_inv_cache", {})
        if self.linear_matrix().det() == 0:
            raise PreconditionError("linear part of the coordinate change is singular")

    def __setattr__(self, name, value):
        raise AttributeError("FormalMap is immutable")

    @staticmethod
    def identity(nvars: int) -> "FormalMap":
        return FormalMap([Poly.variable(nvars, i) for i in range(nvars)])

    @staticmethod
    def from_matrix(M: RatMatrix) -> "FormalMap":
        n = M.rows
        if M.cols != n:
            raise ValueError("matrix must be square")
        comps = []
        for i in range(n):
            terms = {}
            for j in range(n):
                if M[i, j] != 0:
                    exps = tuple(1 if t == j else 0 for t in range(n))
                    terms[exps] = M[i, j]
            comps.append(Poly(n, terms))
        return FormalMap(comps)

    def linear_matrix(self) -> RatMatrix:
        n = self.nvars
        rows = []
        for c in self.comps:
            rows.append(c.linear_coefficients())
        return RatMatrix(rows)

    def is_linear(self) -> bool:
        return all(c.degree <= 1 for c in self.comps)

    def is_identity(self) -> bool:
        return all(c == Poly.variable(self.nvars, i) for i, c in enumerate(self.comps))

    def jacobian(self) -> List[List[Poly]]:
        return [[c.partial(j) for j in range(self.nvars)] for c in self.comps]

    def det_jacobian(self, trunc: Optional[int] = None) -> Poly:
        # Laplace expansion with shared minors over column subsets
        jac = self.jacobian()
        n = self.nvars
        minors = {(): Poly.one(n)}
        for r in range(n):
            new: Dict[Tuple[int, ...], Poly] = {}
            for cols, val in minors.items():
                if val.is_zero():
                    continue
                used = set(cols)
                for j in range(n):
                    if j in used:
                        continue
                    entry = jac[r][j]
                    if entry.is_zero():
                        continue
                    key = tuple(sorted(cols + (j,)))
                    sign = 1 if (key.index(j) % 2 == r % 2) else -1
                    term = val.mul(entry, trunc)
                    if sign < 0:
                        term = -term
                    cur = new.get(key)
                    new[key] = term if cur is None else cur + term
            minors = new
        return minors.get(tuple(range(n)), Poly.zero(n))

    def apply_poly(self, p: Poly, trunc: Optional[int] = None) -> Poly:
        return p.substitute(self.comps, trunc)

    def compose(self, inner: "FormalMap", trunc: Optional[int] = None) -> "FormalMap":
        """self after inner: (self o inner)(x) = self(inner(x))."""
        if self.nvars != inner.nvars:
            raise ValueError("nvars mismatch")
        if trunc is None and not (self.is_linear() and inner.is_linear()):
            trunc = _combine_trunc(self.trunc, inner.trunc)
        comps = [c.substitute(inner.comps, trunc) for c in self.comps]
        return FormalMap(comps, trunc)

    def inverse(self, trunc: Optional[int] = None) -> "FormalMap":
        """Formal inverse through the given degree (exact for linear maps).

        Results are cached per truncation degree (maps are immutable).
        """
        cached = self._inv_cache.get(trunc)
        if cached is not None:
            return cached
        result = self._inverse_impl(trunc)
        self._inv_cache[trunc] = result
        return result

    def _inverse_impl(self, trunc: Optional[int] = None) -> "FormalMap":
        L = self.linear_matrix()
        Linv = L.inverse()
        if self.is_linear():
            return FormalMap.from_matrix(Linv)
        if trunc is None:
            trunc = self.trunc
        if trunc is None:
            raise PreconditionError("nonlinear inverse needs a truncation degree")
        n = self.nvars
        psi = FormalMap.from_matrix(Linv)
        ident = [Poly.variable(n, i) for i in range(n)]
        for _ in range(2, trunc + 1):
            err = [self.comps[i].substitute(psi.comps, trunc) - ident[i]
                   for i in range(n)]
            if all(e.is_zero() for e in err):
                break
            corr = []
            for i in range(n):
                acc = Poly.zero(n)
                for j in range(n):
                    if Linv[i, j] != 0:
                        acc = acc + err[j].scale(Linv[i, j])
                corr.append(psi.comps[i] - acc)
            psi = FormalMap(corr, trunc)
        return FormalMap(psi.comps, trunc)


def _perm_parity(perm) -> int:
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _combine_trunc(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def formal_inverse(phi: FormalMap, N: Optional[int] = None) -> FormalMap:
    return phi.inverse(N)


def formal_map_to_json(phi: FormalMap) -> dict:
    return {"nvars": phi.nvars,
            "components": [c.to_str() for c in phi.comps],
            "trunc": phi.trunc}


def formal_map_from_json(data: dict) -> FormalMap:
    if not isinstance(data, dict) or "nvars" not in data or "components" not in data:
        raise InputError("formal map JSON needs nvars and components")
    n = data["nvars"]
    comps = data["components"]
    if not isinstance(comps, list) or len(comps) != n:
        raise InputError("formal map needs one component per variable")
    return FormalMap([parse_poly(c, n) for c in comps], data.get("trunc"))


# -- transport of forms and tensors ------------------------------------------------

def pullback_form(omega: DiffForm, phi: FormalMap, N: Optional[int] = None) -> DiffForm:
    """Substitute x -> phi(x) in coefficients and dx_i -> d(phi_i).

    With N the coefficients are truncated at that degree; N=None computes the
    exact polynomial pullback (always finite, since polynomials compose).
    """
    if omega.nvars != phi.nvars:
        raise ValueError("nvars mismatch")
    n = omega.nvars
    dphi = []
    for c in phi.comps:
        dphi.append(DiffForm(n, 1, {(j,): c.partial(j) for j in range(n)
                                    if not c.partial(j).is_zero()}))
    result = DiffForm(n, omega.grade, {})
    for K, c in omega.comps.items():
        coeff = c.substitute(phi.comps, N)
        if coeff.is_zero():
            continue
        if K:
            block = wedge_all([dphi[i] for i in K], N)
            term = block.poly_scale(coeff, N)
        else:
            term = scalar_form(coeff)
        result = result + term
    return result


def pushforward_tensor(P: Multivector, phi: FormalMap, N: Optional[int] = None) -> Multivector:
    """Transport P contravariantly along phi (components in target coordinates).

    Realized through the volume duality: dualize, pull back along the inverse
    map, multiply by the transported Jacobian determinant, dualize back.
    """
    if P.nvars != phi.nvars:
        raise ValueError("nvars mismatch")
    if N is None and not phi.is_linear():
        raise PreconditionError("untruncated pushforward is only allowed for linear maps")
    inv = phi.inverse(N)
    omega = tensor_to_form(P)
    pulled = pullback_form(omega, inv, N)
    detj = phi.det_jacobian(N)
    jac_factor = detj.substitute(inv.comps, N)
    scaled = pulled.poly_scale(jac_factor, N)
    return form_to_tensor(scaled)


# -- block decomposition and subspace plumbing --------------------------------------

def prefix_blocks(obj, k: int):
    """Split by intersection with the first k indices.

    Since {0..k-1} are the smallest indices, every component tuple is
    T ++ rest with T a prefix, so no signs appear. Returns a dict mapping
    each T (tuple) to an object of grade grade-|T| holding the rest.
    """
    pieces: Dict[IndexTuple, Dict[IndexTuple, Poly]] = {}
    for K, c in obj.comps.items():
        T = tuple(i for i in K if i < k)
        rest = tuple(i for i in K if i >= k)
        pieces.setdefault(T, {})[rest] = c
    return {T: type(obj)(obj.nvars, obj.grade - len(T), comps)
            for T, comps in pieces.items()}


def restrict(obj, indices: Sequence[int]):
    """Re-index onto a variable subset; components and coefficients must live there."""
    indices = list(indices)
    pos = {v: i for i, v in enumerate(indices)}
    m = len(indices)
    keep = set(indices)
    comps = {}
    for K, c in obj.comps.items():
        if not set(K) <= keep:
            raise ValueError(f"component {K} leaves the subspace")
        comps[tuple(pos[i] for i in K)] = _project_poly(c, indices)
    return type(obj)(m, obj.grade, comps)


def _project_poly(p: Poly, indices: Sequence[int]) -> Poly:
    m = len(indices)
    terms = {}
    for exps, c in p.terms.items():
        for j, e in enumerate(exps):
            if e and j not in indices:
                raise ValueError("coefficient depends on a variable outside the subspace")
        terms[tuple(exps[i] for i in indices)] = c
    return Poly(m, terms)


def embed_poly(p: Poly, indices: Sequence[int], nvars: int) -> Poly:
    terms = {}
    for exps, c in p.terms.items():
        full = [0] * nvars
        for k, e in zip(indices, exps):
            full[k] = e
        terms[tuple(full)] = c
    return Poly(nvars, terms)


def embed(obj, indices: Sequence[int], nvars: int):
    comps = {}
    for K, c in obj.comps.items():
        key = tuple(sorted(indices[i] for i in K))
        comps[key] = embed_poly(c, indices, nvars)
    return type(obj)(nvars, obj.grade, comps)


def extend_map(phi: FormalMap, indices: Sequence[int], nvars: int) -> FormalMap:
    """Extend a map on a variable subset by the identity elsewhere."""
    comps = [Poly.variable(nvars, i) for i in range(nvars)]
    for slot, i in enumerate(indices):
        comps[i] = embed_poly(phi.comps[slot], indices, nvars)
    return FormalMap(comps, phi.trunc)
