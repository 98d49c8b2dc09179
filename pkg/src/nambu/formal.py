"""Finite-order formal normalization of Nambu structures.

Everything here is graded: each operation works degree by degree on exact
polynomial data, with one rational linear solve per homogeneous degree and
all free variables pinned to zero (deterministic output). Solves that turn
out inconsistent raise SolveInconsistencyError with the failing degree; no
result is ever patched numerically.

Degree bookkeeping: a coefficient-degree-d vector field moves degree-d
structure; Lie brackets of degree-D truncations are trusted one degree less,
so the Type-2 pipeline runs at an internal margin above the requested order
and states its contracts at the user's N.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .polyalg import (
    EigenData,
    Fraction,
    Poly,
    PreconditionError,
    RatMatrix,
    SolveInconsistencyError,
    eigen_data,
    solve_linear,
)
from .exterior import (
    DiffForm,
    FormalMap,
    Multivector,
    apply_vector,
    basis_multivector,
    coordinate_field,
    coordinate_form,
    dform,
    embed,
    embed_poly,
    extend_map,
    form_to_tensor,
    interior,
    lie_bracket,
    lie_derivative,
    merge_sign,
    prefix_blocks,
    pullback_form,
    pushforward_tensor,
    restrict,
    scalar_form,
    tensor_to_form,
    wedge,
    wedge_all,
)
from .linclass import normal_form_generator


# ---------------------------------------------------------------------------
# report types
# ---------------------------------------------------------------------------

@dataclass
class GradedSolveRecord:
    degree: int
    rows: int
    cols: int
    solved: bool
    note: str = ""


@dataclass
class GradedSolveReport:
    records: List[GradedSolveRecord] = field(default_factory=list)

    def add(self, degree, rows, cols, solved, note=""):
        self.records.append(GradedSolveRecord(degree, rows, cols, solved, note))

    def to_json_obj(self):
        return [{"degree": r.degree, "rows": r.rows, "cols": r.cols,
                 "solved": r.solved, "note": r.note} for r in self.records]


@dataclass
class ResonanceReport:
    eigenvalues: List[complex]
    max_order: int
    exact: bool                                   # all eigenvalues rational
    resonances: List[Tuple[int, Tuple[int, ...]]]  # (i, m), i 1-based
    small_divisors: Dict[int, float]               # order -> min |<m,lam>-lam_i|
    bryuno: Optional[Dict[int, bool]] = None       # order -> bound holds
    bryuno_params: Optional[Tuple[float, float]] = None

    @property
    def resonant(self) -> bool:
        return bool(self.resonances)

    def to_json_obj(self):
        out = {
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "max_order": self.max_order,
            "exact": self.exact,
            "resonances": [{"i": i, "m": list(m)} for i, m in self.resonances],
            "small_divisors": {str(k): v for k, v in sorted(self.small_divisors.items())},
        }
        if self.bryuno is not None:
            C, eps = self.bryuno_params
            out["bryuno"] = {"C": C, "eps": eps,
                             "orders": {str(k): v for k, v in sorted(self.bryuno.items())}}
        return out


# ---------------------------------------------------------------------------
# graded division by a grade-1 object (DeRham division at finite order)
# ---------------------------------------------------------------------------

def _homogeneous_split(obj, max_degree):
    parts = {}
    for d in range(max_degree + 1):
        h = obj.homogeneous_component(d)
        if not h.is_zero():
            parts[d] = h
    return parts


def _monomials_of_degree(nvars, d, active=None):
    """Exponent tuples of total degree d; if active given, at least one
    active slot must be positive (used for unknowns killed by d_y)."""
    out = []
    for combo in itertools.combinations_with_replacement(range(nvars), d):
        exps = [0] * nvars
        for i in combo:
            exps[i] += 1
        if active is not None and not any(exps[i] for i in active):
            continue
        out.append(tuple(exps))
    return out


def _param_pattern(exps, active_set):
    return tuple(0 if i in active_set else e for i, e in enumerate(exps))


def graded_divide(divisor, target, active: Sequence[int], N: int,
                  report: Optional[GradedSolveReport] = None, label: str = "",
                  require_nondegenerate: bool = True):
    """Solve target = divisor ^ result through coefficient degree N.

    divisor is grade 1 with components on the active block; non-active
    variables ride along inertly inside the coefficients (the per-degree
    systems block-split over their monomial patterns). With
    require_nondegenerate the linear part must have full rank on the active
    block, which guarantees solvability whenever divisor ^ target = 0;
    without it the per-degree solves simply decide solvability. Kernel
    freedom is resolved to zero in graded-lex order.
    """
    kind = type(divisor)
    if type(target) is not kind:
        raise ValueError("divisor/target kind mismatch")
    n = divisor.nvars
    active = list(active)
    active_set = set(active)
    for key in divisor.comps:
        if key[0] not in active_set:
            raise PreconditionError("divisor must live on the active block")
    for key in target.comps:
        if not set(key) <= active_set:
            raise PreconditionError("division target must live on the active block")
    lin = divisor.homogeneous_component(1)
    lin_rows = []
    for i in active:
        c = lin.component((i,))
        row = c.linear_coefficients()
        if any(row[t] != 0 for t in range(n) if t not in active_set):
            raise PreconditionError("divisor linear part mixes inert variables")
        lin_rows.append([row[t] for t in active])
    if require_nondegenerate and RatMatrix(lin_rows).det() == 0:
        raise PreconditionError("divisor linear part is degenerate on the active block")

    k = target.grade
    res_grade = k - 1
    div_parts = _homogeneous_split(divisor, N + 1)
    tgt_parts = _homogeneous_split(target, N + 1)
    res_tuples = list(itertools.combinations(active, res_grade))
    tgt_tuples = list(itertools.combinations(active, k))
    result = kind(n, res_grade, {})
    result_parts: Dict[int, object] = {}

    max_t = max(tgt_parts) if tgt_parts else 0
    for d in range(0, N):
        rhs = tgt_parts.get(d + 1, kind(n, k, {}))
        for m, piece in div_parts.items():
            if m >= 2 and (d + 1 - m) in result_parts:
                rhs = rhs - wedge(piece, result_parts[d + 1 - m])
        if rhs.is_zero():
            if d + 1 > max_t and all(e < d for e in result_parts):
                break
            continue
        sol_part = _solve_wedge_degree(div_parts.get(1), rhs, active, d,
                                       res_tuples, tgt_tuples, n, kind,
                                       report, label)
        result_parts[d] = sol_part
        result = result + sol_part
    check = wedge(divisor, result, N).truncate(N) - target.truncate(N)
    if not check.is_zero():
        bad = int(check.min_coeff_degree())
        raise SolveInconsistencyError(
            f"division failed{': ' + label if label else ''}",
            degree=bad, residual=check.homogeneous_component(bad))
    return result


def _solve_wedge_degree(lin_divisor, rhs, active, d, res_tuples, tgt_tuples,
                        n, kind, report, label):
    """One homogeneous degree of the wedge-multiplication solve, split over
    inert-variable monomial patterns."""
    if lin_divisor is None:
        raise SolveInconsistencyError(
            f"divisor has no linear part{': ' + label if label else ''}", degree=d)
    active_set = set(active)
    lin = {key[0]: poly for key, poly in lin_divisor.comps.items()}
    lin_coeffs = {j: {t: c for t, c in enumerate(poly.linear_coefficients()) if c}
                  for j, poly in lin.items()}

    # group unknown monomials by inert pattern
    unknown_mons = _monomials_of_degree(n, d)
    groups: Dict[tuple, List[tuple]] = {}
    for mon in unknown_mons:
        groups.setdefault(_param_pattern(mon, active_set), []).append(mon)

    # rhs rows grouped the same way
    rhs_entries: Dict[tuple, Dict[Tuple[tuple, tuple], Fraction]] = {}
    for key, poly in rhs.comps.items():
        for exps, c in poly.terms.items():
            pat = _param_pattern(exps, active_set)
            rhs_entries.setdefault(pat, {})[(exps, key)] = c

    total = kind(n, len(res_tuples[0]) if res_tuples else 0, {})
    out_comps: Dict[tuple, Poly] = {}
    for pat, mons in sorted(groups.items()):
        rows_map: Dict[Tuple[tuple, tuple], int] = {}
        cols: List[Tuple[tuple, tuple]] = []
        entries: List[Tuple[int, int, Fraction]] = []
        for mon in mons:
            for J in res_tuples:
                col = len(cols)
                cols.append((mon, J))
                for j, coeffs in lin_coeffs.items():
                    ms = merge_sign((j,), J)
                    if ms is None:
                        continue
                    key, sign = ms
                    for t, c in coeffs.items():
                        new = list(mon)
                        new[t] += 1
                        row_key = (tuple(new), key)
                        idx = rows_map.setdefault(row_key, len(rows_map))
                        entries.append((idx, col, sign * c))
        target_entries = rhs_entries.get(pat, {})
        for row_key in target_entries:
            rows_map.setdefault(row_key, len(rows_map))
        nrows, ncols = len(rows_map), len(cols)
        M = [[Fraction(0)] * ncols for _ in range(nrows)]
        for i, jcol, v in entries:
            M[i][jcol] += v
        b = [Fraction(0)] * nrows
        for row_key, v in target_entries.items():
            b[rows_map[row_key]] = v
        res = solve_linear(RatMatrix(M), b)
        if report is not None:
            report.add(d, nrows, ncols, res.consistent, label)
        if not res.consistent:
            raise SolveInconsistencyError(
                f"inconsistent wedge division at degree {d}"
                f"{': ' + label if label else ''}",
                degree=d, residual=rhs)
        for (mon, J), v in zip(cols, res.solution):
            if v:
                cur = out_comps.get(J)
                add = Poly.monomial(n, mon, v)
                out_comps[J] = add if cur is None else cur + add
    return kind(n, len(res_tuples[0]) if res_tuples else 0,
                {k: v for k, v in out_comps.items() if not v.is_zero()})


def derham_divide(alpha: DiffForm, beta: DiffForm, active: Sequence[int], N: int,
                  report: Optional[GradedSolveReport] = None) -> DiffForm:
    """theta with beta = alpha ^ theta through degree N (free components zero).

    The linear part of alpha must have full rank on the active block; a
    divisibility failure at some degree raises SolveInconsistencyError
    carrying the degree and residual.
    """
    return graded_divide(alpha, beta, active, N, report, label="derham")


# ---------------------------------------------------------------------------
# Euler homotopy on the active block (Poincare lemma antiderivative)
# ---------------------------------------------------------------------------

def d_active(omega: DiffForm, active: Sequence[int]) -> DiffForm:
    return dform(omega, active)


def homotopy_antiderivative(eta, active: Sequence[int]):
    """phi with d_y phi = eta for a d_y-closed form on the active block.

    Euler homotopy: on a piece with active coefficient degree a and form
    grade k, K = i_{E_y} / (a + k); every piece of a grade >= 1 form has
    a + k >= 1, so K is always defined here.
    """
    n = eta.nvars
    active_set = set(active)
    kind = type(eta)
    k = eta.grade
    out: Dict[tuple, Poly] = {}
    for K, poly in eta.comps.items():
        for t, j in enumerate(K):
            if j not in active_set:
                continue
            sub = K[:t] + K[t + 1:]
            sign = 1 if t % 2 == 0 else -1
            for exps, c in poly.terms.items():
                a = sum(exps[i] for i in active)
                weight = a + k
                new = list(exps)
                new[j] += 1
                add = Poly.monomial(n, new, Fraction(sign, 1) * c / weight)
                cur = out.get(sub)
                out[sub] = add if cur is None else cur + add
    return kind(n, k - 1, {kk: v for kk, v in out.items() if not v.is_zero()})


# ---------------------------------------------------------------------------
# Type 1: decomposition into a product of 1-forms
# ---------------------------------------------------------------------------

def _type1_linear_data(omega: DiffForm, require_full_rank: bool = True):
    """Validate a diagonal Type-1 linear part in form convention.

    Expects omega^(1) = dx_1^...^dx_{p-1} ^ sum_j d_j x_j dx_j over the
    trailing block. With require_full_rank every trailing slot must carry a
    nonzero d_j (the nondegenerate case). Returns (p, y, diag, alpha1).
    """
    n, p = omega.nvars, omega.grade
    lin = omega.homogeneous_component(1)
    blocks = prefix_blocks(lin, p - 1)
    prefix = tuple(range(p - 1))
    for T, part in blocks.items():
        if T != prefix and not part.is_zero():
            raise PreconditionError("linear part is not prefix-divisible")
    alpha1 = blocks.get(prefix)
    if alpha1 is None:
        raise PreconditionError("linear part vanishes")
    y = list(range(p - 1, n))
    diag = {}
    for (j,), c in alpha1.comps.items():
        coeffs = c.linear_coefficients()
        if any(coeffs[t] != 0 for t in range(n) if t != j):
            raise PreconditionError("quadratic part of the linear form is not diagonal")
        diag[j] = coeffs[j]
    if require_full_rank and (sorted(diag) != y or any(diag[j] == 0 for j in y)):
        raise PreconditionError(
            "linear part is a degenerate Type 1 form (full-rank diagonal needed)")
    if not diag:
        raise PreconditionError("quadratic part of the linear form vanishes")
    return p, y, diag, alpha1


def formal_decompose_type1(omega: DiffForm, N: int
                           ) -> Tuple[List[DiffForm], DiffForm, GradedSolveReport]:
    """Factor omega = gamma_1 ^ ... ^ gamma_{p-1} ^ alpha through degree N.

    gamma_j = dx_j + (-1)^{p-j} theta_j with theta_j from the DeRham division
    beta_j = alpha ^ theta_j; alpha is the full-prefix block of omega.
    """
    if N < 2:
        raise PreconditionError("N must be >= 2")
    n, p = omega.nvars, omega.grade
    p_, y, diag, alpha1 = _type1_linear_data(omega, require_full_rank=False)
    report = GradedSolveReport()
    omega = omega.truncate(N)
    blocks = prefix_blocks(omega, p - 1)
    prefix = tuple(range(p - 1))
    alpha = blocks.get(prefix, DiffForm(n, 1, {}))
    gammas = []
    for j in range(p - 1):
        key = tuple(t for t in prefix if t != j)
        beta_j = blocks.get(key, DiffForm(n, 2, {}))
        theta_j = graded_divide(alpha, beta_j, y, N, report, label="derham",
                                require_nondegenerate=False)
        sign = (-1) ** (p - 1 - j)  # (-1)^{p-j} with 1-based j
        gamma = coordinate_form(n, j) + (theta_j if sign > 0 else -theta_j)
        gammas.append(gamma)
    candidate = wedge_all(gammas + [alpha], N) if gammas else alpha
    diff = candidate.truncate(N) - omega
    if not diff.is_zero():
        bad = int(diff.min_coeff_degree())
        raise SolveInconsistencyError(
            "decomposition does not reproduce the form", degree=bad,
            residual=diff.homogeneous_component(bad))
    return gammas, alpha, report


# ---------------------------------------------------------------------------
# Type 1: formal linearization up to a multiplier
# ---------------------------------------------------------------------------

@dataclass
class Type1LinearizationResult:
    change: FormalMap
    multiplier: Poly
    report: GradedSolveReport
    linear_form: DiffForm


def _resolve_beta_chain(alpha1, omega_k, y, N, report):
    """Resolve omega_k = alpha1 ^ d_y(phi) through the paper's descent/ascent.

    Descend dividing d_y(xi) by alpha1 until a d_y-closed form appears, then
    ascend with Euler antiderivatives. Returns the potential phi (a Poly).
    """
    n = alpha1.nvars
    xi = derham_divide(alpha1, omega_k, y, N, report)
    chain = [xi]
    while True:
        der = d_active(chain[-1], y)
        if der.is_zero():
            break
        chain.append(derham_divide(alpha1, der, y, N, report))
    # bottom is d_y-closed: xi_H = d_y phi_H
    phi = homotopy_antiderivative(chain[-1], y).as_poly()
    for h in range(len(chain) - 2, -1, -1):
        # xi_h + phi_{h+1} alpha1 is d_y-closed
        closed = chain[h] + alpha1.poly_scale(phi)
        if not d_active(closed, y).is_zero():
            raise SolveInconsistencyError(
                "beta chain ascent lost closedness", degree=None)
        phi = homotopy_antiderivative(closed, y).as_poly()
    check = wedge(alpha1, d_active(scalar_form(phi), y)) - omega_k
    if not check.is_zero():
        raise SolveInconsistencyError("beta chain did not resolve the block")
    return phi


def formal_linearize_type1(omega: DiffForm, N: int) -> Type1LinearizationResult:
    """Linearize a nondegenerate Type-1 co-Nambu form up to a multiplier.

    Returns (Phi, f, report) with
        pullback_form(omega, Phi, N) == f * omega_linear   through degree N,
    omega_linear being the input's own linear part. Per degree r: first the
    coordinate shifts x_k -> x_k +- phi_k kill the non-prefix blocks (the
    beta-chain), then one linear solve splits the prefix residual into a
    multiplier increment and an exact y-differential absorbed by a y-shift.
    """
    if N < 2:
        raise PreconditionError("N must be >= 2")
    n = omega.nvars
    p, y, diag, alpha1 = _type1_linear_data(omega)
    report = GradedSolveReport()
    omega = omega.truncate(N)
    omega_lin = omega.homogeneous_component(1)
    prefix = tuple(range(p - 1))

    cur = omega
    phi_total = FormalMap.identity(n)
    f_total = Poly.one(n)

    for r in range(2, N + 1):
        hom = cur.homogeneous_component(r)
        blocks = prefix_blocks(hom, p - 1)
        for T, part in blocks.items():
            if len(T) < p - 2 and not part.is_zero():
                raise SolveInconsistencyError(
                    "deep block obstruction (input not co-Nambu?)", degree=r,
                    residual=part)
        # (A) kill the blocks missing one prefix differential
        shift_comps = None
        for k in range(p - 1):
            key = tuple(t for t in prefix if t != k)
            omega_k = blocks.get(key)
            if omega_k is None or omega_k.is_zero():
                continue
            phi_k = _resolve_beta_chain(alpha1, omega_k, y, N, report)
            if shift_comps is None:
                shift_comps = [Poly.variable(n, i) for i in range(n)]
            sign = _shift_sign(n, p, k, alpha1, phi_k, omega_k)
            shift_comps[k] = shift_comps[k] + (phi_k if sign > 0 else -phi_k)
        if shift_comps is not None:
            step = FormalMap(shift_comps, trunc=N)
            cur = pullback_form(cur, step, N)
            phi_total = phi_total.compose(step, N)
            check = prefix_blocks(cur.homogeneous_component(r), p - 1)
            for T, part in check.items():
                if T != prefix and not part.is_zero():
                    raise SolveInconsistencyError(
                        "prefix reduction failed", degree=r, residual=part)
        # (B) absorb the prefix residual into multiplier + y-shift
        hom = cur.homogeneous_component(r)
        blocks = prefix_blocks(hom, p - 1)
        rho = blocks.get(prefix, DiffForm(n, 1, {}))
        for key in rho.comps:
            if key[0] < p - 1:
                raise SolveInconsistencyError(
                    "prefix residual has parameter components", degree=r)
        f_r, h_pot = _split_multiplier(alpha1, rho, y, r, n, report)
        f_total = f_total + f_r
        if not h_pot.is_zero():
            comps = [Poly.variable(n, i) for i in range(n)]
            for exps, c in h_pot.terms.items():
                j = next(i for i in y if exps[i])
                new = list(exps)
                new[j] -= 1
                comps[j] = comps[j] - Poly.monomial(n, new, c / diag[j])
            step = FormalMap(comps, trunc=N)
            cur = pullback_form(cur, step, N)
            phi_total = phi_total.compose(step, N)
        gap = (cur - omega_lin.poly_scale(f_total, N)).truncate(r)
        if not gap.is_zero():
            raise SolveInconsistencyError(
                "multiplier absorption failed", degree=r, residual=gap)

    final = pullback_form(omega, phi_total, N) - omega_lin.poly_scale(f_total, N)
    if not final.truncate(N).is_zero():
        raise SolveInconsistencyError("final linearization identity failed")
    return Type1LinearizationResult(phi_total, f_total, report, omega_lin)


def _shift_sign(n, p, k, alpha1, phi_k, omega_k) -> int:
    """Exact sign for the shift x_k += phi_k from the induced correction."""
    # correction of dx-prefix ^ alpha1 under x_k -> x_k + phi_k at the block
    # missing dx_k equals (-1)^{p-1-k-1}-style; derive it by one cheap wedge
    factors = []
    for i in range(p - 1):
        if i == k:
            continue
        factors.append(coordinate_form(n, i))
    dphi = DiffForm(n, 1, {(j,): phi_k.partial(j) for j in range(n)
                           if not phi_k.partial(j).is_zero()})
    # insert d(phi_k) in slot k and compare against the target block layout
    ordered = []
    for i in range(p - 1):
        ordered.append(dphi if i == k else coordinate_form(n, i))
    correction = wedge_all(ordered + [alpha1])
    key = tuple(t for t in range(p - 1) if t != k)
    corr_block = prefix_blocks(correction, p - 1).get(key)
    if corr_block is None or corr_block.is_zero():
        raise SolveInconsistencyError("shift produced no correction")
    if corr_block == -omega_k:
        return 1
    if corr_block == omega_k:
        return -1
    raise SolveInconsistencyError("shift correction does not match the block")


def _split_multiplier(alpha1, rho, y, r, n, report):
    """Solve rho = f * alpha1 + d_y(h) for homogeneous degree r.

    Unknowns: f over degree r-1 monomials, h over degree r+1 monomials with
    at least one active variable; one exact solve per inert pattern block.
    """
    active_set = set(y)
    diag = {key[0]: poly.linear_coefficients()[key[0]]
            for key, poly in alpha1.comps.items()}
    f_mons = _monomials_of_degree(n, r - 1)
    h_mons = _monomials_of_degree(n, r + 1, active=y)
    groups_f: Dict[tuple, List[tuple]] = {}
    for mon in f_mons:
        groups_f.setdefault(_param_pattern(mon, active_set), []).append(mon)
    groups_h: Dict[tuple, List[tuple]] = {}
    for mon in h_mons:
        groups_h.setdefault(_param_pattern(mon, active_set), []).append(mon)

    rho_entries: Dict[tuple, Dict[Tuple[tuple, int], Fraction]] = {}
    for (j,), poly in rho.comps.items():
        for exps, c in poly.terms.items():
            pat = _param_pattern(exps, active_set)
            rho_entries.setdefault(pat, {})[(exps, j)] = c

    f_poly = Poly.zero(n)
    h_poly = Poly.zero(n)
    patterns = sorted(set(groups_f) | set(groups_h) | set(rho_entries))
    for pat in patterns:
        rows_map: Dict[Tuple[tuple, int], int] = {}
        cols = []
        entries = []
        for mon in groups_f.get(pat, []):
            col = len(cols)
            cols.append(("f", mon))
            for j, dj in diag.items():
                new = list(mon)
                new[j] += 1
                key = (tuple(new), j)
                idx = rows_map.setdefault(key, len(rows_map))
                entries.append((idx, col, dj))
        for mon in groups_h.get(pat, []):
            col = len(cols)
            cols.append(("h", mon))
            for j in y:
                if mon[j] == 0:
                    continue
                new = list(mon)
                new[j] -= 1
                key = (tuple(new), j)
                idx = rows_map.setdefault(key, len(rows_map))
                entries.append((idx, col, Fraction(mon[j])))
        target = rho_entries.get(pat, {})
        for key in target:
            rows_map.setdefault(key, len(rows_map))
        M = [[Fraction(0)] * len(cols) for _ in range(len(rows_map))]
        for i, j, v in entries:
            M[i][j] += v
        b = [Fraction(0)] * len(rows_map)
        for key, v in target.items():
            b[rows_map[key]] = v
        res = solve_linear(RatMatrix(M), b)
        report.add(r, len(rows_map), len(cols), res.consistent, "multiplier split")
        if not res.consistent:
            raise SolveInconsistencyError(
                "multiplier split inconsistent", degree=r, residual=rho)
        for (kind_, mon), v in zip(cols, res.solution):
            if not v:
                continue
            if kind_ == "f":
                f_poly = f_poly + Poly.monomial(n, mon, v)
            else:
                h_poly = h_poly + Poly.monomial(n, mon, v)
    return f_poly, h_poly


# ---------------------------------------------------------------------------
# Type 1: removing the multiplier (degree-by-degree Lie solves)
# ---------------------------------------------------------------------------

@dataclass
class MultiplierRemovalResult:
    change: FormalMap
    per_degree: List[Tuple[int, Multivector, Poly]]  # (degree, X, f_r)
    normal_tensor: Multivector
    scaling: Optional[Fraction] = None               # exact constant scale used
    obstruction: Optional[dict] = None               # irrational constant root
    numeric_scale: Optional[float] = None
    report: GradedSolveReport = field(default_factory=GradedSolveReport)


def _int_kth_root(a: int, k: int) -> Optional[int]:
    if a < 0:
        if k % 2 == 0:
            return None
        r = _int_kth_root(-a, k)
        return None if r is None else -r
    if a in (0, 1):
        return a
    lo, hi = 1, 1 << ((a.bit_length() + k - 1) // k + 1)
    while lo <= hi:
        mid = (lo + hi) // 2
        v = mid ** k
        if v == a:
            return mid
        if v < a:
            lo = mid + 1
        else:
            hi = mid - 1
    return None


def _rational_kth_root(c: Fraction, k: int) -> Optional[Fraction]:
    num = _int_kth_root(c.numerator, k)
    den = _int_kth_root(c.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _euler_field(n: int, active: Sequence[int]) -> Multivector:
    return Multivector(n, 1, {(i,): Poly.variable(n, i) for i in active})


def _flow_map(W: Multivector, N: int) -> FormalMap:
    """Time-1 flow of a vector field vanishing to order >= 2, as a map.

    Components are x_i + sum_k W^k(x_i)/k! truncated at N; exact because the
    iterated derivations terminate above degree N.
    """
    n = W.nvars
    comps = []
    for i in range(n):
        term = Poly.variable(n, i)
        total = term
        k = 1
        while True:
            term = apply_vector(W, term).truncate(N)
            if term.is_zero():
                break
            total = total + term.scale(Fraction(1, math.factorial(k)))
            k += 1
        comps.append(total)
    return FormalMap(comps, trunc=N)


def _divide_tensor_by_normal(T: Multivector, P1: Multivector) -> Poly:
    """f with T = f * P1 for the Type-1 normal tensor P1 (exact, asserted)."""
    n = T.nvars
    key, coeff = next(iter(sorted(P1.comps.items())))
    f = T.component(key).exact_div(coeff)
    if T != P1.poly_scale(f):
        raise SolveInconsistencyError("tensor is not a multiple of the normal form")
    return f


def remove_multiplier(f: Poly, signs: Sequence[int], N: int,
                      nvars: Optional[int] = None) -> MultiplierRemovalResult:
    """Absorb the multiplier of f * Pi_1 into a formal coordinate change.

    Pi_1 is the nondegenerate Type-1 normal tensor with quadratic signs
    `signs` on the leading block (trailing variables are inert parameters).
    Per degree r the field X with L_X Pi_1 = f^(r) Pi_1 is found on the
    Q-preserving frame Y_ij plus an Euler part, verified exactly, and applied
    through its time-1 polynomial flow so the multiplier shape is preserved.
    """
    if N < 2:
        raise PreconditionError("N must be >= 2")
    n = nvars if nvars is not None else f.nvars
    if f.nvars != n:
        raise ValueError("f has wrong nvars")
    m = len(signs)
    q = m - 1
    if q < 3:
        raise PreconditionError("need q >= 3")
    if any(s not in (1, -1) for s in signs):
        raise PreconditionError("signs must be +-1")
    if n < m:
        raise PreconditionError("not enough variables for the active block")
    active = list(range(m))
    P1, _ = normal_form_generator("type1", n, q, r=q, s=0, signs=list(signs))
    c0 = f.constant_term()
    if c0 == 0:
        raise PreconditionError("multiplier must not vanish at the origin")

    result = MultiplierRemovalResult(FormalMap.identity(n), [], P1)
    T = P1.poly_scale(f, N + 1).truncate(N + 1)
    phi_total = FormalMap.identity(n)

    # constant part: scaling (and a reflection when the parity demands it)
    if c0 != 1:
        c = c0
        reflect = None
        if c < 0 and (q - 1) % 2 == 0:
            comps = [Poly.variable(n, i) for i in range(n)]
            comps[0] = -comps[0]
            reflect = FormalMap(comps)
            T = pushforward_tensor(T, reflect, N + 1)
            phi_total = reflect.compose(phi_total)
            c = -c
        g = _rational_kth_root(c, q - 1)
        if g is None:
            result.obstruction = {"constant": str(c), "exponent": q - 1}
            result.numeric_scale = float(c) ** (1.0 / (q - 1))
        else:
            comps = [Poly.variable(n, i) for i in range(n)]
            for i in active:
                comps[i] = comps[i].scale(Fraction(1) / g)
            scale_map = FormalMap(comps)  # new = old / g, i.e. old = g * new
            T = pushforward_tensor(T, scale_map, N + 1)
            phi_total = scale_map.compose(phi_total)
            result.scaling = g

    for r in range(1, N):
        f_cur = _divide_tensor_by_normal(T, P1)
        if result.obstruction is not None:
            f_cur = f_cur.scale(Fraction(1) / f_cur.constant_term())
        f_r = f_cur.homogeneous_component(r)
        if f_r.is_zero():
            continue
        X = _solve_lie_multiplier(P1, f_r, active, n, result.report)
        if lie_derivative(X, P1) != P1.poly_scale(f_r):
            raise SolveInconsistencyError(
                "Lie-derivative identity failed", degree=r)
        # pushforward along the time-1 flow of X is exp(-L_X)
        step = _flow_map(X, N + 1)
        T = pushforward_tensor(T, step, N + 1)
        phi_total = step.compose(phi_total, N + 1)
        result.per_degree.append((r, X, f_r))
        f_after = _divide_tensor_by_normal(T, P1)
        if result.obstruction is not None:
            f_after = f_after.scale(Fraction(1) / f_after.constant_term())
        for e in range(1, r + 1):
            if not f_after.homogeneous_component(e).is_zero():
                raise SolveInconsistencyError(
                    "multiplier degree did not advance", degree=r)

    result.change = FormalMap([c.truncate(N) for c in phi_total.comps], trunc=N)
    return result


def _solve_lie_multiplier(P1: Multivector, f_r: Poly, active: Sequence[int],
                          n: int, report: GradedSolveReport) -> Multivector:
    """One exact solve for L_X Pi_1 = f_r Pi_1 on the structured basis.

    Basis: the Q-preserving rotations Y_ij = eps_i x_j d_i - eps_j x_i d_j
    against all degree-r monomials, plus Euler multiples h * E with h drawn
    from powers of Q times inert-parameter monomials.
    """
    r = int(f_r.degree)
    # recover the quadratic coefficients from the dual form of P1
    omega1 = tensor_to_form(P1)
    diag = {}
    for key, c in omega1.comps.items():
        j = key[0]
        diag[j] = c.linear_coefficients()[j]
    E = _euler_field(n, active)
    q = P1.grade

    basis: List[Tuple[str, object]] = []
    images: List[Multivector] = []
    mons = _monomials_of_degree(n, r)
    for i, j in itertools.combinations(active, 2):
        Yij = Multivector(n, 1, {
            (i,): Poly.variable(n, j).scale(diag[i]),
            (j,): Poly.variable(n, i).scale(-diag[j])})
        LY = lie_derivative(Yij, P1)
        for mon in mons:
            g = Poly.monomial(n, mon)
            X = Yij.poly_scale(g)
            basis.append(("Y", (i, j, mon)))
            images.append(lie_derivative(X, P1))
    # Euler parts: h * E with h = (param monomial) * Q^s, 2s + |param| = r
    Q = Poly.zero(n)
    for jj in active:
        exps = [0] * n
        exps[jj] = 2
        Q = Q + Poly.monomial(n, exps, Fraction(diag[jj], 2))
    param_slots = [i for i in range(n) if i not in set(active)]
    for s in range(0, r // 2 + 1):
        rem = r - 2 * s
        if rem == 0 and s == 0:
            continue
        for pmon in _monomials_of_degree(len(param_slots), rem) if param_slots else \
                ([()] if rem == 0 else []):
            h = Q.pow(s)
            if param_slots:
                full = [0] * n
                for slot, e in zip(param_slots, pmon):
                    full[slot] = e
                h = h.mul(Poly.monomial(n, full))
            if h.is_zero():
                continue
            X = E.poly_scale(h)
            basis.append(("E", (s, pmon if param_slots else ())))
            images.append(lie_derivative(X, P1))

    target = P1.poly_scale(f_r)
    rows_map: Dict[Tuple[tuple, tuple], int] = {}
    entries = []
    for col, img in enumerate(images):
        for key, poly in img.comps.items():
            for exps, c in poly.terms.items():
                rk = (key, exps)
                idx = rows_map.setdefault(rk, len(rows_map))
                entries.append((idx, col, c))
    for key, poly in target.comps.items():
        for exps, c in poly.terms.items():
            rows_map.setdefault((key, exps), len(rows_map))
    M = [[Fraction(0)] * len(images) for _ in range(len(rows_map))]
    for i, j, v in entries:
        M[i][j] += v
    b = [Fraction(0)] * len(rows_map)
    for key, poly in target.comps.items():
        for exps, c in poly.terms.items():
            b[rows_map[(key, exps)]] = c
    res = solve_linear(RatMatrix(M), b)
    report.add(r, len(rows_map), len(images), res.consistent, "Lie multiplier")
    if not res.consistent:
        raise SolveInconsistencyError("multiplier Lie solve inconsistent", degree=r)
    X = Multivector(n, 1, {})
    for (kind_, data), v in zip(basis, res.solution):
        if not v:
            continue
        if kind_ == "Y":
            i, j, mon = data
            Yij = Multivector(n, 1, {
                (i,): Poly.variable(n, j).scale(diag[i]),
                (j,): Poly.variable(n, i).scale(-diag[j])})
            X = X + Yij.poly_scale(Poly.monomial(n, mon, v))
        else:
            s, pmon = data
            h = Q.pow(s).scale(v)
            if pmon:
                full = [0] * n
                for slot, e in zip(param_slots, pmon):
                    full[slot] = e
                h = h.mul(Poly.monomial(n, full))
            X = X + E.poly_scale(h)
    return X


# ---------------------------------------------------------------------------
# Type 2: prelinearization (factor out a commuting frame)
# ---------------------------------------------------------------------------

@dataclass
class Type2PrelinResult:
    multiplier: Poly
    frame: List[Multivector]
    field: Multivector
    change: FormalMap
    report: GradedSolveReport
    field_matrix: RatMatrix


def _type2_linear_data(P: Multivector):
    """Validate the exact Type-2 linear part; return (q, y, b-matrix)."""
    n, q = P.nvars, P.grade
    lin = P.homogeneous_component(1)
    S = q - 1
    blocks = prefix_blocks(lin, S)
    frame_key = tuple(range(S))
    y = list(range(S, n))
    for T, part in blocks.items():
        if T != frame_key and not part.is_zero():
            raise PreconditionError("linear part is not in Type 2 normal shape")
    W = blocks.get(frame_key)
    if W is None:
        raise PreconditionError("linear part vanishes")
    m = len(y)
    B = [[Fraction(0)] * m for _ in range(m)]
    for (j,), c in W.comps.items():
        coeffs = c.linear_coefficients()
        if any(coeffs[t] != 0 for t in range(S)):
            raise PreconditionError("linear field involves frame variables")
        for idx, i in enumerate(y):
            B[idx][y.index(j)] = coeffs[i]
    Bm = RatMatrix(B)
    if Bm.det() == 0:
        raise PreconditionError("Type 2 linear part is degenerate")
    if q == n - 1:
        trace = sum((Bm[i, i] for i in range(m)), Fraction(0))
        if trace == 0:
            raise PreconditionError(
                "q = n-1 needs a nonzero trace for the prelinearization")
    return q, y, Bm


def prelinearize_type2(P: Multivector, N: int) -> Type2PrelinResult:
    """Factor P as f * d1 ^ ... ^ d_{q-1} ^ X through degree N.

    Decompose with one graded division per frame slot, make the frame commute
    with everything by transport solves along V_i, and straighten each V_i
    with its formal flow. In the returned coordinates X has no frame
    components and no frame-variable dependence through degree N, and
        pushforward_tensor(P, change, N) == f * frame ^ X   (truncated at N).

    Internally runs at a working degree above N (brackets and straightening
    Jacobians each cost one trusted degree); the window deepens iteratively,
    so the cheap attempt is tried before the guaranteed-sufficient one.
    """
    if N < 2:
        raise PreconditionError("N must be >= 2")
    S = P.grade - 1
    ladder = sorted({N + 5, N + 2 * S + 2, N + 3 * S + 2})
    last = None
    for Nw in ladder:
        try:
            return _prelinearize_attempt(P, N, Nw)
        except SolveInconsistencyError as e:
            last = e
    raise last


def _prelinearize_attempt(P: Multivector, N: int, Nw: int) -> Type2PrelinResult:
    n = P.nvars
    q, y, B = _type2_linear_data(P)
    S = q - 1
    frame_key = tuple(range(S))
    report = GradedSolveReport()
    D = Nw  # degree through which the current objects are trusted
    floor = N + 1
    T = P.truncate(D)

    # decomposition: the full-frame block is X itself; one division per slot
    blocks = prefix_blocks(T, S)
    X = blocks.get(frame_key)
    Vs = []
    for j in range(S):
        key = tuple(t for t in range(S) if t != j)
        Bj = blocks.get(key, Multivector(n, 2, {}))
        sign = (-1) ** (S - 1 - j)
        # B_j = sign * v_j ^ X  =>  X ^ v_j = -sign * B_j
        vj = graded_divide(X, Bj.scale(-sign), y, D, report, label=f"frame {j + 1}")
        Vs.append(coordinate_field(n, j) + vj)
    cand = wedge_all(Vs + [X], D) if Vs else X
    diff = (cand - T).truncate(D)
    if not diff.is_zero():
        bad = int(diff.min_coeff_degree())
        raise SolveInconsistencyError(
            "frame decomposition does not reproduce the tensor (input not Nambu?)",
            degree=bad, residual=diff.homogeneous_component(bad))

    f_acc = Poly.one(n)
    phi_total = FormalMap.identity(n)

    for i in range(S):
        Vi = Vs[i]
        D -= 1  # brackets are trusted one degree below their inputs
        # (a) make X commute with V_i: X <- gX with V_i(g) + f_i g = 0
        bracket = lie_bracket(Vi, X)
        f_i_obj, D = _divide_adaptive(X, bracket, y, D, floor, report,
                                      f"bracket ratio {i + 1}")
        f_i = f_i_obj.as_poly()
        g = _transport_solve(Vi, f_i, i, D)
        X = X.poly_scale(g, D)
        f_acc = f_acc.mul(_poly_inverse(g, D), D)
        # (b) correct the later frame fields: V_j <- V_j + gamma_j X
        for j in range(i + 1, S):
            br = lie_bracket(Vi, Vs[j]).truncate(D)
            if br.is_zero():
                continue
            g_ij_obj, D = _divide_adaptive(X, br, y, D, floor, report,
                                           f"frame bracket {i + 1},{j + 1}")
            g_ij = g_ij_obj.as_poly()
            gamma = _transport_solve(Vi, Poly.zero(n), i, D, rhs=-g_ij)
            Vs[j] = (Vs[j] + X.poly_scale(gamma, D)).truncate(D)
        # (c) straighten V_i to the coordinate field
        psi = _straighten_flow(Vi.truncate(D), i, D)
        step = psi.inverse(D)
        # step's inverse through D is psi itself; seed the cache
        step._inv_cache[D] = FormalMap([c.truncate(D) for c in psi.comps], trunc=D)
        D -= 1  # the pushforward spends one degree on the Jacobian factor
        X = pushforward_tensor(X, step, D)
        for j in range(i + 1, S):
            Vs[j] = pushforward_tensor(Vs[j], step, D)
        f_acc = f_acc.substitute(psi.comps, D)
        phi_total = step.compose(phi_total, D)
        Vs[i] = coordinate_field(n, i)

    # drop any frame components X may carry (they do not change the product)
    X = Multivector(n, 1, {k: v for k, v in X.comps.items() if k[0] >= S})
    frame = [coordinate_field(n, i) for i in range(S)]
    X_out = X.truncate(N)
    for key, c in X_out.comps.items():
        for exps in c.terms:
            if any(exps[t] for t in range(S)):
                raise SolveInconsistencyError(
                    "field keeps frame-variable dependence", degree=sum(exps))
    f_out = f_acc.truncate(N)
    change = FormalMap([c.truncate(N) for c in phi_total.comps], trunc=N)
    # the contract, verified at the user's order
    lhs = pushforward_tensor(P, change, N)
    rhs = wedge_all(frame + [X_out], N).poly_scale(f_out, N)
    gap = (lhs - rhs).truncate(N)
    if not gap.is_zero():
        raise SolveInconsistencyError(
            "prelinearization contract failed", degree=int(gap.min_coeff_degree()))
    return Type2PrelinResult(f_out, frame, X_out, change, report, B)


def _divide_adaptive(X, target, y, D, floor, report, label):
    """Graded division with an adaptively retreating trusted window.

    Top-degree junk above the floor -- an inconsistent solve, or bracket
    components straying off the active block -- means the truncated data no
    longer represents the formal object at that degree; the window shrinks to
    just below the offending degree and the division is redone. Obstructions
    at or below the floor are genuine and propagate.
    """
    yset = set(y)
    while True:
        t = target.truncate(D)
        stray = [int(v.min_degree()) for k, v in t.comps.items()
                 if not set(k) <= yset]
        if stray:
            dbad = min(stray)
            if dbad - 1 < floor:
                raise SolveInconsistencyError(
                    f"bracket leaves the active block: {label}", degree=dbad,
                    residual=t.homogeneous_component(dbad))
            D = dbad - 1
            continue
        try:
            return graded_divide(X.truncate(D), t, y, D, report, label), D
        except SolveInconsistencyError as e:
            if e.degree is None or e.degree - 1 < floor:
                raise
            D = e.degree - 1


def _transport_solve(V: Multivector, f: Poly, i: int, N: int,
                     rhs: Optional[Poly] = None) -> Poly:
    """Solve V(g) + f g = 0 with g(0) = 1 (or V(g) = rhs with g(0) = 0).

    V = d_i + higher terms, so each degree is an exact x_i-antiderivative of
    lower data; the x_i-free kernel is pinned to zero.
    """
    n = V.nvars
    if rhs is None:
        g = Poly.one(n)
        homog = True
    else:
        g = Poly.zero(n)
        homog = False
    tail = V - coordinate_field(n, i)
    for d in range(1, N + 1):
        if homog:
            r = (apply_vector(tail, g) + f.mul(g)).homogeneous_component(d - 1)
            r = -r
        else:
            r = (rhs - apply_vector(tail, g)).homogeneous_component(d - 1)
        if r.is_zero():
            continue
        inc = {}
        for exps, c in r.terms.items():
            new = list(exps)
            new[i] += 1
            inc[tuple(new)] = c / new[i]
        g = g + Poly(n, inc)
    return g


def _poly_inverse(g: Poly, N: int) -> Poly:
    c0 = g.constant_term()
    if c0 == 0:
        raise PreconditionError("series inverse needs a unit constant term")
    n = g.nvars
    inv = Poly.const(n, Fraction(1) / c0)
    for _ in range(N):
        err = Poly.one(n) - g.mul(inv, N)
        if err.is_zero():
            break
        inv = inv + inv.mul(err, N)
    return inv.truncate(N)


def _straighten_flow(V: Multivector, i: int, N: int) -> FormalMap:
    """Map psi (new -> old) with V = d/du_i in the new coordinates.

    Solves d psi / d u_i = V(psi) with psi|_{u_i = 0} the identity embedding,
    order by order in u_i.
    """
    n = V.nvars
    comps = []
    for j in range(n):
        if j == i:
            comps.append(Poly.zero(n))
        else:
            comps.append(Poly.variable(n, j))
    for k in range(0, N + 1):
        # defect at order u_i^k
        image = [V.component((j,)).substitute(comps, N) for j in range(n)]
        fixed = True
        for j in range(n):
            dcomp = comps[j].partial(i)
            defect = image[j] - dcomp
            piece = _ui_coefficient(defect, i, k)
            if piece.is_zero():
                continue
            fixed = False
            lift = {}
            for exps, c in piece.terms.items():
                new = list(exps)
                new[i] = k + 1
                lift[tuple(new)] = c / (k + 1)
            comps[j] = comps[j] + Poly(n, lift)
        if fixed and k > 0:
            pass
    comps = [c.truncate(N) for c in comps]
    return FormalMap(comps, trunc=N)


def _ui_coefficient(p: Poly, i: int, k: int) -> Poly:
    """Terms of p with exact u_i-exponent k (exponent kept in place as k)."""
    n = p.nvars
    out = {}
    for exps, c in p.terms.items():
        if exps[i] == k:
            out[exps] = c
    return Poly(n, out)


# ---------------------------------------------------------------------------
# Poincare linearization of the residual vector field
# ---------------------------------------------------------------------------

@dataclass
class PoincareResult:
    change: FormalMap
    report: GradedSolveReport
    resonance: "ResonanceReport"
    divisors: Dict[int, float]


def poincare_linearize(X: Multivector, N: int, tol: float = 1e-9) -> PoincareResult:
    """Linearize X at finite order by exact homological solves.

    The resonance gate runs first (orders 2..N at tolerance tol); the
    homological operator is a rational matrix, so each degree is solved
    exactly over Q whether or not the eigenvalues are rational. Divisor
    magnitudes are recorded for the report.
    """
    if X.grade != 1:
        raise PreconditionError("poincare_linearize needs a vector field")
    n = X.nvars
    lin = X.homogeneous_component(1)
    if lin.is_zero():
        raise PreconditionError("zero linear part")
    if not X.homogeneous_component(0).is_zero():
        raise PreconditionError("field must vanish at the origin")
    M = [[Fraction(0)] * n for _ in range(n)]
    for (j,), c in lin.comps.items():
        coeffs = c.linear_coefficients()
        for i in range(n):
            M[i][j] = coeffs[i]
    B = RatMatrix(M)  # b^i_j reading: coefficient of x_i in the d_j component
    reson = resonance_report(B, max(N, 2), tol)
    offending = [rel for rel in reson.resonances if sum(rel[1]) <= N]
    if offending:
        raise PreconditionError(
            f"resonances of order <= {N} at tol={tol}: {offending}")

    report = GradedSolveReport()
    cur = X.truncate(N)
    phi_total = FormalMap.identity(n)
    L = lin
    for d in range(2, N + 1):
        R = cur.homogeneous_component(d)
        if R.is_zero():
            continue
        U = _homological_solve(L, R, d, report)
        # pushing forward along x -> x + U adds [L, U]; kill R with -U
        comps = [Poly.variable(n, i) - U.component((i,)) for i in range(n)]
        step = FormalMap(comps, trunc=N)
        cur = pushforward_tensor(cur, step, N)
        if not cur.homogeneous_component(d).is_zero():
            raise SolveInconsistencyError("homological step failed", degree=d)
        phi_total = step.compose(phi_total, N)
    if not (cur - L).truncate(N).is_zero():
        raise SolveInconsistencyError("linearization incomplete")
    divisors = dict(reson.small_divisors)
    return PoincareResult(phi_total, report, reson, divisors)


def _homological_solve(L: Multivector, R: Multivector, d: int,
                       report: GradedSolveReport) -> Multivector:
    """Solve [L, U] = R on the degree-d monomial-vector basis, exactly."""
    n = L.nvars
    mons = _monomials_of_degree(n, d)
    basis = [(mon, i) for mon in mons for i in range(n)]
    col_of = {bk: idx for idx, bk in enumerate(basis)}
    rows_map: Dict[Tuple[tuple, int], int] = {}
    entries = []
    for (mon, i), col in col_of.items():
        U = Multivector(n, 1, {(i,): Poly.monomial(n, mon)})
        img = lie_bracket(L, U)
        for (j,), poly in img.comps.items():
            for exps, c in poly.terms.items():
                rk = (exps, j)
                idx = rows_map.setdefault(rk, len(rows_map))
                entries.append((idx, col, c))
    for (j,), poly in R.comps.items():
        for exps, c in poly.terms.items():
            rows_map.setdefault((exps, j), len(rows_map))
    Mt = [[Fraction(0)] * len(basis) for _ in range(len(rows_map))]
    for i, j, v in entries:
        Mt[i][j] += v
    b = [Fraction(0)] * len(rows_map)
    for (j,), poly in R.comps.items():
        for exps, c in poly.terms.items():
            b[rows_map[(exps, j)]] = c
    res = solve_linear(RatMatrix(Mt), b)
    report.add(d, len(rows_map), len(basis), res.consistent, "homological")
    if not res.consistent:
        raise SolveInconsistencyError("homological equation inconsistent", degree=d)
    comps: Dict[tuple, Poly] = {}
    for (mon, i), col in col_of.items():
        v = res.solution[col]
        if v:
            cur = comps.get((i,))
            add = Poly.monomial(n, mon, v)
            comps[(i,)] = add if cur is None else cur + add
    return Multivector(n, 1, {k: v for k, v in comps.items() if not v.is_zero()})


# ---------------------------------------------------------------------------
# resonance and small-divisor diagnostics
# ---------------------------------------------------------------------------

def resonance_report(B: RatMatrix, M: int, tol: float = 1e-9,
                     C: Optional[float] = None,
                     eps: Optional[float] = None) -> ResonanceReport:
    """Enumerate eigenvalue relations lambda_i = <m, lambda> for 2 <= |m| <= M.

    Exact arithmetic when every eigenvalue is rational (then the result is
    tolerance-independent); numeric at tol otherwise. With (C, eps) the
    finite-order Bryuno proxy records, per order, whether
    min |<m,lambda> - lambda_k| > C exp(-|m|^(1-eps)).
    """
    if B.rows != B.cols:
        raise PreconditionError("resonance_report needs a square matrix")
    if M < 2:
        raise PreconditionError("max order must be >= 2")
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    ed = eigen_data(B, tol)
    P = B.rows
    exact = ed.all_rational
    lams_exact = ed.rational_eigenvalues if exact else None
    lams = ed.numeric_eigenvalues
    resonances = []
    small: Dict[int, float] = {}
    for order in range(2, M + 1):
        best = None
        for m in itertools.combinations_with_replacement(range(P), order):
            counts = [0] * P
            for i in m:
                counts[i] += 1
            if exact:
                total = sum((counts[j] * lams_exact[j] for j in range(P)),
                            Fraction(0))
            else:
                total = sum(counts[j] * lams[j] for j in range(P))
            for i in range(P):
                if exact:
                    delta = total - lams_exact[i]
                    mag = abs(float(delta))
                    hit = delta == 0
                else:
                    delta = total - lams[i]
                    mag = abs(delta)
                    hit = mag <= tol
                if hit:
                    resonances.append((i + 1, tuple(counts)))
                if best is None or mag < best:
                    best = mag
        small[order] = best if best is not None else float("inf")
    bry = None
    params = None
    if C is not None:
        eps = 0.5 if eps is None else eps
        if not 0 < eps < 1:
            raise PreconditionError("eps must lie in (0, 1)")
        bry = {k: small[k] > C * math.exp(-k ** (1.0 - eps))
               for k in small}
        params = (C, eps)
    return ResonanceReport(lams, M, exact, resonances, small, bry, params)
