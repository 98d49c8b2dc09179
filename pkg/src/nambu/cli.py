"""Command-line front end: verify / classify / linearize / resonance / generate.

Exit codes: 0 success or verified-pass, 1 verified-fail or resonance found,
2 malformed input, 3 precondition unmet (q < 3, degenerate linear part,
zero trace), 4 internal solve inconsistency.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .polyalg import (
    InputError,
    Poly,
    PreconditionError,
    RatMatrix,
    SolveInconsistencyError,
    parse_poly,
)
from .exterior import (
    DiffForm,
    FormalMap,
    Multivector,
    embed,
    extend_map,
    form_to_tensor,
    formal_map_to_json,
    graded_from_json,
    pullback_form,
    pushforward_tensor,
    restrict,
    standard_volume,
    tensor_to_form,
    wedge_all,
)
from .verify import is_conambu, is_nambu
from .linclass import classify_linear, classify_linear_tensor, normal_form_generator
from .formal import (
    formal_linearize_type1,
    poincare_linearize,
    prelinearize_type2,
    resonance_report,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_INCONSISTENT = 4


def _read_payload(path: str) -> dict:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read input: {exc}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}")


def parse_input(data: dict, as_form: bool = False):
    """Validated Multivector/DiffForm from the shared JSON schema."""
    return graded_from_json(data, "form" if as_form else "vector")


def _default_tol(args) -> float:
    env = os.environ.get("NAMBU_TOL")
    if getattr(args, "tol", None) is not None:
        return args.tol
    if env:
        try:
            value = float(env)
        except ValueError:
            raise InputError(f"bad NAMBU_TOL value {env!r}")
        if value <= 0:
            raise InputError("NAMBU_TOL must be positive")
        return value
    return 1e-9


def _volume(args, nvars: int):
    text = getattr(args, "volume", None)
    if not text:
        return None
    f = parse_poly(text, nvars)
    if f.constant_term() == 0:
        raise InputError("volume multiplier must not vanish at the origin")
    return standard_volume(nvars, f)


def _emit(payload: dict, args) -> None:
    if getattr(args, "format", "json") == "json":
        sys.stdout.write(json.dumps(payload) + "\n")
    else:
        sys.stdout.write(_render_text(payload) + "\n")


def _render_text(payload: dict, indent: str = "") -> str:
    lines = []
    for key, value in payload.items():
        if isinstance(value, dict):
            lines.append(f"{indent}{key}:")
            lines.append(_render_text(value, indent + "  "))
        elif isinstance(value, list):
            lines.append(f"{indent}{key}: {value}")
        else:
            lines.append(f"{indent}{key}: {value}")
    return "\n".join(lines)


# -- subcommands -----------------------------------------------------------------

def _cmd_verify(args) -> int:
    data = _read_payload(args.input)
    obj = parse_input(data, as_form=args.form)
    if isinstance(obj, DiffForm):
        verdict = is_conambu(obj)
    else:
        verdict = is_nambu(obj, _volume(args, obj.nvars))
    _emit(verdict.to_json_obj(), args)
    return EXIT_OK if verdict.passed else EXIT_FAIL


def _cmd_classify(args) -> int:
    data = _read_payload(args.input)
    obj = parse_input(data, as_form=args.form)
    if isinstance(obj, DiffForm):
        report = classify_linear(obj)
    else:
        report = classify_linear_tensor(obj, _volume(args, obj.nvars))
    _emit(report.to_json_obj(), args)
    return EXIT_OK


def _cmd_generate(args) -> int:
    n, q = args.n, args.q
    if args.tag == "type1":
        if args.signs is None or args.r is None or args.s is None:
            raise InputError("type1 needs --r, --s and --signs")
        signs = []
        for ch in args.signs:
            if ch == "+":
                signs.append(1)
            elif ch == "-":
                signs.append(-1)
            else:
                raise InputError(f"bad sign character {ch!r}")
        P, w = normal_form_generator("type1", n, q, r=args.r, s=args.s,
                                     signs=signs)
    else:
        if args.matrix is None:
            raise InputError("type2 needs --matrix")
        rows = []
        for row in args.matrix.split(";"):
            rows.append([Fraction(v.strip()) for v in row.split(",")])
        P, w = normal_form_generator("type2", n, q, matrix=RatMatrix(rows))
    obj = w if args.form else P
    _emit(obj.to_json_obj(), args)
    return EXIT_OK


def _cmd_resonance(args) -> int:
    data = _read_payload(args.input)
    if not isinstance(data, dict) or "matrix" not in data:
        raise InputError('resonance input needs {"matrix": [[...], ...]}')
    try:
        B = RatMatrix([[Fraction(v) for v in row] for row in data["matrix"]])
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad matrix entries: {exc}")
    C = eps = None
    if args.bryuno:
        try:
            c_text, eps_text = args.bryuno.split(",")
            C, eps = float(c_text), float(eps_text)
        except ValueError:
            raise InputError("--bryuno expects C,EPS")
    rep = resonance_report(B, args.max_order, _default_tol(args), C, eps)
    _emit(rep.to_json_obj(), args)
    return EXIT_FAIL if rep.resonant else EXIT_OK


def _cmd_linearize(args) -> int:
    data = _read_payload(args.input)
    obj = parse_input(data, as_form=args.form)
    N = args.order
    if args.type2:
        return _linearize_type2(obj, N, args)
    return _linearize_type1(obj, N, args)


def _linearize_type1(obj, N, args) -> int:
    if isinstance(obj, Multivector):
        omega = tensor_to_form(obj)
    else:
        omega = obj
    lin = omega.homogeneous_component(1)
    report = classify_linear(lin)
    if report.normal_form.tag != "type1" or not report.nondegenerate:
        raise PreconditionError(
            "linear part is not a nondegenerate Type 1 form")
    to_normal = report.change.inverse()
    omega_n = pullback_form(omega, to_normal, N)
    res = formal_linearize_type1(omega_n, N)
    total = to_normal.compose(res.change, N)
    payload = {
        "map": formal_map_to_json(total),
        "multiplier": res.multiplier.to_str(),
        "linear_form": res.linear_form.to_json_obj(),
        "report": res.report.to_json_obj(),
    }
    _emit(payload, args)
    return EXIT_OK


def _linearize_type2(obj, N, args) -> int:
    if isinstance(obj, DiffForm):
        P = form_to_tensor(obj)
    else:
        P = obj
    q = P.grade
    lin = P.homogeneous_component(1)
    report = classify_linear_tensor(lin)
    if report.normal_form.tag != "type2" or not report.nondegenerate:
        raise PreconditionError(
            "linear part is not a nondegenerate Type 2 tensor")
    det = report.change.linear_matrix().det()
    P_n = pushforward_tensor(P, report.change).scale(Fraction(1) / det)
    pre = prelinearize_type2(P_n, N)
    n = P.nvars
    yidx = list(range(q - 1, n))
    Xy = restrict(pre.field, yidx)
    tol = _default_tol(args)
    try:
        pres = poincare_linearize(Xy, N, tol)
    except PreconditionError as exc:
        if "resonance" in str(exc):
            _emit({"resonant": True, "detail": str(exc)}, args)
            return EXIT_FAIL
        raise
    full = extend_map(pres.change, yidx, n)
    total = full.compose(pre.change, N).compose(report.change, N)
    multiplier = pre.multiplier.substitute(full.inverse(N).comps, N)
    payload = {
        "map": formal_map_to_json(total),
        "multiplier": multiplier.to_str(),
        "field_matrix": pre.field_matrix.to_str_rows(),
        "prelinearization_report": pre.report.to_json_obj(),
        "poincare_report": pres.report.to_json_obj(),
        "resonance": pres.resonance.to_json_obj(),
    }
    _emit(payload, args)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nambu",
        description="Exact verification, classification and formal "
                    "linearization of Nambu tensors and co-Nambu forms")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_volume=True):
        p.add_argument("input", nargs="?", default="-",
                       help="input JSON path, or - for stdin")
        p.add_argument("--form", action="store_true",
                       help="interpret the input as a differential form")
        p.add_argument("--format", choices=("json", "text"), default="json")
        if with_volume:
            p.add_argument("--volume", metavar="POLY",
                           help="scalar multiplier f of the volume form, f(0) != 0")

    p = sub.add_parser("verify", help="check the Nambu / co-Nambu conditions")
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("classify", help="linear normal-form classification")
    common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("linearize", help="finite-order formal linearization")
    common(p, with_volume=False)
    p.add_argument("--order", type=int, default=4, metavar="N")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--type1", action="store_true")
    group.add_argument("--type2", action="store_true")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=_cmd_linearize)

    p = sub.add_parser("resonance", help="eigenvalue resonance diagnostics")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--max-order", type=int, default=12, metavar="M")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--bryuno", metavar="C,EPS",
                   help="also evaluate the finite-order Bryuno proxy")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=_cmd_resonance)

    p = sub.add_parser("generate", help="emit a normal-form fixture")
    p.add_argument("tag", choices=("type1", "type2"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--signs", help="sign pattern such as ++-+")
    p.add_argument("--matrix", help="rows like 1,0;0,2")
    p.add_argument("--form", action="store_true",
                   help="emit the dual form instead of the tensor")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=_cmd_generate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "order", None) is not None and args.command == "linearize":
        if args.order < 2:
            print("error: --order must be >= 2", file=sys.stderr)
            return EXIT_INPUT
    if getattr(args, "max_order", None) is not None and args.command == "resonance":
        if args.max_order < 2:
            print("error: --max-order must be >= 2", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"precondition unmet: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SolveInconsistencyError as exc:
        detail = f" (degree {exc.degree})" if exc.degree is not None else ""
        print(f"solve inconsistency: {exc}{detail}", file=sys.stderr)
        return EXIT_INCONSISTENT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
