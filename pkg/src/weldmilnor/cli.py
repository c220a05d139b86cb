"""Command-line front end.

Every command reads its inputs from files (``-`` is standard input) and
writes JSON or plain text to standard output, so commands compose through
pipes::

    weldmilnor surgery one-arrow.trees | weldmilnor invariants - --q 2

Exit statuses: 0 success, 1 verdict or property failure, 2 input error,
3 internal certification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional, Sequence, Union

from . import fuzz
from .algebra import PeelingError
from .arrows import (
    OracleMismatch,
    TreeFormatError,
    TreePresentation,
    arrow_presentation,
    expand_presentation,
    normalize_ascending,
    parse_trees,
    surgery,
)
from .diagram import GaussCodeError, GaussDiagram, parse_gauss
from .invariants import (
    CertificationError,
    chen_milnor,
    compare,
    first_nonvanishing,
    milnor_table,
    unlink_test,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

Input = Union[GaussDiagram, TreePresentation]


class InputError(Exception):
    """Bad command-line input (reported with exit status 2)."""


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def _is_trees(text: str) -> bool:
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            return line.split()[0] == "trees"
    return False


def load(path: str) -> Input:
    """Parse a Gauss code or a tree presentation, detected from the header word."""
    text = _read(path)
    try:
        return parse_trees(text) if _is_trees(text) else parse_gauss(text)
    except (GaussCodeError, TreeFormatError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_trees(path: str) -> TreePresentation:
    obj = load(path)
    return obj if isinstance(obj, TreePresentation) else arrow_presentation(obj)


def _diagram(obj: Input) -> GaussDiagram:
    return obj if isinstance(obj, GaussDiagram) else surgery(obj)


def _basepoints(args, d: GaussDiagram) -> Optional[List[int]]:
    if not args.basepoint:
        return None
    if d.kind != "link":
        raise InputError("basepoints apply to links only")
    bps = [0] * d.n
    for spec in args.basepoint:
        try:
            comp, arc = (int(x) for x in spec.split(":"))
        except ValueError:
            raise InputError(f"bad basepoint {spec!r}; expected COMP:ARC") from None
        if not 1 <= comp <= d.n or not 0 <= arc < d.num_arcs(comp):
            raise InputError(f"basepoint {spec} is out of range")
        bps[comp - 1] = arc
    return bps


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _check_q(q: int) -> None:
    if q < 2:
        raise InputError("--q must be at least 2")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_invariants(args) -> int:
    _check_q(args.q)
    d = _diagram(load(args.input))
    bps = _basepoints(args, d)
    table = milnor_table(d, args.q, bps)
    if args.format == "table":
        sys.stdout.write(table.format_table())
        if args.emit_presentation:
            pres = chen_milnor(d, args.q, bps)
            sys.stdout.write("# relators\n")
            sys.stdout.writelines(f"{r}\n" for r in pres.to_json()["relators"])
        return EXIT_OK
    out = table.to_json()
    if args.emit_presentation:
        out["presentation"] = d.serialize(one_line=True)
        out["chenMilnor"] = chen_milnor(d, args.q, bps).to_json()
    _emit(out)
    return EXIT_OK


def _fnv_json(t):
    fnv = first_nonvanishing(t)
    if fnv is None:
        return None
    k, vals = fnv
    return {"length": k, "entries": [{"I": list(I), "mu": v} for I, v in vals]}


def cmd_compare(args) -> int:
    _check_q(args.q)
    d1, d2 = _diagram(load(args.first)), _diagram(load(args.second))
    if d1.kind != d2.kind:
        raise InputError(f"cannot compare a {d1.kind} with a {d2.kind}")
    if d1.n != d2.n:
        raise InputError(f"component counts differ ({d1.n} and {d2.n})")
    t1, t2 = milnor_table(d1, args.q), milnor_table(d2, args.q)
    equal, witness = compare(t1, t2)
    out = {
        "kind": d1.kind,
        "q": args.q,
        "equal_wq": equal,
        "witness": None if witness is None else
        {"I": list(witness[0]), "first": witness[1], "second": witness[2]},
    }
    if d1.kind == "link":
        f1, f2 = _fnv_json(t1), _fnv_json(t2)
        out["first_nonvanishing_equal"] = f1 == f2
        out["first_nonvanishing"] = [f1, f2]
        out["caveat"] = ("link tables are compared at fixed basepoints; only the first "
                         "nonvanishing invariants are independent of that choice")
    if args.format == "table":
        sys.stdout.write(("equal" if equal else "different") + f" modulo degree {args.q}\n")
        if witness is not None:
            I, a, b = witness
            sys.stdout.write(f"witness mu({','.join(map(str, I))}): {a} vs {b}\n")
    else:
        _emit(out)
    return EXIT_OK if equal else EXIT_FAIL


def cmd_unlink_test(args) -> int:
    _check_q(args.q)
    d = _diagram(load(args.input))
    if d.kind != "link":
        raise InputError("unlink-test expects a link")
    res = unlink_test(d, args.q)
    if args.format == "table":
        sys.stdout.write("true\n" if res.passed else f"false {json.dumps(res.certificate)}\n")
    else:
        _emit(res.to_json())
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_normalize(args) -> int:
    _check_q(args.q)
    p = load_trees(args.input)
    if p.kind != "stringlink":
        raise InputError("normalize expects a string link")
    sys.stdout.write(normalize_ascending(p, args.q).serialize())
    return EXIT_OK


def cmd_expand(args) -> int:
    sys.stdout.write(expand_presentation(load_trees(args.input)).serialize())
    return EXIT_OK


def cmd_surgery(args) -> int:
    obj = load(args.input)
    sys.stdout.write(_diagram(obj).serialize())
    return EXIT_OK


def cmd_fuzz(args) -> int:
    if args.seed is None:
        raise InputError("fuzz requires --seed")
    names = args.property or list(fuzz.PROPERTIES)
    for name in names:
        if name not in fuzz.PROPERTIES:
            raise InputError(f"unknown property {name!r}; choose from {', '.join(fuzz.PROPERTIES)}")
    q = args.q if args.q_given else None
    failed = False
    with fuzz.injected(args.inject):
        for name in names:
            report = fuzz.run_property(name, args.trials, args.seed, q, args.reproducer_dir)
            sys.stdout.write(report.line() + "\n")
            sys.stdout.flush()
            failed |= bool(report.failures)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _QAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.q_given = True


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, default=3, action=_QAction,
                        help="nilpotency degree: invariants of length <= q (default 3)")
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--seed", type=int, help="seed for the fuzz command")
    common.add_argument("--basepoint", action="append", default=[], metavar="COMP:ARC",
                        help="basepoint arc for a link component (repeatable)")
    common.add_argument("--emit-presentation", action="store_true",
                        help="also print the diagram and the nilpotent quotient presentation")
    common.set_defaults(q_given=False)

    parser = argparse.ArgumentParser(
        prog="weldmilnor",
        description="Milnor invariants and arrow calculus for welded links and string links.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, helptext, inputs=("input",)):
        sp = sub.add_parser(name, parents=[common], help=helptext, description=helptext)
        for arg in inputs:
            sp.add_argument(arg, help="Gauss code or tree presentation file, '-' for stdin")
        sp.set_defaults(func=func)
        return sp

    add("invariants", cmd_invariants, "print the table of Milnor invariants of length <= q")
    add("compare", cmd_compare, "compare two inputs modulo degree q", ("first", "second"))
    add("unlink-test", cmd_unlink_test, "decide whether a link looks like the unlink modulo degree q")
    add("normalize", cmd_normalize, "rewrite a string link tree presentation in ascending form")
    add("expand", cmd_expand, "expand every tree into single arrows")
    add("surgery", cmd_surgery, "perform surgery and print the resulting Gauss code")
    fz = add("fuzz", cmd_fuzz, "run the seeded property suites", ())
    fz.add_argument("--trials", type=int, default=200)
    fz.add_argument("--property", action="append", metavar="NAME",
                    help=f"property to run (repeatable): {', '.join(fuzz.PROPERTIES)}")
    fz.add_argument("--inject", choices=("surgery-sign",),
                    help="inject a known fault to check that the suite catches it")
    fz.add_argument("--reproducer-dir", default=".", help="where failing cases are written")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OracleMismatch, CertificationError, PeelingError) as exc:
        print(f"internal certification failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
