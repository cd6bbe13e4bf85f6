"""Command-line interface.

Exit codes: 0 success, 1 unknown subcommand, 2 malformed input file,
3 complex fails validation, 4 algorithm error, 5 I/O error, 6 bad flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .complex import CellComplex, validate
from .euler_ops import InvalidDescriptorError, MakeRejected, SplitDescriptor, make
from .hasse import InvalidComplexError, assemble_hasse
from .io import (
    ParseError,
    PlaneStep,
    emit_classification,
    emit_complex,
    emit_descriptor,
    emit_hasse,
    emit_matrix,
    parse_complex,
    parse_gram,
    parse_script,
)
from .laplace import GramStructure, SingularGramError, laplace_derham
from .split import Hyperplane, SplitError, split_complex

EXIT_OK = 0
EXIT_UNKNOWN_COMMAND = 1
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_ALGORITHM = 4
EXIT_IO = 5
EXIT_USAGE = 6

log = logging.getLogger("cellchain")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _CliFailure(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from exc


def _load(path: str) -> CellComplex:
    try:
        k = parse_complex(_read_text(path), check=False)
    except ParseError as exc:
        raise _CliFailure(EXIT_PARSE, f"{path}: {exc}") from exc
    except ValueError as exc:
        raise _CliFailure(EXIT_PARSE, f"{path}: {exc}") from exc
    report = validate(k)
    if not report.ok:
        raise _CliFailure(EXIT_INVALID, f"{path}: {report}")
    return k


def _write(args, text: str) -> None:
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise _CliFailure(EXIT_IO, f"cannot write {args.out}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)


def _check_p(p: int, lo: int, hi: int, what: str) -> None:
    if not lo <= p <= hi:
        raise UsageError(f"{what} needs {lo} <= p <= {hi}, got {p}")


def _euler_line(k: CellComplex) -> str:
    terms = " ".join(
        (f"{n}" if p == 0 else f"{'-' if p % 2 else '+'} {n}") for p, n in enumerate(k.counts)
    )
    return f"{terms} = {k.euler_characteristic()}"


# -- subcommands ------------------------------------------------------------


def cmd_info(args) -> None:
    k = _load(args.file)
    lines = [
        f"dim {k.dim}",
        "counts " + " ".join(map(str, k.counts)),
        f"euler {_euler_line(k)}",
        f"coords {'none' if k.coords is None else k.coords.shape[1]}",
    ]
    _write(args, "\n".join(lines) + "\n")


def cmd_validate(args) -> None:
    try:
        k = parse_complex(_read_text(args.file), check=False)
    except ParseError as exc:
        raise _CliFailure(EXIT_PARSE, f"{args.file}: {exc}") from exc
    report = validate(k)
    _write(args, str(report) + "\n")
    if not report.ok:
        raise _CliFailure(EXIT_INVALID, f"{args.file}: invalid complex")


def cmd_euler(args) -> None:
    _write(args, _euler_line(_load(args.file)) + "\n")


def cmd_hasse(args) -> None:
    _write(args, emit_hasse(assemble_hasse(_load(args.file))))


def cmd_boundary(args) -> None:
    k = _load(args.file)
    _check_p(args.p, 1, k.dim, "boundary")
    _write(args, emit_matrix(k.boundary_matrix(args.p), [f"boundary p={args.p}"]))


def cmd_coboundary(args) -> None:
    k = _load(args.file)
    _check_p(args.p, 0, k.dim - 1, "coboundary")
    _write(args, emit_matrix(k.coboundary_matrix(args.p), [f"coboundary p={args.p}"]))


def cmd_laplacian(args) -> None:
    k = _load(args.file)
    _check_p(args.p, 0, k.dim, "laplacian")
    if args.gram:
        try:
            g = parse_gram(_read_text(args.gram), k)
        except ParseError as exc:
            raise _CliFailure(EXIT_PARSE, f"{args.gram}: {exc}") from exc
    else:
        g = GramStructure.trivial(k)
    lap = laplace_derham(k, g, args.p, allow_dense=True)
    _write(args, emit_matrix(lap, [f"laplacian p={args.p} gram={g.kind}"]))


def _trace_to_stderr(label: str, cls) -> None:
    for name, vec in cls.trace:
        sys.stderr.write(f"{label}{name}: {' '.join(str(int(x)) for x in vec)}\n")


def cmd_split(args) -> None:
    k = _load(args.file)
    try:
        plane = Hyperplane.parse(args.plane)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not args.eps > 0:
        raise UsageError("--eps must be positive")
    refined, zeta, cls = split_complex(k, plane, args.eps)
    _trace_to_stderr("", cls)
    for w in zeta.warnings:
        sys.stderr.write(f"warning: {w}\n")
    if args.classes:
        try:
            with open(args.classes, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(emit_classification(cls.c))
        except OSError as exc:
            raise _CliFailure(EXIT_IO, f"cannot write {args.classes}: {exc.strerror or exc}") from exc
    _write(args, emit_complex(refined, [f"split by plane {plane.format()} eps={args.eps!r}"]))


def cmd_refine(args) -> None:
    k = _load(args.file)
    try:
        steps = parse_script(_read_text(args.script))
    except ParseError as exc:
        raise _CliFailure(EXIT_PARSE, f"{args.script}: {exc}") from exc
    for n, step in enumerate(steps, 1):
        if isinstance(step, SplitDescriptor):
            sys.stderr.write(f"step {n}: {emit_descriptor(step)}\n")
            k = make(k, step)
        else:
            assert isinstance(step, PlaneStep)
            sys.stderr.write(f"step {n}: plane {step.plane.format()}\n")
            k, zeta, cls = split_complex(k, step.plane, step.eps)
            _trace_to_stderr(f"step {n} ", cls)
            for w in zeta.warnings:
                sys.stderr.write(f"warning: {w}\n")
        sys.stderr.write(f"step {n}: counts {' '.join(map(str, k.counts))}\n")
    _write(args, emit_complex(k))


COMMANDS = {
    "info": (cmd_info, "print dimension, cell counts and Euler characteristic"),
    "validate": (cmd_validate, "check sizes, incidence signs and boundary of boundary"),
    "euler": (cmd_euler, "print the alternating sum of cell counts"),
    "hasse": (cmd_hasse, "emit the Hasse matrix"),
    "boundary": (cmd_boundary, "emit the boundary matrix on p-chains"),
    "coboundary": (cmd_coboundary, "emit the coboundary matrix on p-cochains"),
    "laplacian": (cmd_laplacian, "emit the Laplace-de Rham matrix on p-cochains"),
    "split": (cmd_split, "split the complex by a hyperplane"),
    "refine": (cmd_refine, "apply a refinement script"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cellchain", description="Chain complexes with measured incidence.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (func, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("file", help="complex document ('-' for stdin)")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.set_defaults(func=func)
        if name in ("boundary", "coboundary", "laplacian"):
            sp.add_argument("-p", type=int, required=True, help="cell dimension")
        if name == "laplacian":
            sp.add_argument("--gram", help="Gram file (default: identity)")
        if name == "split":
            sp.add_argument("--plane", required=True, help="hyperplane as h1,...,hd,b")
            sp.add_argument("--eps", type=float, default=1e-8, help="classification tolerance")
            sp.add_argument("--classes", help="write final class vectors here")
        if name == "refine":
            sp.add_argument("--script", required=True, help="refinement script")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    positional = [a for a in argv if not a.startswith("-")]
    if positional and positional[0] not in COMMANDS:
        sys.stderr.write(
            f"cellchain: unknown command {positional[0]!r} (choose from {', '.join(COMMANDS)})\n"
        )
        return EXIT_UNKNOWN_COMMAND
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"cellchain: {exc}\n")
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except _CliFailure as exc:
        sys.stderr.write(f"cellchain: {exc}\n")
        return exc.code
    except UsageError as exc:
        sys.stderr.write(f"cellchain: {exc}\n")
        return EXIT_USAGE
    except InvalidComplexError as exc:
        sys.stderr.write(f"cellchain: {exc}\n")
        return EXIT_INVALID
    except (SplitError, MakeRejected, InvalidDescriptorError, SingularGramError) as exc:
        sys.stderr.write(f"cellchain: {exc}\n")
        return EXIT_ALGORITHM
    except OSError as exc:
        sys.stderr.write(f"cellchain: {exc}\n")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
