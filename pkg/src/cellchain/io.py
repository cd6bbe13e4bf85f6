"""Plain-text formats: complex documents, refinement scripts, Gram files.

Complex document::

    % comment
    #format cellcx 1
    #dim 2
    #counts 3 3 1
    #sizes 1
    1.4142135623730951 1 1
    #sizes 2
    0.5
    #incidence 1
    1: -1 +3
    2: -1 +2
    3: -2 +3
    #incidence 2
    1: -1 +2 +3
    #coords
    0 0
    1 0
    1 1

``#incidence p`` lists, for each p-cell, its signed (p-1)-faces by 1-based
ordinal. Omitted ``#sizes`` sections mean unit sizes; ``#coords`` is optional.

Refinement script, one step per line::

    make p=0 target=1 keep=-1 new=+3 t=0.5 vertex=0.5,0.5
    make p=1 target=1 keep=-1,+2 new=+3,-4 boundary=-2,+4 t=0.5 size=0.7071
    plane 1,1,1 eps=1e-8

Gram file::

    #gram diagonal
    #dim 1
    2 2 2
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .complex import CellComplex, validate
from .euler_ops import SplitDescriptor
from .hasse import HasseMatrix, InvalidComplexError, hasse_layout
from .laplace import GRAM_KINDS, GramStructure
from .sparse import SparseMatrix, dumps_triplets, format_real, read_triplets
from .split import DEFAULT_EPS, Hyperplane

FORMAT_TAG = "cellcx 1"


class ParseError(ValueError):
    """Malformed input; ``line`` is 1-based (0 when not tied to a line)."""

    def __init__(self, msg: str, line: int = 0):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


def _tokens(text: str) -> list[tuple[int, str]]:
    out = []
    for n, raw in enumerate(text.splitlines(), 1):
        s = raw.split("%", 1)[0].strip()
        if s:
            out.append((n, s))
    return out


def _floats(s: str, line: int) -> list[float]:
    try:
        return [float(x) for x in s.split()]
    except ValueError as exc:
        raise ParseError(f"expected numbers, got {s!r}", line) from exc


def _int(s: str, line: int) -> int:
    try:
        return int(s)
    except ValueError as exc:
        raise ParseError(f"expected an integer, got {s!r}", line) from exc


def _signed_ordinal(tok: str, line: int) -> tuple[int, int]:
    if not tok or tok[0] not in "+-":
        raise ParseError(f"signed ordinal must start with + or -, got {tok!r}", line)
    o = _int(tok[1:], line)
    if o < 1:
        raise ParseError(f"ordinals are 1-based, got {tok!r}", line)
    return o, (1 if tok[0] == "+" else -1)


def _format_signed(o: int, s: int) -> str:
    return f"{'+' if s > 0 else '-'}{o}"


# -- complex documents ------------------------------------------------------


def _sections(text: str):
    """Yield (header_line, name, args, [(line, content), ...])."""
    head = None
    body: list[tuple[int, str]] = []
    for n, s in _tokens(text):
        if s.startswith("#"):
            if head is not None:
                yield head + (body,)
            parts = s[1:].split()
            if not parts:
                raise ParseError("empty section header", n)
            head, body = (n, parts[0], parts[1:]), []
        else:
            if head is None:
                raise ParseError("content before the first section header", n)
            body.append((n, s))
    if head is not None:
        yield head + (body,)


def parse_complex(text: str, check: bool = True) -> CellComplex:
    """Parse a complex document.

    Args:
        text: the document.
        check: run :func:`cellchain.complex.validate` on the result.

    Raises:
        ParseError: on any syntax or consistency problem, with its line.
        InvalidComplexError: when ``check`` is set and validation fails.
    """
    fmt = dim = counts = None
    sizes: dict[int, list[float]] = {}
    incidence: dict[int, tuple[int, list]] = {}
    coords = None
    for n, name, args, body in _sections(text):
        if name == "format":
            if " ".join(args) != FORMAT_TAG:
                raise ParseError(f"unsupported format {' '.join(args)!r}", n)
            fmt = n
        elif name == "dim":
            if len(args) != 1 or body:
                raise ParseError("#dim takes exactly one value", n)
            dim = _int(args[0], n)
            if dim < 0:
                raise ParseError("negative dimension", n)
        elif name == "counts":
            if dim is None:
                raise ParseError("#counts before #dim", n)
            counts = [_int(a, n) for a in args]
            if len(counts) != dim + 1 or any(c < 0 for c in counts) or body:
                raise ParseError(f"#counts needs {dim + 1} nonnegative integers", n)
        elif name in ("sizes", "incidence"):
            if counts is None:
                raise ParseError(f"#{name} before #counts", n)
            if len(args) != 1:
                raise ParseError(f"#{name} takes a dimension", n)
            p = _int(args[0], n)
            lo = 0 if name == "sizes" else 1
            if not lo <= p <= dim:
                raise ParseError(f"#{name} {p} out of range", n)
            if p in (sizes if name == "sizes" else incidence):
                raise ParseError(f"duplicate #{name} {p}", n)
            if name == "sizes":
                vals = [v for ln, s in body for v in _floats(s, ln)]
                if len(vals) != counts[p]:
                    raise ParseError(f"{len(vals)} sizes for {counts[p]} {p}-cells", n)
                sizes[p] = vals
            else:
                incidence[p] = (n, _parse_incidence(body, p, counts, n))
        elif name == "coords":
            if counts is None:
                raise ParseError("#coords before #counts", n)
            rows = [_floats(s, ln) for ln, s in body]
            if len(rows) != counts[0]:
                raise ParseError(f"{len(rows)} coordinate rows for {counts[0]} vertices", n)
            if rows and len({len(r) for r in rows}) != 1:
                raise ParseError("coordinate rows differ in length", n)
            coords = np.array(rows, dtype=np.float64).reshape(counts[0], -1)
        else:
            raise ParseError(f"unknown section #{name}", n)
    if fmt is None:
        raise ParseError(f"missing '#format {FORMAT_TAG}' header")
    if counts is None:
        raise ParseError("missing #dim/#counts")
    mats = []
    for p in range(1, dim + 1):
        if p not in incidence:
            if counts[p] and counts[p - 1]:
                raise ParseError(f"missing #incidence {p}")
            mats.append(SparseMatrix.zeros(counts[p - 1], counts[p]))
        else:
            mats.append(incidence[p][1])
    size_list = [sizes.get(p, [1.0] * counts[p]) for p in range(dim + 1)]
    if coords is not None and counts[0] == 0:
        coords = None
    k = CellComplex(counts, mats, size_list, coords)
    if check:
        report = validate(k)
        if not report.ok:
            raise InvalidComplexError(report)
    return k


def _parse_incidence(body, p: int, counts, header_line: int) -> SparseMatrix:
    rows, cols, vals = [], [], []
    seen = set()
    for ln, s in body:
        head, colon, rest = s.partition(":")
        if not colon:
            raise ParseError("incidence line needs 'ordinal: faces'", ln)
        j = _int(head.strip(), ln)
        if not 1 <= j <= counts[p]:
            raise ParseError(f"{p}-cell {j} out of range", ln)
        if j in seen:
            raise ParseError(f"{p}-cell {j} listed twice", ln)
        seen.add(j)
        faces = set()
        for tok in rest.split():
            o, sgn = _signed_ordinal(tok, ln)
            if o > counts[p - 1]:
                raise ParseError(f"{p - 1}-cell {o} out of range", ln)
            if o in faces:
                raise ParseError(f"face {o} repeated", ln)
            faces.add(o)
            rows.append(o - 1)
            cols.append(j - 1)
            vals.append(sgn)
    if len(seen) != counts[p]:
        missing = min(set(range(1, counts[p] + 1)) - seen)
        raise ParseError(f"no incidence line for {p}-cell {missing}", header_line)
    return SparseMatrix((counts[p - 1], counts[p]), rows, cols, vals)


def emit_complex(k: CellComplex, comments: Iterable[str] = ()) -> str:
    """Canonical document for ``k``; re-parsing reproduces it exactly."""
    out = [f"% {c}" for c in comments]
    out += [f"#format {FORMAT_TAG}", f"#dim {k.dim}", "#counts " + " ".join(map(str, k.counts))]
    for p in range(1, k.dim + 1):
        out.append(f"#sizes {p}")
        if k.counts[p]:
            out.append(" ".join(format_real(x) for x in k.sizes[p]))
    for p in range(1, k.dim + 1):
        out.append(f"#incidence {p}")
        b = k.B(p - 1)
        for j in range(k.counts[p]):
            faces = sorted(b.column(j).items())
            out.append(" ".join([f"{j + 1}:"] + [_format_signed(i + 1, int(s)) for i, s in faces]))
    if k.coords is not None:
        out.append("#coords")
        out += [" ".join(format_real(x) for x in row) for row in k.coords]
    return "\n".join(out) + "\n"


# -- refinement scripts -----------------------------------------------------


@dataclass(frozen=True)
class PlaneStep:
    plane: Hyperplane
    eps: float = DEFAULT_EPS


def _kv(tokens: list[str], line: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, eq, val = tok.partition("=")
        if not eq:
            raise ParseError(f"expected key=value, got {tok!r}", line)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", line)
        out[key] = val
    return out


def _real(s: str, line: int) -> float:
    try:
        return float(s)
    except ValueError as exc:
        raise ParseError(f"expected a real, got {s!r}", line) from exc


def _signed_list(s: str, line: int) -> tuple[tuple[int, int], ...]:
    return tuple(_signed_ordinal(t, line) for t in s.split(",") if t)


def parse_descriptor(text: str, line: int = 0) -> SplitDescriptor:
    """Parse the key=value part of a ``make`` step."""
    kv = _kv(text.split(), line)
    allowed = {"p", "target", "keep", "new", "boundary", "t", "size", "vertex"}
    unknown = set(kv) - allowed
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}", line)
    for req in ("p", "target", "keep", "new"):
        if req not in kv:
            raise ParseError(f"make step needs {req}=", line)
    vertex = None
    if "vertex" in kv:
        vertex = tuple(_real(x, line) for x in kv["vertex"].split(","))
    try:
        return SplitDescriptor(
            _int(kv["p"], line),
            _int(kv["target"], line),
            _signed_list(kv["keep"], line),
            _signed_list(kv["new"], line),
            _signed_list(kv.get("boundary", ""), line),
            _real(kv.get("t", "0.5"), line),
            _real(kv.get("size", "1"), line),
            vertex,
        )
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), line) from exc


def emit_descriptor(desc: SplitDescriptor) -> str:
    parts = [
        "make",
        f"p={desc.p}",
        f"target={desc.target}",
        "keep=" + ",".join(_format_signed(o, s) for o, s in desc.keep),
        "new=" + ",".join(_format_signed(o, s) for o, s in desc.new),
    ]
    if desc.new_cell_boundary:
        parts.append("boundary=" + ",".join(_format_signed(o, s) for o, s in desc.new_cell_boundary))
    parts += [f"t={format_real(desc.t)}", f"size={format_real(desc.new_cell_size)}"]
    if desc.new_vertex is not None:
        parts.append("vertex=" + ",".join(format_real(x) for x in desc.new_vertex))
    return " ".join(parts)


def parse_script(text: str) -> list[SplitDescriptor | PlaneStep]:
    steps: list[SplitDescriptor | PlaneStep] = []
    for n, s in _tokens(text):
        verb, _, rest = s.partition(" ")
        if verb == "make":
            steps.append(parse_descriptor(rest, n))
        elif verb == "plane":
            toks = rest.split()
            if not toks:
                raise ParseError("plane step needs h1,...,hd,b", n)
            kv = _kv(toks[1:], n)
            if set(kv) - {"eps"}:
                raise ParseError(f"unknown keys {sorted(set(kv) - {'eps'})}", n)
            try:
                plane = Hyperplane.parse(toks[0])
            except ValueError as exc:
                raise ParseError(str(exc), n) from exc
            eps = _real(kv.get("eps", repr(DEFAULT_EPS)), n)
            if not eps > 0:
                raise ParseError("eps must be positive", n)
            steps.append(PlaneStep(plane, eps))
        else:
            raise ParseError(f"unknown step {verb!r}", n)
    return steps


# -- Gram files -------------------------------------------------------------


def parse_gram(text: str, k: CellComplex) -> GramStructure:
    """Parse a Gram file for complex ``k``. Unlisted dimensions get the identity."""
    kind = None
    blocks: dict[int, list[list[float]]] = {}
    for n, name, args, body in _sections(text):
        if name == "gram":
            if len(args) != 1 or args[0] not in GRAM_KINDS:
                raise ParseError(f"#gram takes one of {', '.join(GRAM_KINDS)}", n)
            kind = args[0]
        elif name == "dim":
            if kind is None:
                raise ParseError("#dim before #gram", n)
            if len(args) != 1:
                raise ParseError("#dim takes a dimension", n)
            p = _int(args[0], n)
            if not 0 <= p <= k.dim or p in blocks:
                raise ParseError(f"bad or repeated dimension {p}", n)
            blocks[p] = [_floats(s, ln) for ln, s in body]
        else:
            raise ParseError(f"unknown section #{name}", n)
    if kind is None:
        raise ParseError("missing #gram header")
    try:
        if kind == "trivial":
            if blocks:
                raise ParseError("a trivial Gram file takes no data")
            return GramStructure.trivial(k)
        if kind == "diagonal":
            diags = [None] * (k.dim + 1)
            for p, rows in blocks.items():
                diags[p] = [v for r in rows for v in r]
            return GramStructure.diagonal(k, diags)
        mats = [None] * (k.dim + 1)
        for p, rows in blocks.items():
            mats[p] = np.array(rows, dtype=np.float64)
        return GramStructure.full(k, mats)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


# -- matrix emission --------------------------------------------------------


def emit_matrix(m: SparseMatrix, header: Iterable[str] = ()) -> str:
    return dumps_triplets(m, header)


def emit_hasse(h: HasseMatrix) -> str:
    """Header ``d n m``, row-band offsets, column-band offsets, then triplets."""
    n, m = h.shape
    lines = [
        f"{h.dim} {n} {m}",
        " ".join(map(str, h.row_offsets)),
        " ".join(map(str, h.col_offsets)),
    ]
    return "\n".join(lines) + "\n" + emit_matrix(h.matrix)


def parse_hasse(text: str) -> HasseMatrix:
    lines = text.splitlines()
    if len(lines) < 4:
        raise ParseError("truncated Hasse document")
    try:
        d, n, m = (int(x) for x in lines[0].split())
        roff = tuple(int(x) for x in lines[1].split())
        coff = tuple(int(x) for x in lines[2].split())
        mat = read_triplets(lines[3:])
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    rd, cd = hasse_layout([0] * (d + 1))
    if mat.shape != (n, m) or len(roff) != len(rd) or len(coff) != len(cd):
        raise ParseError("Hasse header disagrees with its body")
    return HasseMatrix(mat, rd, cd, roff, coff, d)


def emit_classification(c: list[np.ndarray]) -> str:
    """Class vectors, one dimension per line."""
    return "".join(" ".join(str(int(x)) for x in v) + "\n" for v in c)
