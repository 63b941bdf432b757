"""Reader and writer for ``.bench`` interferometer descriptions.

A bench file is line oriented::

    # comment: '#' plus a space, in column 1 or after whitespace
    lambda = 800nm
    f = 50cm
    l = 1.5mm
    input = gaussian(w=0.5mm)
    phase = pi
    grid.n = 4096
    grid.half_extent = 6mm

    arm upper:
      xbench(l=1.5mm)
      pbench(f=50cm, l=1.5mm)
    arm lower:
      pbench(f=50cm, l=1.5mm)
      xbench(l=1.5mm)

Lengths need a unit suffix (nm, um, mm, cm, m), angles need ``rad``/``deg``
or a ``pi`` form (``pi``, ``pi/2``, ``3*pi/4``), ``hbar`` takes ``Js``.
Unknown keys, arguments or elements are errors.  See ``docs/bench_format.md``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources

from .elements import (
    AxisFlip,
    ElementPipeline,
    HardAperture,
    LensFT,
    LinearAttenuator,
    MomentumBench,
    PhaseShifter,
    PositionBench,
)
from .errors import OpticsError
from .field import DEFAULT_GRID, DEFAULT_PARAMS, BenchParams, ComplexField, GridSpec, gaussian_input
from .interferometer import InterferometerSpec

LENGTH_UNITS = {"nm": "1e-9", "um": "1e-6", "mm": "1e-3", "cm": "1e-2", "m": "1"}
ANGLE_UNITS = ("rad", "deg")
ACTION_UNITS = ("Js",)
ARM_NAMES = ("upper", "lower")
DEFAULT_HBAR = DEFAULT_PARAMS.hbar

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?", re.ASCII)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*", re.ASCII)
_UNIT = re.compile(r"[A-Za-z]+")
_PUNCT = set("=(),[]:/*-+")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    kind: str  # "syntax" | "semantic" | "unit"
    message: str

    def __str__(self):
        return f"{self.line}:{self.column}: {self.kind} error: {self.message}"


class BenchParseError(OpticsError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class GaussianInput:
    w: float
    kind: str = "gaussian"


@dataclass(frozen=True)
class BenchDocument:
    params: BenchParams
    input_spec: GaussianInput
    arms: dict = field(default_factory=dict)
    phase: float = math.pi
    grid: GridSpec = DEFAULT_GRID

    def to_interferometer(self) -> InterferometerSpec:
        return InterferometerSpec(self.arms["upper"], self.arms["lower"], self.phase)

    def input_field(self, grid: GridSpec | None = None) -> ComplexField:
        return gaussian_input(grid or self.grid, self.input_spec.w)


def default_document() -> BenchDocument:
    p = DEFAULT_PARAMS
    x = PositionBench(p.l)
    mom = MomentumBench.from_params(p)
    return BenchDocument(
        params=p,
        input_spec=GaussianInput(p.w),
        arms={"upper": ElementPipeline((x, mom)), "lower": ElementPipeline((mom, x))},
        phase=math.pi,
        grid=DEFAULT_GRID,
    )


def default_bench_text() -> str:
    return resources.files("xpcomm").joinpath("data/paper_default.bench").read_text(encoding="utf-8")


# ---------------------------------------------------------------- lexing


@dataclass
class Token:
    kind: str  # "num" | "qty" | "ident" | "punct" | "eol"
    text: str
    col: int
    unit: str = ""


class _LineError(Exception):
    def __init__(self, col, kind, message):
        self.col = col
        self.kind = kind
        self.message = message


def _tokenize(text: str, col0: int) -> list[Token]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
            continue
        col = col0 + i
        m = _NUMBER.match(text, i)
        if m and (ch.isdigit() or ch == "."):
            i = m.end()
            u = _UNIT.match(text, i)
            if u:
                tokens.append(Token("qty", m.group(0), col, u.group(0)))
                i = u.end()
            else:
                tokens.append(Token("num", m.group(0), col))
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(Token("ident", m.group(0), col))
            i = m.end()
            continue
        if ch in _PUNCT:
            tokens.append(Token("punct", ch, col))
            i += 1
            continue
        raise _LineError(col, "syntax", f"unexpected character {ch!r}")
    tokens.append(Token("eol", "", col0 + n))
    return tokens


def _strip_comment(line: str) -> str:
    m = re.search(r"[ \t]#(?=[ \t#]|$)", line)
    return line[: m.start()] if m else line


# ---------------------------------------------------------------- line parser


def _decimal_value(text: str, scale: str = "1") -> float:
    try:
        value = float(Decimal(text) * Decimal(scale))
    except (InvalidOperation, ArithmeticError, ValueError):
        value = math.inf
    return value


class _Line:
    """Recursive-descent parser over the tokens of one line."""

    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eol":
            self.pos += 1
        return t

    def fail(self, expected, tok=None):
        tok = tok or self.tok
        found = "end of line" if tok.kind == "eol" else repr(tok.text + tok.unit)
        raise _LineError(tok.col, "syntax", f"expected {expected}, found {found}")

    def punct(self, ch):
        if self.tok.kind == "punct" and self.tok.text == ch:
            return self.advance()
        self.fail(repr(ch))

    def at_punct(self, ch):
        return self.tok.kind == "punct" and self.tok.text == ch

    def ident(self, what="identifier"):
        if self.tok.kind == "ident":
            return self.advance()
        self.fail(what)

    def end(self):
        if self.tok.kind != "eol":
            self.fail("end of line")

    def _sign(self):
        if self.at_punct("-"):
            self.advance()
            return -1.0
        if self.at_punct("+"):
            self.advance()
        return 1.0

    def length(self) -> float:
        sign = self._sign()
        tok = self.tok
        if tok.kind == "num":
            raise _LineError(tok.col, "unit", f"length {tok.text!r} needs a unit suffix (nm, um, mm, cm, m)")
        if tok.kind != "qty":
            self.fail("a length such as 1.5mm")
        if tok.unit not in LENGTH_UNITS:
            raise _LineError(tok.col, "unit", f"unknown length unit {tok.unit!r}")
        self.advance()
        return sign * _decimal_value(tok.text, LENGTH_UNITS[tok.unit])

    def angle(self) -> float:
        sign = self._sign()
        tok = self.tok
        if tok.kind == "qty":
            if tok.unit not in ANGLE_UNITS:
                raise _LineError(tok.col, "unit", f"unknown angle unit {tok.unit!r}")
            self.advance()
            value = _decimal_value(tok.text)
            return sign * (value if tok.unit == "rad" else value * math.pi / 180.0)
        coef = 1.0
        if tok.kind == "num":
            self.advance()
            if not self.at_punct("*"):
                raise _LineError(tok.col, "unit", f"angle {tok.text!r} needs a unit (rad, deg) or a pi factor")
            self.advance()
            coef = _decimal_value(tok.text)
        t = self.tok
        if not (t.kind == "ident" and t.text == "pi"):
            self.fail("an angle such as pi/2 or 1.57rad")
        self.advance()
        value = coef * math.pi
        if self.at_punct("/"):
            self.advance()
            d = self.tok
            if d.kind != "num":
                self.fail("a number after '/'")
            self.advance()
            denom = _decimal_value(d.text)
            if denom == 0:
                raise _LineError(d.col, "semantic", "division by zero in angle")
            value /= denom
        return sign * value

    def action(self) -> float:
        tok = self.tok
        if tok.kind == "num":
            raise _LineError(tok.col, "unit", "hbar needs the unit suffix Js")
        if tok.kind != "qty":
            self.fail("an action such as 1.054571817e-34Js")
        if tok.unit not in ACTION_UNITS:
            raise _LineError(tok.col, "unit", f"unknown action unit {tok.unit!r}")
        self.advance()
        return _decimal_value(tok.text)

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "num" or not tok.text.isdigit():
            self.fail("an integer")
        self.advance()
        try:
            return int(tok.text)
        except ValueError:
            raise _LineError(tok.col, "semantic", "integer too large") from None

    def interval(self):
        self.punct("[")
        lo = self.length()
        self.punct(",")
        hi = self.length()
        self.punct("]")
        return (lo, hi)

    def word(self) -> str:
        return self.ident("a word").text

    def call(self, signatures):
        """``name(arg=value, ...)``; ``signatures`` maps name -> {arg: reader}."""
        name_tok = self.ident("an element name")
        if name_tok.text not in signatures:
            raise _LineError(
                name_tok.col, "syntax",
                f"unknown name {name_tok.text!r}; expected one of {', '.join(sorted(signatures))}",
            )
        readers = signatures[name_tok.text]
        self.punct("(")
        args = {}
        if not self.at_punct(")"):
            while True:
                key = self.ident("an argument name")
                if key.text not in readers:
                    allowed = ", ".join(readers) or "no arguments"
                    raise _LineError(key.col, "syntax", f"unknown argument {key.text!r} (allowed: {allowed})")
                if key.text in args:
                    raise _LineError(key.col, "semantic", f"duplicate argument {key.text!r}")
                self.punct("=")
                args[key.text] = (readers[key.text](self), key.col)
                if self.at_punct(","):
                    self.advance()
                    continue
                break
        self.punct(")")
        return name_tok, args


_ELEMENT_SIGNATURES = {
    "xbench": {"l": _Line.length, "edge": _Line.word},
    "pbench": {"f": _Line.length, "l": _Line.length, "edge": _Line.word},
    "phase": {"region": _Line.interval, "shift": _Line.angle},
    "atten": {"l": _Line.length, "edge": _Line.word},
    "aperture": {"l": _Line.length},
    "lens": {"f": _Line.length},
    "flip": {},
}
_ELEMENT_REQUIRED = {
    "xbench": ("l",),
    "pbench": ("f", "l"),
    "phase": ("region", "shift"),
    "atten": ("l",),
    "aperture": ("l",),
    "lens": ("f",),
    "flip": (),
}
_INPUT_SIGNATURES = {"gaussian": {"w": _Line.length}}

_KEYS = {
    "lambda": _Line.length,
    "f": _Line.length,
    "l": _Line.length,
    "hbar": _Line.action,
    "phase": _Line.angle,
    "grid.n": _Line.integer,
    "grid.half_extent": _Line.length,
    "input": lambda p: p.call(_INPUT_SIGNATURES),
}
_REQUIRED_KEYS = ("lambda", "f", "l", "input", "phase")


# ---------------------------------------------------------------- document assembly


class _Builder:
    def __init__(self):
        self.diags: list[Diagnostic] = []
        self.values: dict = {}
        self.seen: set = set()
        self.arms: dict = {}
        self.arm_lines: dict = {}
        self.current_arm = None

    def error(self, line, col, kind, message):
        self.diags.append(Diagnostic(line, col, kind, message))

    def feed(self, lineno: int, raw: str):
        if not raw.strip():
            return
        if raw[0] == "#":
            # "#key = ..." is a typo, not a comment
            if len(raw) > 1 and raw[1] not in " \t#":
                self.error(lineno, 2, "syntax", "'#' must be followed by a space to start a comment")
            return
        body = _strip_comment(raw)
        stripped = body.lstrip(" \t")
        indent = len(body) - len(stripped)
        if not stripped:
            if raw.lstrip(" \t").startswith("#"):
                self.error(lineno, indent + 1, "syntax", "comments must start in column 1")
            return
        tokens = _tokenize(stripped, indent + 1)
        p = _Line(tokens)
        if indent:
            self._element(lineno, p)
        elif tokens[0].kind == "ident" and tokens[0].text == "arm":
            self._arm_header(lineno, p)
        else:
            self.current_arm = None
            self._key(lineno, p)

    def _arm_header(self, lineno, p):
        p.advance()
        name = p.ident("an arm name")
        p.punct(":")
        p.end()
        if name.text not in ARM_NAMES:
            self.current_arm = None
            raise _LineError(name.col, "semantic", f"arm must be named 'upper' or 'lower', got {name.text!r}")
        if name.text in self.arms:
            self.current_arm = None
            raise _LineError(name.col, "semantic", f"duplicate arm {name.text!r}")
        self.arms[name.text] = []
        self.arm_lines[name.text] = lineno
        self.current_arm = name.text

    def _element(self, lineno, p):
        if self.current_arm is None:
            raise _LineError(p.tok.col, "syntax", "indented element outside an 'arm <name>:' block")
        name, args = p.call(_ELEMENT_SIGNATURES)
        p.end()
        for req in _ELEMENT_REQUIRED[name.text]:
            if req not in args:
                raise _LineError(name.col, "syntax", f"{name.text}() requires argument {req!r}")
        self.arms[self.current_arm].append((lineno, name, args))

    def _key(self, lineno, p):
        key = p.ident("a key")
        if key.text not in _KEYS:
            raise _LineError(key.col, "syntax", f"unknown key {key.text!r}; expected one of {', '.join(_KEYS)}")
        if key.text in self.seen:
            raise _LineError(key.col, "semantic", f"duplicate key {key.text!r}")
        self.seen.add(key.text)
        p.punct("=")
        value = _KEYS[key.text](p)
        p.end()
        self.values[key.text] = (value, lineno, key.col)

    # -- semantic pass

    def _positive(self, name, value, line, col):
        if not (math.isfinite(value) and value > 0):
            self.error(line, col, "semantic", f"{name} must be a positive finite length, got {value!r}")
            return False
        return True

    def finish(self):
        v = self.values
        for key in _REQUIRED_KEYS:
            if key not in self.seen:
                self.error(0, 0, "semantic", f"missing required key {key!r}")
        if len(self.arms) < 2:
            self.error(0, 0, "semantic", "interferometer requires two arms")
        if self.diags or any(k not in v for k in _REQUIRED_KEYS):
            return None

        ok = True
        lam, lam_line, lam_col = v["lambda"]
        f, f_line, f_col = v["f"]
        l, l_line, l_col = v["l"]
        ok &= self._positive("lambda", lam, lam_line, lam_col)
        ok &= self._positive("f", f, f_line, f_col)
        ok &= self._positive("l", l, l_line, l_col)
        hbar, h_line, h_col = v.get("hbar", (DEFAULT_HBAR, 0, 0))
        ok &= self._positive("hbar", hbar, h_line, h_col)
        (kind_tok, in_args), in_line, in_col = v["input"]
        w, w_col = in_args.get("w", (None, in_col))
        if w is None:
            self.error(in_line, in_col, "syntax", "gaussian() requires argument 'w'")
            return None
        ok &= self._positive("w", w, in_line, w_col)
        phase, ph_line, ph_col = v["phase"]
        if not math.isfinite(phase):
            self.error(ph_line, ph_col, "semantic", "phase must be finite")
            ok = False

        n, n_line, n_col = v.get("grid.n", (DEFAULT_GRID.n_points, 0, 0))
        he, he_line, he_col = v.get("grid.half_extent", (DEFAULT_GRID.half_extent, 0, 0))
        grid = None
        if self._positive("grid.half_extent", he, he_line, he_col):
            try:
                grid = GridSpec(n, he)
            except OpticsError as exc:
                self.error(n_line, n_col, "semantic", str(exc))
        if not ok or grid is None:
            return None
        if l > grid.half_extent:
            self.error(l_line, l_col, "semantic", f"l = {l:g} m exceeds the grid half extent {grid.half_extent:g} m")
        if grid.half_extent < 4 * w:
            self.error(in_line, w_col, "semantic", f"grid half extent {grid.half_extent:g} m is below 4w = {4 * w:g} m")

        arms = {}
        for name, entries in self.arms.items():
            elements = []
            for lineno, name_tok, args in entries:
                try:
                    elements.append(self._make_element(name_tok.text, args, lam, f))
                except _LineError as exc:
                    self.error(lineno, exc.col, exc.kind, exc.message)
                except OpticsError as exc:
                    self.error(lineno, name_tok.col, "semantic", str(exc))
            pipeline = ElementPipeline(elements)
            if pipeline.count(MomentumBench) != 1:
                self.error(self.arm_lines[name], 1, "semantic", f"arm {name!r} must contain exactly one momentum bench (pbench)")
            arms[name] = pipeline
        if self.diags:
            return None
        return BenchDocument(
            params=BenchParams(lambda_=lam, f=f, l=l, w=w, hbar=hbar),
            input_spec=GaussianInput(w),
            arms=arms,
            phase=phase,
            grid=grid,
        )

    def _make_element(self, name, args, lam, f_default):
        a = {k: val for k, (val, _col) in args.items()}
        edge = a.get("edge", "clear")
        if "edge" in args and edge not in ("clear", "opaque"):
            raise _LineError(args["edge"][1], "semantic", f"edge must be 'clear' or 'opaque', got {edge!r}")
        for key in ("l", "f"):
            if key in a and not (math.isfinite(a[key]) and a[key] > 0):
                raise _LineError(args[key][1], "semantic", f"{key} must be a positive finite length")
        if name == "xbench":
            return PositionBench(a["l"], edge)
        if name == "pbench":
            return MomentumBench(lam, a["f"], a["l"], edge)
        if name == "atten":
            return LinearAttenuator(a["l"], edge)
        if name == "aperture":
            return HardAperture(a["l"])
        if name == "lens":
            return LensFT(lam, a["f"])
        if name == "flip":
            return AxisFlip()
        lo, hi = a["region"]
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise _LineError(args["region"][1], "semantic", "phase region must be a finite interval [lo, hi] with lo <= hi")
        if not math.isfinite(a["shift"]):
            raise _LineError(args["shift"][1], "semantic", "shift must be finite")
        return PhaseShifter((lo, hi), a["shift"])


def check_bench(text) -> list[Diagnostic]:
    """Return the diagnostics for ``text`` (empty when it parses)."""
    try:
        parse_bench(text)
    except BenchParseError as exc:
        return exc.diagnostics
    return []


def parse_bench(text) -> BenchDocument:
    """Parse bench text (``str`` or UTF-8 ``bytes``).

    Raises :class:`BenchParseError` carrying every diagnostic found; no other
    exception escapes for any input.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BenchParseError([Diagnostic(1, exc.start + 1, "syntax", "input is not valid UTF-8")]) from None
    b = _Builder()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        try:
            b.feed(lineno, raw)
        except _LineError as exc:
            b.error(lineno, exc.col, exc.kind, exc.message)
    doc = b.finish()
    if doc is None:
        raise BenchParseError(b.diags)
    return doc


# ---------------------------------------------------------------- rendering


def _len(x: float) -> str:
    return f"{x!r}m"


def _ang(x: float) -> str:
    return f"{x!r}rad"


def _edge(e) -> str:
    return "" if e.edge == "clear" else f", edge={e.edge}"


def render_element(e) -> str:
    if isinstance(e, PositionBench):
        return f"xbench(l={_len(e.l)}{_edge(e)})"
    if isinstance(e, MomentumBench):
        return f"pbench(f={_len(e.f)}, l={_len(e.l)}{_edge(e)})"
    if isinstance(e, LinearAttenuator):
        return f"atten(l={_len(e.l)}{_edge(e)})"
    if isinstance(e, HardAperture):
        return f"aperture(l={_len(e.l)})"
    if isinstance(e, LensFT):
        return f"lens(f={_len(e.f)})"
    if isinstance(e, AxisFlip):
        return "flip()"
    if isinstance(e, PhaseShifter):
        lo, hi = e.region
        return f"phase(region=[{_len(lo)}, {_len(hi)}], shift={_ang(e.shift)})"
    raise TypeError(f"cannot render element {e!r}")


def render_bench(doc: BenchDocument) -> str:
    p = doc.params
    lines = [
        f"lambda = {_len(p.lambda_)}",
        f"f = {_len(p.f)}",
        f"l = {_len(p.l)}",
    ]
    if p.hbar != DEFAULT_HBAR:
        lines.append(f"hbar = {p.hbar!r}Js")
    lines += [
        f"input = gaussian(w={_len(doc.input_spec.w)})",
        f"phase = {_ang(doc.phase)}",
        f"grid.n = {doc.grid.n_points}",
        f"grid.half_extent = {_len(doc.grid.half_extent)}",
    ]
    for name, pipeline in doc.arms.items():
        lines.append("")
        lines.append(f"arm {name}:")
        lines.extend(f"  {render_element(e)}" for e in pipeline)
    return "\n".join(lines) + "\n"


def parse_length(text: str) -> float:
    """Parse a standalone length such as ``6mm``; raises :class:`BenchParseError`."""
    try:
        p = _Line(_tokenize(text.strip(), 1))
        value = p.length()
        p.end()
    except _LineError as exc:
        raise BenchParseError([Diagnostic(1, exc.col, exc.kind, exc.message)]) from None
    if not (math.isfinite(value) and value > 0):
        raise BenchParseError([Diagnostic(1, 1, "semantic", "length must be positive and finite")])
    return value
