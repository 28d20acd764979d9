"""Source file handling and tokenization for the Verilog-2005 subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, UnsupportedConstructError


@dataclass
class SourceFile:
    """A raw RTL source file plus a line-start index for position reporting."""

    path: str
    text: str
    line_index: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.line_index:
            offsets = [0]
            for i, ch in enumerate(self.text):
                if ch == "\n":
                    offsets.append(i + 1)
            self.line_index = offsets

    @classmethod
    def read(cls, path) -> "SourceFile":
        p = Path(path)
        return cls(path=str(p), text=p.read_text(encoding="utf-8"))

    def loc(self) -> int:
        """Number of non-blank lines."""
        return sum(1 for line in self.text.splitlines() if line.strip())


# Reserved words the parser understands.
KEYWORDS = {
    "module", "endmodule", "input", "output", "inout", "wire", "reg",
    "parameter", "localparam", "assign", "always", "begin", "end",
    "if", "else", "case", "casez", "casex", "endcase", "default",
    "posedge", "negedge", "or",
}

# Reserved words we recognize but deliberately exclude from the subset.
UNSUPPORTED_KEYWORDS = {
    "generate", "endgenerate", "genvar", "function", "endfunction",
    "task", "endtask", "initial", "for", "while", "repeat", "forever",
    "integer", "real", "realtime", "time", "signed", "unsigned",
    "specify", "endspecify", "primitive", "endprimitive", "fork", "join",
    "wait", "force", "release", "deassign", "defparam", "event",
    "tri", "tri0", "tri1", "triand", "trior", "supply0", "supply1",
    "wand", "wor", "and", "nand", "nor", "xor", "xnor", "not", "buf",
    "bufif0", "bufif1", "notif0", "notif1", "pulldown", "pullup",
    "casei", "table", "endtable", "disable", "edge", "scalared", "vectored",
    "small", "medium", "large", "macromodule", "cell", "config", "endconfig",
}

_OPS3 = ("===", "!==", "<<<", ">>>", "|->", "|=>")
_OPS2 = ("==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "~^", "^~",
         "~&", "~|", "+:", "-:", "**", "##")
_OPS1 = "+-*/%&|^~!<>=?:;,.()[]{}@#"


@dataclass
class Token:
    kind: str  # 'ident' | 'number' | 'kw' | 'op' | 'sysname' | 'string' | 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str, path: str = "<input>", sva: bool = False) -> list[Token]:
    """Tokenize source text; raises ParseError on characters outside the subset.

    With sva=False the SVA-only operators (##, |->, |=>) are still lexed but the
    RTL parser rejects them; keeping one lexer avoids drift between the two
    front ends.
    """
    toks: list[Token] = []
    i = 0
    n = len(text)
    line = 1
    col = 1

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if ch == "/" and text[i:i + 2] == "//":
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if ch == "/" and text[i:i + 2] == "/*":
            start_line, start_col = line, col
            advance(2)
            while i < n and text[i:i + 2] != "*/":
                advance(1)
            if i >= n:
                raise ParseError("unterminated block comment", path, start_line, start_col)
            advance(2)
            continue
        if ch == "`":
            raise UnsupportedConstructError("preprocessor directive", path, line, col)
        if ch == "\\":
            raise UnsupportedConstructError("escaped identifier", path, line, col)
        if ch == '"':
            raise UnsupportedConstructError("string literal", path, line, col)
        if ch.isalpha() or ch == "_":
            start = i
            start_line, start_col = line, col
            while i < n and (text[i].isalnum() or text[i] in "_$"):
                advance(1)
            word = text[start:i]
            if word in KEYWORDS:
                toks.append(Token("kw", word, start_line, start_col))
            elif word in UNSUPPORTED_KEYWORDS:
                if sva:
                    # property files reuse reserved words (disable iff, ...)
                    toks.append(Token("ident", word, start_line, start_col))
                else:
                    raise UnsupportedConstructError(f"'{word}'", path, start_line, start_col)
            else:
                toks.append(Token("ident", word, start_line, start_col))
            continue
        if ch.isdigit() or (ch == "'" and i + 1 < n):
            start = i
            start_line, start_col = line, col
            while i < n and (text[i].isdigit() or text[i] == "_"):
                advance(1)
            if i < n and text[i] == "'":
                advance(1)
                if i < n and text[i] in "sS":
                    raise UnsupportedConstructError("signed literal", path, start_line, start_col)
                if i >= n or text[i] not in "bBoOdDhH":
                    raise ParseError("malformed based literal", path, start_line, start_col)
                advance(1)
                digits0 = i
                while i < n and (text[i].isalnum() or text[i] in "_?xXzZ"):
                    advance(1)
                if i == digits0:
                    raise ParseError("based literal has no digits", path, start_line, start_col)
                lit = text[start:i]
                if any(c in "xXzZ?" for c in lit.split("'", 1)[1][1:]):
                    raise UnsupportedConstructError("x/z literal digits", path, start_line, start_col)
                toks.append(Token("number", lit, start_line, start_col))
            else:
                if start == i:
                    raise ParseError("malformed literal", path, start_line, start_col)
                toks.append(Token("number", text[start:i], start_line, start_col))
            continue
        if ch == "$":
            start = i
            start_line, start_col = line, col
            advance(1)
            while i < n and (text[i].isalnum() or text[i] == "_"):
                advance(1)
            if i == start + 1:
                raise ParseError("stray '$'", path, start_line, start_col)
            toks.append(Token("sysname", text[start:i], start_line, start_col))
            continue
        matched = False
        for op in _OPS3:
            if text.startswith(op, i):
                toks.append(Token("op", op, line, col))
                advance(3)
                matched = True
                break
        if matched:
            continue
        for op in _OPS2:
            if text.startswith(op, i):
                toks.append(Token("op", op, line, col))
                advance(2)
                matched = True
                break
        if matched:
            continue
        if ch in _OPS1:
            toks.append(Token("op", ch, line, col))
            advance(1)
            continue
        raise ParseError(f"unexpected character {ch!r}", path, line, col)

    toks.append(Token("eof", "", line, col))
    return toks


def parse_literal(text: str) -> tuple[int | None, str, int]:
    """Split a numeric literal into (size or None, base char, value).

    Unsized decimals report base 'd' and size None (32-bit context width).
    """
    if "'" not in text:
        return None, "d", int(text.replace("_", ""))
    size_part, rest = text.split("'", 1)
    base = rest[0].lower()
    digits = rest[1:].replace("_", "")
    radix = {"b": 2, "o": 8, "d": 10, "h": 16}[base]
    value = int(digits, radix)
    size = int(size_part.replace("_", "")) if size_part else None
    if size is not None:
        value &= (1 << size) - 1
    return size, base, value


def render_literal(size: int | None, base: str, value: int) -> str:
    """Render a literal preserving the width/base shape of its source form."""
    if size is None and base == "d":
        return str(value)
    prefix = f"{size}'" if size is not None else "'"
    if base == "b":
        digits = format(value, "b")
    elif base == "o":
        digits = format(value, "o")
    elif base == "h":
        digits = format(value, "x")
    else:
        digits = str(value)
    return f"{prefix}{base}{digits}"


def literal_width(text: str) -> int:
    """Self-determined width of a literal; unsized literals are 32 bits."""
    size, _, _ = parse_literal(text)
    return 32 if size is None else size


def perturb_literal(text: str, delta: int) -> str:
    """Add delta to a literal's value, wrapping within its declared width."""
    size, base, value = parse_literal(text)
    width = 32 if size is None else size
    mask = (1 << width) - 1
    return render_literal(size, base, (value + delta) & mask)
