"""C/C++ lexer, vulnerability-candidate detection, and lightweight slicing.

The lexer is lossless: concatenating the text of every token (whitespace
and comments included) reproduces the input exactly.  Candidate detection
runs over the token stream with four rules:

* API -- an identifier from the risky-API list immediately followed by ``(``.
* AU  -- an identifier immediately followed by ``[`` (subscript or array
  declarator).
* PU  -- unary ``*`` applied to an identifier (dereference or pointer
  declarator), or an ``->`` member access.
* AE  -- a binary ``+ - * / %`` whose neighboring operands are identifiers
  or numbers, outside array subscripts.

Slicing is an intra-procedural identifier-sharing approximation: starting
from the candidate's focus identifier, lines are pulled in for a bounded
number of def-use hops.  This is a declared stand-in for dependence-graph
slicing, good enough to produce realistic classifier inputs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import Kind
from .errors import LexError


class TokenClass(str, Enum):
    IDENTIFIER = "identifier"
    KEYWORD = "keyword"
    NUMBER = "number"
    STRING = "string-literal"
    CHAR = "char-literal"
    OPERATOR = "operator"
    PUNCTUATION = "punctuation"
    COMMENT = "comment"
    WHITESPACE = "whitespace"
    DIRECTIVE = "directive"  # whole preprocessor line, never yields candidates


@dataclass(frozen=True, slots=True)
class Token:
    text: str
    cls: TokenClass
    line: int
    column: int


C_KEYWORDS = frozenset(
    """
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary bool true false class namespace new delete
    template typename using public private protected virtual operator this
    """.split()
)

# Classic risky C library functions; the API candidate rule matches calls
# to these names.  User-overridable via SliceConfig / load_api_list.
DEFAULT_API_LIST = frozenset(
    """
    strcpy strncpy strcat strncat sprintf vsprintf snprintf gets fgets
    memcpy memmove memset bcopy bzero alloca scanf sscanf fscanf vscanf
    vsscanf vfscanf getwd realpath strtok strlen printf fprintf vprintf
    malloc calloc realloc free system popen execl execlp execle execv
    execvp execve atoi atol getenv read recv recvfrom setbuf getchar
    """.split()
)


def load_api_list(path: str | Path) -> frozenset[str]:
    """Read a risky-function list: one name per line, '#' starts a comment."""
    names = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        name = raw.split("#", 1)[0].strip()
        if name:
            names.append(name)
    return frozenset(names)


@dataclass(frozen=True)
class SliceConfig:
    api_list: frozenset[str] = DEFAULT_API_LIST
    max_slice_lines: int = 30
    def_use_hops: int = 2

    def __post_init__(self):
        if self.max_slice_lines < 1:
            raise ValueError("max_slice_lines must be >= 1")
        if self.def_use_hops < 0:
            raise ValueError("def_use_hops must be >= 0")


@dataclass(frozen=True, slots=True)
class Candidate:
    kind: Kind
    line: int
    focus: str
    span: tuple[int, int]
    column: int = field(default=0, compare=False)


# Longest-match-first token table.  A directive consumes the whole logical
# line including backslash continuations; it only fires at line start,
# which the lexer enforces before using the match.
_TOKEN_RE = re.compile(
    r"""
    (?P<directive>\#(?:[^\n\\]|\\\r?\n|\\.)*)
  | (?P<comment>//[^\n]*|/\*(?:[^*]|\*(?!/))*\*/)
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<char>'(?:\\.|[^'\\\n])+')
  | (?P<number>(?:0[xX][0-9a-fA-F]+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)[uUlLfF]*)
  | (?P<identifier>[A-Za-z_]\w*)
  | (?P<operator><<=|>>=|\.\.\.|->|\+\+|--|<<|>>|<=|>=|==|!=|&&|\|\||\+=|-=|\*=|/=|%=|&=|\|=|\^=|[-+*/%=<>!&|^~?.:])
  | (?P<punctuation>[()\[\]{};,])
  | (?P<whitespace>\s+)
    """,
    re.VERBOSE,
)

_GROUP_CLS = {
    "directive": TokenClass.DIRECTIVE,
    "comment": TokenClass.COMMENT,
    "string": TokenClass.STRING,
    "char": TokenClass.CHAR,
    "number": TokenClass.NUMBER,
    "identifier": TokenClass.IDENTIFIER,
    "operator": TokenClass.OPERATOR,
    "punctuation": TokenClass.PUNCTUATION,
    "whitespace": TokenClass.WHITESPACE,
}


def lex(source: str) -> list[Token]:
    """Tokenize C/C++ source losslessly; raises LexError with a line number."""
    tokens: list[Token] = []
    pos = 0
    line = 1
    col = 1
    at_line_start = True  # only whitespace seen since the last newline
    n = len(source)
    while pos < n:
        # the regex would fall through to '/' '*' operators here
        if source.startswith("/*", pos) and source.find("*/", pos + 2) == -1:
            raise LexError("unterminated block comment", line)
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            ch = source[pos]
            if ch == '"':
                raise LexError("unterminated string literal", line)
            if ch == "'":
                raise LexError("unterminated character literal", line)
            raise LexError(f"unexpected character {ch!r}", line)
        if m.lastgroup == "directive" and not at_line_start:
            raise LexError("unexpected character '#'", line)
        text = m.group()
        cls = _GROUP_CLS[m.lastgroup]
        if cls is TokenClass.IDENTIFIER and text in C_KEYWORDS:
            cls = TokenClass.KEYWORD
        tokens.append(Token(text, cls, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
            at_line_start = cls is TokenClass.WHITESPACE
        else:
            col += len(text)
            if cls is not TokenClass.WHITESPACE:
                at_line_start = False
        pos = m.end()
    return tokens


_INSIGNIFICANT = {TokenClass.WHITESPACE, TokenClass.COMMENT, TokenClass.DIRECTIVE}


def significant(tokens: list[Token]) -> list[Token]:
    """Drop whitespace, comments, and preprocessor directives."""
    return [t for t in tokens if t.cls not in _INSIGNIFICANT]


_AE_OPS = {"+", "-", "*", "/", "%"}
_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="}
# token classes that can end an expression; an operator after one of these
# is in binary position
_OPERAND_END = {TokenClass.IDENTIFIER, TokenClass.NUMBER, TokenClass.STRING, TokenClass.CHAR}
_KIND_PRECEDENCE = {Kind.API: 0, Kind.AU: 1, Kind.PU: 2, Kind.AE: 3}


def _is_binary_position(prev: Token | None) -> bool:
    if prev is None:
        return False
    if prev.cls in _OPERAND_END:
        return True
    return prev.text in (")", "]", "++", "--")


def _matching_close(toks: list[Token], open_idx: int, open_ch: str, close_ch: str) -> int | None:
    depth = 0
    for j in range(open_idx, len(toks)):
        if toks[j].text == open_ch:
            depth += 1
        elif toks[j].text == close_ch:
            depth -= 1
            if depth == 0:
                return j
    return None


def _ae_focus(toks: list[Token], op_idx: int) -> str | None:
    """Focus for an arithmetic site: the assigned variable when the line has
    an assignment before the operator, else the nearest identifier operand."""
    op = toks[op_idx]
    line_start = op_idx
    while line_start > 0 and toks[line_start - 1].line == op.line:
        line_start -= 1
    assign_idx = None
    for j in range(line_start, op_idx):
        if toks[j].cls is TokenClass.OPERATOR and toks[j].text in _ASSIGN_OPS:
            assign_idx = j
    if assign_idx is not None:
        stmt_start = line_start
        for j in range(assign_idx - 1, line_start - 1, -1):
            if toks[j].text == ";":
                stmt_start = j + 1
                break
        for j in range(stmt_start, assign_idx):
            if toks[j].cls is TokenClass.IDENTIFIER:
                return toks[j].text
        return None
    prev = toks[op_idx - 1] if op_idx > 0 else None
    nxt = toks[op_idx + 1] if op_idx + 1 < len(toks) else None
    if prev is not None and prev.cls is TokenClass.IDENTIFIER and prev.line == op.line:
        return prev.text
    if nxt is not None and nxt.cls is TokenClass.IDENTIFIER and nxt.line == op.line:
        return nxt.text
    return None


def extract_candidates(source: str, cfg: SliceConfig | None = None) -> list[Candidate]:
    """Detect API/AU/PU/AE candidate sites in the token stream.

    Each site yields at most one candidate; when two rules claim the same
    (line, column) the precedence API > AU > PU > AE wins.  Output is
    sorted by (line, column).
    """
    cfg = cfg or SliceConfig()
    toks = significant(lex(source))
    found: dict[tuple[int, int], Candidate] = {}

    def claim(kind: Kind, tok: Token, focus: str, span: tuple[int, int]):
        site = (tok.line, tok.column)
        cand = Candidate(kind=kind, line=tok.line, focus=focus, span=span, column=tok.column)
        held = found.get(site)
        if held is None or _KIND_PRECEDENCE[kind] < _KIND_PRECEDENCE[held.kind]:
            found[site] = cand

    bracket_depth = 0
    for i, tok in enumerate(toks):
        prev = toks[i - 1] if i > 0 else None
        nxt = toks[i + 1] if i + 1 < len(toks) else None

        if tok.text == "[":
            bracket_depth += 1
        elif tok.text == "]":
            bracket_depth = max(0, bracket_depth - 1)

        if tok.cls is TokenClass.IDENTIFIER and nxt is not None:
            if nxt.text == "(" and tok.text in cfg.api_list:
                close = _matching_close(toks, i + 1, "(", ")")
                end_line = toks[close].line if close is not None else tok.line
                claim(Kind.API, tok, tok.text, (tok.line, end_line))
            elif nxt.text == "[":
                close = _matching_close(toks, i + 1, "[", "]")
                end_line = toks[close].line if close is not None else tok.line
                claim(Kind.AU, tok, tok.text, (tok.line, end_line))

        elif tok.cls is TokenClass.OPERATOR:
            if tok.text == "->" and prev is not None and prev.cls is TokenClass.IDENTIFIER:
                claim(Kind.PU, tok, prev.text, (tok.line, tok.line))
            elif tok.text == "*" and not _is_binary_position(prev):
                # dereference or pointer declarator; collapse a ** run to
                # one candidate at the first star
                if prev is not None and prev.text == "*":
                    continue
                j = i
                while j < len(toks) and toks[j].text == "*":
                    j += 1
                if j < len(toks) and toks[j].cls is TokenClass.IDENTIFIER:
                    claim(Kind.PU, tok, toks[j].text, (tok.line, tok.line))
            elif (
                tok.text in _AE_OPS
                and bracket_depth == 0
                and _is_binary_position(prev)
                and prev is not None
                and prev.cls in (TokenClass.IDENTIFIER, TokenClass.NUMBER)
                and nxt is not None
                and nxt.cls in (TokenClass.IDENTIFIER, TokenClass.NUMBER)
            ):
                focus = _ae_focus(toks, i)
                if focus is not None:
                    claim(Kind.AE, tok, focus, (tok.line, tok.line))

    return sorted(found.values(), key=lambda c: (c.line, c.column))


def _function_regions(tokens: list[Token]) -> list[tuple[int, int]]:
    """(start line, end line) of each top-level ``name(args) {...}`` block."""
    toks = significant(tokens)
    regions = []
    depth = 0
    i = 0
    while i < len(toks):
        tok = toks[i]
        if tok.text == "{":
            depth += 1
        elif tok.text == "}":
            depth = max(0, depth - 1)
        elif depth == 0 and tok.cls is TokenClass.IDENTIFIER and i + 1 < len(toks) and toks[i + 1].text == "(":
            close = _matching_close(toks, i + 1, "(", ")")
            if close is not None and close + 1 < len(toks) and toks[close + 1].text == "{":
                end = _matching_close(toks, close + 1, "{", "}")
                if end is not None:
                    regions.append((tok.line, toks[end].line))
                    # resume at the opening brace so depth tracking sees it
                    i = close
        i += 1
    return regions


def build_slice(source: str, candidate: Candidate, cfg: SliceConfig | None = None) -> str:
    """Assemble the candidate line plus def-use-related lines, in order.

    Related lines are found by identifier sharing: hop 1 pulls in every
    identifier on a line mentioning the focus, hop 2 expands once more,
    and so on up to cfg.def_use_hops.  The result is truncated to
    cfg.max_slice_lines lines centered on the candidate line.
    """
    cfg = cfg or SliceConfig()
    tokens = lex(source)
    lines = source.split("\n")
    if not 1 <= candidate.line <= len(lines):
        raise ValueError(f"candidate line {candidate.line} out of range 1..{len(lines)}")

    lo, hi = 1, len(lines)
    for start, end in _function_regions(tokens):
        if start <= candidate.line <= end:
            lo, hi = start, end
            break

    line_ids: dict[int, set[str]] = {n: set() for n in range(lo, hi + 1)}
    for tok in tokens:
        if tok.cls is TokenClass.IDENTIFIER and lo <= tok.line <= hi:
            line_ids[tok.line].add(tok.text)

    # hop 0: the focus plus everything co-located with it on its line
    reachable = {candidate.focus} | line_ids.get(candidate.line, set())
    selected = {candidate.line}
    for _ in range(cfg.def_use_hops):
        hit = {n for n, ids in line_ids.items() if ids & reachable}
        new_selected = selected | hit
        new_reachable = reachable.union(*(line_ids[n] for n in hit)) if hit else reachable
        if new_selected == selected and new_reachable == reachable:
            break
        selected, reachable = new_selected, new_reachable

    ordered = sorted(selected)
    if len(ordered) > cfg.max_slice_lines:
        center = ordered.index(candidate.line)
        start = min(max(center - (cfg.max_slice_lines - 1) // 2, 0),
                    len(ordered) - cfg.max_slice_lines)
        ordered = ordered[start:start + cfg.max_slice_lines]
    return "\n".join(lines[n - 1] for n in ordered)
