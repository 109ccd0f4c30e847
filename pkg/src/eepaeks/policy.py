"""Keyword queries: parsing, LSSS compilation and secret reconstruction.

Query grammar (operators case-insensitive, names and values case-sensitive)::

    expr      := and_expr ("OR" and_expr)*
    and_expr  := atom ("AND" atom)*
    atom      := leaf | "(" expr ")" | "THRESHOLD" "(" int ";" expr ("," expr)+ ")"
    leaf      := word ":" word
    word      := bare run of characters other than whitespace and ():;,"
               | double-quoted string with \\" and \\\\ escapes

A chain ``a AND b AND c`` becomes one 3-ary gate; parenthesised groups keep
their own gate.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from eepaeks.groups import ORDER, DecodeError, Reader, TypeTag, Writer, fmul


class PolicyError(ValueError):
    pass


class PolicySyntaxError(PolicyError):
    """Raised by :func:`parse_query`; ``offset`` is a UTF-8 byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


# -- keywords ---------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Keyword:
    name: str
    value: str

    def __post_init__(self):
        if not self.name or not self.value:
            raise PolicyError("keyword name and value must be nonempty")

    def encode(self) -> bytes:
        n = self.name.encode("utf-8")
        v = self.value.encode("utf-8")
        return struct.pack(">I", len(n)) + n + b"\x1f" + struct.pack(">I", len(v)) + v

    @classmethod
    def decode_from(cls, r: Reader) -> "Keyword":
        at = r.pos
        try:
            name = r.take(r.u32()).decode("utf-8")
            if r.take(1) != b"\x1f":
                raise DecodeError("missing keyword separator", r.pos - 1)
            value = r.take(r.u32()).decode("utf-8")
            return cls(name, value)
        except (UnicodeDecodeError, PolicyError) as exc:
            raise DecodeError(f"invalid keyword: {exc}", at) from None

    @classmethod
    def parse(cls, text: str) -> "Keyword":
        name, sep, value = text.partition(":")
        if not sep:
            raise PolicyError(f"keyword {text!r} is not of the form name:value")
        return cls(name.strip(), value.strip())

    def __str__(self) -> str:
        return f"{_quote(self.name)}:{_quote(self.value)}"


class KeywordSet(tuple):
    """Ordered, duplicate-free, nonempty tuple of :class:`Keyword`."""

    def __new__(cls, keywords: Iterable[Keyword]):
        items = tuple(keywords)
        if not items:
            raise PolicyError("keyword set must not be empty")
        if len(set(items)) != len(items):
            raise PolicyError("keyword set contains a duplicate keyword")
        return super().__new__(cls, items)

    @classmethod
    def parse(cls, text: str) -> "KeywordSet":
        """``"name:value,name:value"`` as accepted by ``encrypt --keywords``."""
        return cls(Keyword.parse(part) for part in text.split(",") if part.strip())


# -- AST --------------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    keyword: Keyword


@dataclass(frozen=True)
class Gate:
    threshold: int
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise PolicyError("gate needs at least one child")
        if not 1 <= self.threshold <= len(self.children):
            raise PolicyError(
                f"threshold {self.threshold} out of range [1, {len(self.children)}]"
            )

    @property
    def arity(self) -> int:
        return len(self.children)


PolicyAst = Union[Leaf, Gate]


def leaves(ast: PolicyAst) -> list[Keyword]:
    """Leaf keywords in left-to-right order."""
    if isinstance(ast, Leaf):
        return [ast.keyword]
    out: list[Keyword] = []
    for child in ast.children:
        out.extend(leaves(child))
    return out


def satisfies(ast: PolicyAst, ws: Iterable[Keyword]) -> bool:
    present = ws if isinstance(ws, (set, frozenset)) else set(ws)
    return _sat(ast, present)


def _sat(ast: PolicyAst, present) -> bool:
    if isinstance(ast, Leaf):
        return ast.keyword in present
    hits = 0
    for child in ast.children:
        if _sat(child, present):
            hits += 1
            if hits >= ast.threshold:
                return True
    return False


# -- parsing ------------------------------------------------------------------------

_TOKEN = re.compile(
    r'\s*(?:(?P<punct>[():;,])|(?P<quoted>"(?:[^"\\]|\\.)*")|(?P<word>[^\s():;,"]+)|(?P<bad>\S))'
)
_BARE = re.compile(r'[^\s():;,"]+')


@dataclass
class _Tok:
    kind: str  # punct, word, end
    text: str
    offset: int
    quoted: bool = False


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    byte_pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        start = m.start(m.lastgroup)
        off = byte_pos + len(text[pos:start].encode("utf-8"))
        chunk = m.group(m.lastgroup)
        if m.lastgroup == "bad":
            if chunk == '"':
                raise PolicySyntaxError("unterminated quoted string", off)
            raise PolicySyntaxError(f"unexpected character {chunk!r}", off)
        if m.lastgroup == "quoted":
            body = re.sub(r"\\(.)", r"\1", chunk[1:-1])
            toks.append(_Tok("word", body, off, quoted=True))
        else:
            toks.append(_Tok(m.lastgroup, chunk, off))
        byte_pos = off + len(chunk.encode("utf-8"))
        pos = m.end()
    toks.append(_Tok("end", "", len(text.encode("utf-8"))))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def is_op(self, name: str, tok: _Tok | None = None) -> bool:
        t = tok or self.tok
        return t.kind == "word" and not t.quoted and t.text.upper() == name

    def expect(self, punct: str) -> _Tok:
        t = self.tok
        if t.kind != "punct" or t.text != punct:
            found = "end of query" if t.kind == "end" else repr(t.text)
            raise PolicySyntaxError(f"expected {punct!r}, found {found}", t.offset)
        return self.advance()

    def parse(self) -> PolicyAst:
        if self.tok.kind == "end":
            raise PolicySyntaxError("empty query", 0)
        ast = self.expr()
        if self.tok.kind != "end":
            raise PolicySyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return ast

    def expr(self) -> PolicyAst:
        parts = [self.and_expr()]
        while self.is_op("OR") and self.peek().text != ":":
            self.advance()
            parts.append(self.and_expr())
        return parts[0] if len(parts) == 1 else Gate(1, tuple(parts))

    def and_expr(self) -> PolicyAst:
        parts = [self.atom()]
        while self.is_op("AND") and self.peek().text != ":":
            self.advance()
            parts.append(self.atom())
        return parts[0] if len(parts) == 1 else Gate(len(parts), tuple(parts))

    def atom(self) -> PolicyAst:
        t = self.tok
        if t.kind == "punct" and t.text == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if self.is_op("THRESHOLD") and self.peek().text == "(":
            return self.threshold()
        if t.kind == "word":
            return self.leaf()
        found = "end of query" if t.kind == "end" else repr(t.text)
        raise PolicySyntaxError(f"expected a keyword or '(', found {found}", t.offset)

    def threshold(self) -> PolicyAst:
        self.advance()
        self.expect("(")
        t_tok = self.tok
        if t_tok.kind != "word" or t_tok.quoted or not t_tok.text.isdigit():
            raise PolicySyntaxError("expected threshold integer", t_tok.offset)
        self.advance()
        self.expect(";")
        children = [self.expr()]
        while self.tok.kind == "punct" and self.tok.text == ",":
            self.advance()
            children.append(self.expr())
        self.expect(")")
        if len(children) < 2:
            raise PolicySyntaxError("THRESHOLD needs at least two operands", t_tok.offset)
        t = int(t_tok.text)
        if not 1 <= t <= len(children):
            raise PolicySyntaxError(
                f"threshold {t} out of range [1, {len(children)}]", t_tok.offset
            )
        return Gate(t, tuple(children))

    def leaf(self) -> Leaf:
        name = self.advance()
        self.expect(":")
        value = self.tok
        if value.kind != "word":
            found = "end of query" if value.kind == "end" else repr(value.text)
            raise PolicySyntaxError(f"expected keyword value, found {found}", value.offset)
        self.advance()
        if not name.text or not value.text:
            raise PolicySyntaxError("empty keyword name or value", name.offset)
        return Leaf(Keyword(name.text, value.text))


def parse_query(text: str) -> PolicyAst:
    return _Parser(text).parse()


def _quote(word: str) -> str:
    if _BARE.fullmatch(word) and word.upper() not in ("AND", "OR", "THRESHOLD"):
        return word
    return '"' + word.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render(ast: PolicyAst) -> str:
    """Query text that parses back to ``ast`` (for gates of arity ≥ 2)."""
    if isinstance(ast, Leaf):
        return str(ast.keyword)
    parts = [render(c) for c in ast.children]
    if ast.arity == 1:
        return parts[0]
    if ast.threshold == ast.arity:
        return "(" + " AND ".join(parts) + ")"
    if ast.threshold == 1:
        return "(" + " OR ".join(parts) + ")"
    return f"THRESHOLD({ast.threshold}; " + ", ".join(parts) + ")"


# -- LSSS ----------------------------------------------------------------------------


@dataclass(frozen=True)
class KeywordPolicy:
    """Compiled policy: share-generating matrix, row map and (optionally) leaves.

    ``leaves`` is ``None`` in the hidden form carried by trapdoors.
    """

    matrix: tuple[tuple[int, ...], ...]
    pi: tuple[int, ...]
    leaves: tuple[Keyword, ...] | None

    @property
    def rows(self) -> int:
        return len(self.matrix)

    @property
    def cols(self) -> int:
        return len(self.matrix[0])

    def hidden(self) -> "KeywordPolicy":
        return KeywordPolicy(self.matrix, self.pi, None)

    def write_body(self, w: Writer, include_leaves: bool) -> None:
        w.u32(self.rows)
        w.u32(self.cols)
        for row in self.matrix:
            for x in row:
                w.scalar(x)
        for j in self.pi:
            w.u32(j)
        if include_leaves:
            if self.leaves is None:
                raise PolicyError("policy has no leaf keywords to serialize")
            for kw in self.leaves:
                w.raw(kw.encode())

    @classmethod
    def read_body(cls, r: Reader, include_leaves: bool) -> "KeywordPolicy":
        at = r.pos
        l = r.count(1 << 16)
        t = r.count(1 << 16)
        if l == 0 or t == 0:
            raise DecodeError("empty policy matrix", at)
        matrix = tuple(tuple(r.scalar() for _ in range(t)) for _ in range(l))
        pi_at = r.pos
        pi = tuple(r.u32() for _ in range(l))
        if sorted(pi) != list(range(l)):
            raise DecodeError("row map is not a permutation of leaf ordinals", pi_at)
        kws = tuple(Keyword.decode_from(r) for _ in range(l)) if include_leaves else None
        return cls(matrix, pi, kws)

    def to_bytes(self) -> bytes:
        w = Writer(TypeTag.POLICY)
        self.write_body(w, include_leaves=True)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeywordPolicy":
        r = Reader(data)
        r.header(TypeTag.POLICY)
        out = cls.read_body(r, include_leaves=True)
        r.done()
        return out

    def leaf_keyword(self, row: int) -> Keyword:
        if self.leaves is None:
            raise PolicyError("hidden policy carries no keywords")
        return self.leaves[self.pi[row]]


def compile_policy(ast: PolicyAst) -> KeywordPolicy:
    """Liu-Cao-Wong threshold-tree to LSSS conversion.

    The root holds (1).  A gate (t, n) holding vector v appends t-1 fresh
    columns at the right edge; child j (1-based) receives v extended with
    (j, j^2, ..., j^(t-1)) in those columns.  Gates are expanded depth first,
    left to right, and leaves emit their vector as a row.  Column one is
    therefore all ones.
    """
    rows: list[dict[int, int]] = []
    kws: list[Keyword] = []
    width = 1

    def expand(node: PolicyAst, vec: dict[int, int]) -> None:
        nonlocal width
        if isinstance(node, Leaf):
            rows.append(vec)
            kws.append(node.keyword)
            return
        base = width
        width += node.threshold - 1
        for j, child in enumerate(node.children, start=1):
            v = dict(vec)
            power = 1
            for k in range(node.threshold - 1):
                power = power * j % ORDER
                v[base + k] = power
            expand(child, v)

    expand(ast, {0: 1})
    matrix = tuple(tuple(r.get(c, 0) for c in range(width)) for r in rows)
    return KeywordPolicy(matrix, tuple(range(len(rows))), tuple(kws))


def share_secret(matrix: Sequence[Sequence[int]], secret: int, v: Sequence[int]) -> list[int]:
    """Shares λ_i = M_i · (secret ‖ v) mod p, one field product per matrix entry."""
    cols = len(matrix[0])
    if len(v) != cols - 1:
        raise PolicyError(f"randomness vector has length {len(v)}, expected {cols - 1}")
    vec = [secret % ORDER, *(x % ORDER for x in v)]
    shares = []
    for row in matrix:
        if len(row) != cols:
            raise PolicyError("ragged policy matrix")
        acc = 0
        for m, x in zip(row, vec):
            acc += fmul(m, x)
        shares.append(acc % ORDER)
    return shares


def reconstruct_coeffs(rows: Sequence[tuple[int, Sequence[int]]]) -> dict[int, int] | None:
    """Coefficients γ with Σ γ_k·row_k = (1, 0, …, 0) over Z_p.

    ``rows`` is a list of (index, row vector).  Returns ``{index: γ}`` with
    free variables set to zero (zero coefficients are dropped), or ``None``
    when the target is not in the span of the rows.
    """
    if not rows:
        return None
    width = len(rows[0][1])
    if any(len(r) != width for _, r in rows):
        raise PolicyError("rows must all have the same width")
    k = len(rows)
    # Transposed system: one equation per column, one unknown per row.
    aug = [[rows[j][1][c] % ORDER for j in range(k)] + [1 if c == 0 else 0] for c in range(width)]
    pivots: list[int] = []
    r = 0
    for col in range(k):
        piv = next((i for i in range(r, width) if aug[i][col]), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = pow(aug[r][col], -1, ORDER)
        aug[r] = [x * inv % ORDER for x in aug[r]]
        for i in range(width):
            if i != r and aug[i][col]:
                f = aug[i][col]
                aug[i] = [(x - f * y) % ORDER for x, y in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
        if r == width:
            break
    if any(aug[i][k] for i in range(r, width)):
        return None
    gamma = {}
    for i, col in enumerate(pivots):
        if aug[i][k]:
            gamma[rows[col][0]] = aug[i][k]
    return gamma


def policy_satisfied_by(policy: KeywordPolicy, ws: Iterable[Keyword]) -> bool:
    """LSSS authorization: do the rows labelled by keywords in ``ws`` span (1, 0, …, 0)?"""
    present = set(ws)
    rows = [(i, policy.matrix[i]) for i in range(policy.rows) if policy.leaf_keyword(i) in present]
    return reconstruct_coeffs(rows) is not None


def random_ast(
    rng,
    vocabulary: Sequence[Keyword],
    max_leaves: int = 8,
    max_depth: int = 3,
) -> PolicyAst:
    """Random monotone AND/OR/threshold tree with at most ``max_leaves`` leaves."""

    def build(budget: int, depth: int) -> PolicyAst:
        if budget == 1 or depth == max_depth or rng.random() < 0.25:
            return Leaf(rng.choice(vocabulary))
        n = rng.randint(2, min(budget, 4))
        split = [1] * n
        for _ in range(rng.randint(0, budget - n)):
            split[rng.randrange(n)] += 1
        children = tuple(build(b, depth + 1) for b in split)
        kind = rng.random()
        t = n if kind < 1 / 3 else 1 if kind < 2 / 3 else rng.randint(1, n)
        return Gate(t, children)

    return build(rng.randint(1, max_leaves), 0)


def authorized_subsets(ast: PolicyAst) -> Mapping[int, bool]:
    """Brute force over leaf-position subsets: bitmask -> satisfied."""
    kws = leaves(ast)
    out = {}
    for mask in range(1 << len(kws)):
        out[mask] = _sat_positions(ast, mask, iter(range(len(kws))))
    return out


def _sat_positions(ast: PolicyAst, mask: int, counter) -> bool:
    if isinstance(ast, Leaf):
        return bool(mask >> next(counter) & 1)
    hits = sum(_sat_positions(c, mask, counter) for c in ast.children)
    return hits >= ast.threshold
