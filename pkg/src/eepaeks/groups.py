"""Type-3 bilinear groups over BLS12-381.

The arithmetic kernels come from the compiled ``eepaeks._native`` extension
(blst) when it is importable, otherwise from the pure-Python ``_purepy``
module.  ``EEPAEKS_BACKEND=native|python`` forces a choice.  Both produce
byte-identical encodings and pairing values.

Elements use multiplicative notation: ``a * b`` is the group operation,
``a / b`` multiplies by the inverse and ``a ** k`` exponentiates by an
integer scalar.  Every operation reports itself to the active
:class:`OpCounters` (see :func:`count_ops`).
"""

from __future__ import annotations

import os
import secrets
import struct
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, fields
from enum import IntEnum
from typing import Iterator, Sequence


def _load_backend():
    choice = os.environ.get("EEPAEKS_BACKEND", "auto").lower()
    if choice not in ("auto", "native", "python"):
        raise ImportError(f"EEPAEKS_BACKEND must be auto, native or python, not {choice!r}")
    if choice != "python":
        try:
            from eepaeks import _native

            return _native
        except ImportError:
            if choice == "native":
                raise
    from eepaeks import _purepy

    return _purepy


backend = _load_backend()
BACKEND_NAME: str = backend.BACKEND

ORDER = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001
SCALAR_LEN = 32
G1_LEN = 48
G2_LEN = 96
GT_LEN = 576

MAGIC = b"EEP1"
CURVES = {"bls12_381": 0x01}
_CURVE_NAMES = {v: k for k, v in CURVES.items()}
DEFAULT_CURVE = "bls12_381"
HASH_DOMAIN_TAG = b"EEPAEKS-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_"


class TypeTag(IntEnum):
    CT = 0x01
    CTX = 0x02
    TD = 0x03
    TDX = 0x04
    KEY = 0x05
    PP = 0x06
    POLICY = 0x07
    SCALAR = 0x10
    G1 = 0x11
    G2 = 0x12
    GT = 0x13


class UnsupportedCurve(ValueError):
    pass


class DecodeError(ValueError):
    """Malformed serialized object; ``offset`` is the failing byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


# -- operation counting -------------------------------------------------------


@dataclass
class OpCounters:
    """Logical operation tallies, in the cost-table vocabulary.

    ``muls`` covers group multiplications and scalar-field products alike;
    divisions are tallied separately in ``divs``.
    """

    exps: int = 0
    muls: int = 0
    hashes: int = 0
    pairings: int = 0
    divs: int = 0

    def add(self, other: "OpCounters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "OpCounters":
        return OpCounters(**self.as_dict())


_active: ContextVar[OpCounters | None] = ContextVar("eepaeks_op_counters", default=None)


@contextmanager
def count_ops() -> Iterator[OpCounters]:
    """Count group operations performed inside the block.

    Nested blocks roll their totals up into the enclosing counter on exit.
    """
    outer = _active.get()
    counters = OpCounters()
    token = _active.set(counters)
    try:
        yield counters
    finally:
        _active.reset(token)
        if outer is not None:
            outer.add(counters)


def _tally(name: str, n: int = 1) -> None:
    c = _active.get()
    if c is not None:
        setattr(c, name, getattr(c, name) + n)


def fmul(a: int, b: int) -> int:
    """Scalar-field product, counted as one multiplication."""
    _tally("muls")
    return a * b % ORDER


# -- scalars -------------------------------------------------------------------


def _be(k: int) -> bytes:
    return (k % ORDER).to_bytes(SCALAR_LEN, "big")


def rand_scalar_nonzero(rng=None) -> int:
    """Uniform draw from [1, p-1].

    ``rng`` is any object with ``randrange`` (a seeded ``random.Random`` in
    tests); ``None`` uses the operating system's entropy source.
    """
    if rng is None:
        return secrets.randbelow(ORDER - 1) + 1
    return rng.randrange(1, ORDER)


def scalar_to_bytes(k: int) -> bytes:
    if not 0 <= k < ORDER:
        raise ValueError("scalar out of range")
    return k.to_bytes(SCALAR_LEN, "big")


def scalar_from_bytes(data: bytes) -> int:
    if len(data) != SCALAR_LEN:
        raise ValueError(f"scalar encoding must be {SCALAR_LEN} bytes")
    k = int.from_bytes(data, "big")
    if k >= ORDER:
        raise ValueError("scalar not reduced modulo the group order")
    return k


# -- group elements ------------------------------------------------------------


class G1Elem:
    __slots__ = ("_e",)
    byte_len = G1_LEN

    def __init__(self, raw):
        self._e = raw

    @classmethod
    def generator(cls) -> "G1Elem":
        return cls(backend.G1.generator())

    @classmethod
    def identity(cls) -> "G1Elem":
        return cls(backend.G1.identity())

    @classmethod
    def from_bytes(cls, data: bytes) -> "G1Elem":
        return cls(backend.G1.from_bytes(bytes(data)))

    def to_bytes(self) -> bytes:
        return bytes(self._e.to_bytes())

    def is_identity(self) -> bool:
        return self._e.is_identity()

    def in_group(self) -> bool:
        return self._e.in_group()

    def __mul__(self, other: "G1Elem") -> "G1Elem":
        _tally("muls")
        return G1Elem(self._e.add(other._e))

    def __truediv__(self, other: "G1Elem") -> "G1Elem":
        _tally("divs")
        return G1Elem(self._e.add(other._e.neg()))

    def __pow__(self, k: int) -> "G1Elem":
        _tally("exps")
        return G1Elem(self._e.mul(_be(k)))

    def __eq__(self, other) -> bool:
        return isinstance(other, G1Elem) and self._e == other._e

    def __hash__(self) -> int:
        return hash(self._e)

    def __repr__(self) -> str:
        return f"G1Elem({self.to_bytes().hex()[:16]}…)"


class G2Elem:
    __slots__ = ("_e",)
    byte_len = G2_LEN

    def __init__(self, raw):
        self._e = raw

    @classmethod
    def generator(cls) -> "G2Elem":
        return cls(backend.G2.generator())

    @classmethod
    def identity(cls) -> "G2Elem":
        return cls(backend.G2.identity())

    @classmethod
    def from_bytes(cls, data: bytes) -> "G2Elem":
        return cls(backend.G2.from_bytes(bytes(data)))

    def to_bytes(self) -> bytes:
        return bytes(self._e.to_bytes())

    def is_identity(self) -> bool:
        return self._e.is_identity()

    def in_group(self) -> bool:
        return self._e.in_group()

    def __mul__(self, other: "G2Elem") -> "G2Elem":
        _tally("muls")
        return G2Elem(self._e.add(other._e))

    def __truediv__(self, other: "G2Elem") -> "G2Elem":
        _tally("divs")
        return G2Elem(self._e.add(other._e.neg()))

    def __pow__(self, k: int) -> "G2Elem":
        _tally("exps")
        return G2Elem(self._e.mul(_be(k)))

    def __eq__(self, other) -> bool:
        return isinstance(other, G2Elem) and self._e == other._e

    def __hash__(self) -> int:
        return hash(self._e)

    def __repr__(self) -> str:
        return f"G2Elem({self.to_bytes().hex()[:16]}…)"


class GTElem:
    __slots__ = ("_e",)
    byte_len = GT_LEN

    def __init__(self, raw):
        self._e = raw

    @classmethod
    def identity(cls) -> "GTElem":
        return cls(backend.GT.one())

    @classmethod
    def from_bytes(cls, data: bytes) -> "GTElem":
        return cls(backend.GT.from_bytes(bytes(data)))

    def to_bytes(self) -> bytes:
        return bytes(self._e.to_bytes())

    def is_identity(self) -> bool:
        return self._e.is_one()

    def __mul__(self, other: "GTElem") -> "GTElem":
        _tally("muls")
        return GTElem(self._e.mul(other._e))

    def __truediv__(self, other: "GTElem") -> "GTElem":
        _tally("divs")
        return GTElem(self._e.mul(other._e.inv()))

    def __pow__(self, k: int) -> "GTElem":
        _tally("exps")
        return GTElem(self._e.pow(_be(k)))

    def __eq__(self, other) -> bool:
        return isinstance(other, GTElem) and self._e == other._e

    def __hash__(self) -> int:
        return hash(self._e)

    def __repr__(self) -> str:
        return f"GTElem({self.to_bytes().hex()[:16]}…)"


def pair(a: G1Elem, b: G2Elem) -> GTElem:
    _tally("pairings")
    return GTElem(backend.pair(a._e, b._e))


def pair_batch(points: Sequence[G1Elem], b: G2Elem) -> list[GTElem]:
    """``[pair(a, b) for a in points]`` with one shared precomputation for ``b``."""
    _tally("pairings", len(points))
    return [GTElem(x) for x in backend.pair_batch([a._e for a in points], b._e)]


# -- public parameters -----------------------------------------------------------


@dataclass(frozen=True)
class PublicParams:
    curve_id: str
    g1: G1Elem
    g2: G2Elem
    order: int
    hash_domain_tag: bytes

    @property
    def curve_code(self) -> int:
        return CURVES[self.curve_id]

    def to_bytes(self) -> bytes:
        w = Writer(TypeTag.PP, self.curve_code)
        w.scalar_raw(self.order)
        w.elem(self.g1)
        w.elem(self.g2)
        w.blob(self.hash_domain_tag)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicParams":
        r = Reader(data)
        code = r.header(TypeTag.PP)
        start = r.pos
        order = int.from_bytes(r.take(SCALAR_LEN), "big")
        if order != ORDER:
            raise DecodeError("group order does not match curve", start)
        g1 = r.g1()
        g2 = r.g2()
        tag = r.blob()
        r.done()
        pp = setup(_CURVE_NAMES[code])
        if (g1, g2, tag) != (pp.g1, pp.g2, pp.hash_domain_tag):
            raise DecodeError("public parameters differ from the published ones", start)
        return pp


def resolve_curve(curve_id: str | None = None) -> str:
    name = curve_id or os.environ.get("EEPAEKS_CURVE") or DEFAULT_CURVE
    if name == "default":
        name = DEFAULT_CURVE
    name = name.lower().replace("-", "_")
    if name not in CURVES:
        raise UnsupportedCurve(f"unsupported curve {curve_id!r}; supported: {sorted(CURVES)}")
    return name


def setup(curve_id: str | None = None) -> PublicParams:
    """Published parameters for ``curve_id`` (fixed generators; deterministic)."""
    name = resolve_curve(curve_id)
    return PublicParams(
        curve_id=name,
        g1=G1Elem.generator(),
        g2=G2Elem.generator(),
        order=ORDER,
        hash_domain_tag=HASH_DOMAIN_TAG,
    )


def hash_to_g1(pp: PublicParams, data: bytes) -> G1Elem:
    _tally("hashes")
    return G1Elem(backend.G1.hash_to(bytes(data), pp.hash_domain_tag))


# -- wire framing ---------------------------------------------------------------


class Writer:
    """Builds a framed object: MAGIC, one-byte type tag, one-byte curve id, body."""

    def __init__(self, tag: TypeTag | None = None, curve_code: int = CURVES[DEFAULT_CURVE]):
        self._parts: list[bytes] = []
        if tag is not None:
            self._parts.append(MAGIC + bytes([tag, curve_code]))

    def raw(self, b: bytes) -> None:
        self._parts.append(bytes(b))

    def u8(self, v: int) -> None:
        self._parts.append(struct.pack(">B", v))

    def u32(self, v: int) -> None:
        self._parts.append(struct.pack(">I", v))

    def scalar_raw(self, k: int) -> None:
        self._parts.append(k.to_bytes(SCALAR_LEN, "big"))

    def scalar(self, k: int) -> None:
        self._parts.append(scalar_to_bytes(k))

    def elem(self, e: G1Elem | G2Elem | GTElem) -> None:
        self._parts.append(e.to_bytes())

    def blob(self, b: bytes) -> None:
        self.u32(len(b))
        self._parts.append(bytes(b))

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    """Cursor over a framed object; every failure carries its byte offset."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = memoryview(bytes(data))
        self.pos = pos

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise DecodeError(f"truncated input: need {n} bytes", self.pos)
        out = bytes(self.data[self.pos : self.pos + n])
        self.pos += n
        return out

    def header(self, tag: TypeTag) -> int:
        start = self.pos
        if self.take(len(MAGIC)) != MAGIC:
            raise DecodeError("bad magic", start)
        got = self.take(1)[0]
        if got != tag:
            raise DecodeError(f"expected type tag 0x{tag:02x}, found 0x{got:02x}", start + 4)
        code = self.take(1)[0]
        if code not in _CURVE_NAMES:
            raise DecodeError(f"unknown curve id 0x{code:02x}", start + 5)
        return code

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def count(self, limit: int = 1 << 20) -> int:
        at = self.pos
        n = self.u32()
        if n > limit:
            raise DecodeError(f"count {n} exceeds limit {limit}", at)
        return n

    def blob(self) -> bytes:
        n = self.count(len(self.data))
        return self.take(n)

    def scalar(self) -> int:
        at = self.pos
        try:
            return scalar_from_bytes(self.take(SCALAR_LEN))
        except DecodeError:
            raise
        except ValueError as exc:
            raise DecodeError(str(exc), at) from None

    def _elem(self, cls):
        at = self.pos
        raw = self.take(cls.byte_len)
        try:
            return cls.from_bytes(raw)
        except ValueError as exc:
            raise DecodeError(f"invalid {cls.__name__}: {exc}", at) from None

    def g1(self) -> G1Elem:
        return self._elem(G1Elem)

    def g2(self) -> G2Elem:
        return self._elem(G2Elem)

    def gt(self) -> GTElem:
        return self._elem(GTElem)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes", self.pos)


_ELEM_TYPES = {"scalar": None, "g1": G1Elem, "g2": G2Elem, "gt": GTElem}


def serialize(x: int | G1Elem | G2Elem | GTElem) -> bytes:
    """Fixed-width canonical encoding of a scalar or group element."""
    if isinstance(x, int):
        return scalar_to_bytes(x)
    return x.to_bytes()


def deserialize(kind: str, data: bytes):
    """Inverse of :func:`serialize`; ``kind`` is scalar, g1, g2 or gt."""
    cls = _ELEM_TYPES.get(kind.lower(), ...)
    if cls is ...:
        raise ValueError(f"unknown element kind {kind!r}")
    if cls is None:
        return scalar_from_bytes(data)
    return cls.from_bytes(data)
