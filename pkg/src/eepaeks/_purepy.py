"""Pure-Python BLS12-381 backend on top of py_ecc.

Same surface as the compiled ``eepaeks._native`` module, and byte-identical
outputs for every operation, so the two can be swapped at import time.
Orders of magnitude slower; used when the extension is not built.
"""

from __future__ import annotations

import hashlib

from py_ecc.bls.hash_to_curve import hash_to_G1
from py_ecc.bls.point_compression import (
    compress_G1,
    compress_G2,
    decompress_G1,
    decompress_G2,
)
from py_ecc.fields import optimized_bls12_381_FQ as FQ
from py_ecc.fields import optimized_bls12_381_FQ12 as FQ12
from py_ecc.optimized_bls12_381 import (
    G1 as _G1_GEN,
    G2 as _G2_GEN,
    Z1,
    Z2,
    add,
    curve_order,
    eq,
    is_inf,
    multiply,
    neg,
    pairing,
)

BACKEND = "py_ecc"

_Q = FQ.field_modulus
_FP_LEN = 48


def _scalar(k_be: bytes) -> int:
    if len(k_be) != 32:
        raise ValueError("scalar must be 32 big-endian bytes")
    return int.from_bytes(k_be, "big")


class G1:
    __slots__ = ("_p",)

    def __init__(self, p):
        self._p = p

    @staticmethod
    def generator() -> "G1":
        return G1(_G1_GEN)

    @staticmethod
    def identity() -> "G1":
        return G1(Z1)

    @staticmethod
    def hash_to(msg: bytes, dst: bytes) -> "G1":
        return G1(hash_to_G1(msg, dst, hashlib.sha256))

    @staticmethod
    def from_bytes(data: bytes) -> "G1":
        if len(data) != 48:
            raise ValueError("G1 encoding must be 48 bytes")
        p = decompress_G1(int.from_bytes(data, "big"))
        out = G1(p)
        if not out.in_group():
            raise ValueError("point not in prime-order subgroup")
        if out.to_bytes() != bytes(data):
            raise ValueError("non-canonical G1 encoding")
        return out

    def to_bytes(self) -> bytes:
        return compress_G1(self._p).to_bytes(48, "big")

    def mul(self, k_be: bytes) -> "G1":
        return G1(multiply(self._p, _scalar(k_be)))

    def add(self, other: "G1") -> "G1":
        return G1(add(self._p, other._p))

    def neg(self) -> "G1":
        return G1(neg(self._p))

    def is_identity(self) -> bool:
        return is_inf(self._p)

    def in_group(self) -> bool:
        return is_inf(multiply(self._p, curve_order))

    def __eq__(self, other) -> bool:
        return isinstance(other, G1) and eq(self._p, other._p)

    def __hash__(self) -> int:
        return hash(self.to_bytes())


class G2:
    __slots__ = ("_p",)

    def __init__(self, p):
        self._p = p

    @staticmethod
    def generator() -> "G2":
        return G2(_G2_GEN)

    @staticmethod
    def identity() -> "G2":
        return G2(Z2)

    @staticmethod
    def from_bytes(data: bytes) -> "G2":
        if len(data) != 96:
            raise ValueError("G2 encoding must be 96 bytes")
        z1 = int.from_bytes(data[:48], "big")
        z2 = int.from_bytes(data[48:], "big")
        out = G2(decompress_G2((z1, z2)))
        if not out.in_group():
            raise ValueError("point not in prime-order subgroup")
        if out.to_bytes() != bytes(data):
            raise ValueError("non-canonical G2 encoding")
        return out

    def to_bytes(self) -> bytes:
        z1, z2 = compress_G2(self._p)
        return z1.to_bytes(48, "big") + z2.to_bytes(48, "big")

    def mul(self, k_be: bytes) -> "G2":
        return G2(multiply(self._p, _scalar(k_be)))

    def add(self, other: "G2") -> "G2":
        return G2(add(self._p, other._p))

    def neg(self) -> "G2":
        return G2(neg(self._p))

    def is_identity(self) -> bool:
        return is_inf(self._p)

    def in_group(self) -> bool:
        return is_inf(multiply(self._p, curve_order))

    def __eq__(self, other) -> bool:
        return isinstance(other, G2) and eq(self._p, other._p)

    def __hash__(self) -> int:
        return hash(self.to_bytes())


# py_ecc represents Fp12 as Fp[w]/(w^12 - 2w^6 + 2); the wire format uses the
# tower Fp2[u]/(u^2+1) -> Fp6[v]/(v^3-(u+1)) -> Fp12[w]/(w^2-v), so v = w^2 and
# u = w^6 - 1.  Tower slot (j, k) carries a + b*u at w^(2k+j).


def _to_tower(f: FQ12) -> bytes:
    c = [int(x) for x in f.coeffs]
    out = []
    for j in range(2):
        for k in range(3):
            e = 2 * k + j
            b = c[e + 6]
            a = (c[e] + b) % _Q
            out.append(a.to_bytes(_FP_LEN, "big"))
            out.append(b.to_bytes(_FP_LEN, "big"))
    return b"".join(out)


def _from_tower(data: bytes) -> FQ12:
    vals = [int.from_bytes(data[i : i + _FP_LEN], "big") for i in range(0, 12 * _FP_LEN, _FP_LEN)]
    if any(v >= _Q for v in vals):
        raise ValueError("non-canonical GT encoding")
    c = [0] * 12
    slot = 0
    for j in range(2):
        for k in range(3):
            e = 2 * k + j
            a, b = vals[slot], vals[slot + 1]
            slot += 2
            c[e] = (a - b) % _Q
            c[e + 6] = b
    return FQ12(c)


class GT:
    __slots__ = ("_f",)

    def __init__(self, f: FQ12):
        self._f = f

    @staticmethod
    def one() -> "GT":
        return GT(FQ12.one())

    @staticmethod
    def from_bytes(data: bytes) -> "GT":
        if len(data) != 12 * _FP_LEN:
            raise ValueError("GT encoding must be 576 bytes")
        f = _from_tower(bytes(data))
        if f == FQ12.zero() or f**curve_order != FQ12.one():
            raise ValueError("element not in target group")
        return GT(f)

    def to_bytes(self) -> bytes:
        return _to_tower(self._f)

    def mul(self, other: "GT") -> "GT":
        return GT(self._f * other._f)

    def inv(self) -> "GT":
        return GT(self._f.inv())

    def pow(self, k_be: bytes) -> "GT":
        return GT(self._f ** _scalar(k_be))

    def is_one(self) -> bool:
        return self._f == FQ12.one()

    def __eq__(self, other) -> bool:
        return isinstance(other, GT) and self._f == other._f

    def __hash__(self) -> int:
        return hash(self.to_bytes())


def pair(a: G1, b: G2) -> GT:
    if a.is_identity() or b.is_identity():
        return GT.one()
    # blst's final exponentiation lands on e^-3 of py_ecc's; match it exactly.
    f = pairing(b._p, a._p) ** 3
    return GT(f.inv())


def pair_batch(points: list[G1], b: G2) -> list[GT]:
    return [pair(a, b) for a in points]
