"""Key generation, encryption, trapdoors, auxiliary-server transforms and search.

Group placement: hash outputs, public keys and every ciphertext/trapdoor
component live in G1 except the probes ``ct4`` and ``td4``, which live in G2
so that each pairing in :func:`search` is G1 x G2.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator

from eepaeks.groups import (
    ORDER,
    DecodeError,
    G1Elem,
    G2Elem,
    PublicParams,
    Reader,
    TypeTag,
    Writer,
    fmul,
    hash_to_g1,
    pair,
    pair_batch,
    rand_scalar_nonzero,
)
from eepaeks.policy import Keyword, KeywordPolicy, KeywordSet, reconstruct_coeffs, share_secret


class SchemeError(ValueError):
    pass


# White-box hook: tests may read the per-call randomness.  Only armed when the
# process starts with EEPAEKS_EXPOSE_RANDOMNESS=1.
_EXPOSE = os.environ.get("EEPAEKS_EXPOSE_RANDOMNESS") == "1"
_trace: ContextVar[dict | None] = ContextVar("eepaeks_trace", default=None)


@contextmanager
def exposed_randomness() -> Iterator[dict]:
    if not _EXPOSE:
        raise RuntimeError("randomness exposure requires EEPAEKS_EXPOSE_RANDOMNESS=1 at startup")
    record: dict = {}
    token = _trace.set(record)
    try:
        yield record
    finally:
        _trace.reset(token)


def _record(**values) -> None:
    if _EXPOSE:
        rec = _trace.get()
        if rec is not None:
            rec.update(values)


# -- keys ---------------------------------------------------------------------------


class Role(IntEnum):
    CLOUD = 1
    AUX = 2
    SENDER = 3
    RECEIVER = 4

    @classmethod
    def parse(cls, text: str) -> "Role":
        aliases = {"cs": "cloud", "as": "aux", "auxiliary": "aux"}
        name = aliases.get(text.lower(), text.lower())
        try:
            return cls[name.upper()]
        except KeyError:
            raise SchemeError(f"unknown role {text!r}") from None


@dataclass(frozen=True)
class KeyPair:
    role: Role
    sk: int | None
    pk: G1Elem

    def public(self) -> "KeyPair":
        return KeyPair(self.role, None, self.pk)

    def to_bytes(self, curve_code: int = 0x01) -> bytes:
        w = Writer(TypeTag.KEY, curve_code)
        w.u8(self.role)
        w.u8(0 if self.sk is None else 1)
        if self.sk is not None:
            w.scalar(self.sk)
        w.elem(self.pk)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyPair":
        r = Reader(data)
        r.header(TypeTag.KEY)
        at = r.pos
        try:
            role = Role(r.u8())
        except ValueError:
            raise DecodeError("unknown key role", at) from None
        flag_at = r.pos
        flag = r.u8()
        if flag not in (0, 1):
            raise DecodeError("bad secret-key flag", flag_at)
        sk = r.scalar() if flag else None
        if sk == 0:
            raise DecodeError("secret key must be nonzero", flag_at + 1)
        pk = r.g1()
        r.done()
        return cls(role, sk, pk)


def keygen(pp: PublicParams, role: Role | str, rng=None) -> KeyPair:
    if isinstance(role, str):
        role = Role.parse(role)
    sk = rand_scalar_nonzero(rng)
    return KeyPair(Role(role), sk, pp.g1**sk)


def _secret(key: KeyPair | int, role: Role) -> int:
    if isinstance(key, KeyPair):
        if key.role != role:
            raise SchemeError(f"expected a {role.name.lower()} key, got {key.role.name.lower()}")
        if key.sk is None:
            raise SchemeError(f"{role.name.lower()} key has no secret part")
        return key.sk
    return key % ORDER


def _public(key: KeyPair | G1Elem) -> G1Elem:
    return key.pk if isinstance(key, KeyPair) else key


# -- ciphertexts -------------------------------------------------------------------


@dataclass(frozen=True)
class Ciphertext:
    ct1: tuple[G1Elem, ...]
    ct2: G1Elem
    ct3: G1Elem
    ct4: G2Elem

    TAG = TypeTag.CT

    @property
    def m(self) -> int:
        return len(self.ct1)

    def group_elements(self) -> int:
        return self.m + 3

    def write(self, w: Writer) -> None:
        w.raw(Writer(self.TAG).getvalue())
        w.u32(self.m)
        for x in self.ct1:
            w.elem(x)
        w.elem(self.ct2)
        w.elem(self.ct3)
        w.elem(self.ct4)

    def to_bytes(self) -> bytes:
        w = Writer()
        self.write(w)
        return w.getvalue()

    @classmethod
    def read_from(cls, r: Reader):
        r.header(cls.TAG)
        at = r.pos
        m = r.count(1 << 20)
        if m == 0:
            raise DecodeError("ciphertext has no keyword components", at)
        ct1 = tuple(r.g1() for _ in range(m))
        return cls(ct1, r.g1(), r.g1(), r.g2())

    @classmethod
    def from_bytes(cls, data: bytes):
        r = Reader(data)
        out = cls.read_from(r)
        r.done()
        return out


@dataclass(frozen=True)
class TransformedCiphertext(Ciphertext):
    TAG = TypeTag.CTX


def enc(
    pp: PublicParams,
    sk_s: KeyPair | int,
    pk_c: KeyPair | G1Elem,
    pk_a: KeyPair | G1Elem,
    ws: Iterable[Keyword],
    rng=None,
) -> Ciphertext:
    """Encrypt a keyword set for every receiver at once.

    Costs m+4 exponentiations, m+1 multiplications and m hashes.
    """
    ws = ws if isinstance(ws, KeywordSet) else KeywordSet(ws)
    s = _secret(sk_s, Role.SENDER)
    x1, x2, x3 = (rand_scalar_nonzero(rng) for _ in range(3))
    _record(x1=x1, x2=x2, x3=x3)
    sx3 = fmul(s, x3)
    shared = pp.g1 ** ((x1 + x2) % ORDER)
    ct1 = tuple(hash_to_g1(pp, w.encode()) ** sx3 * shared for w in ws)
    return Ciphertext(ct1, _public(pk_c) ** x1, _public(pk_a) ** x2, pp.g2**sx3)


def enc_trans(sk_a: KeyPair | int, ct: Ciphertext, rng=None) -> TransformedCiphertext:
    if type(ct) is not Ciphertext:
        raise SchemeError("enc_trans expects an untransformed Ciphertext")
    if not ct.ct1:
        raise SchemeError("ciphertext has no keyword components")
    a = _secret(sk_a, Role.AUX)
    xh = rand_scalar_nonzero(rng)
    _record(x_hat=xh)
    e = fmul(xh, a)
    return TransformedCiphertext(
        tuple(x**e for x in ct.ct1), ct.ct2**e, ct.ct3**xh, ct.ct4**e
    )


# -- trapdoors ----------------------------------------------------------------------


@dataclass(frozen=True)
class Trapdoor:
    policy: KeywordPolicy  # hidden form: matrix and row map only
    td11: tuple[G1Elem, ...]
    td12: tuple[G1Elem, ...]
    td2: G1Elem
    td3: G1Elem
    td4: G2Elem

    TAG = TypeTag.TD

    @property
    def l(self) -> int:
        return len(self.td11)

    def group_elements(self) -> int:
        return 2 * self.l + 3

    def write(self, w: Writer) -> None:
        w.raw(Writer(self.TAG).getvalue())
        self.policy.write_body(w, include_leaves=False)
        for x in self.td11:
            w.elem(x)
        for x in self.td12:
            w.elem(x)
        w.elem(self.td2)
        w.elem(self.td3)
        w.elem(self.td4)

    def to_bytes(self) -> bytes:
        w = Writer()
        self.write(w)
        return w.getvalue()

    @classmethod
    def read_from(cls, r: Reader):
        r.header(cls.TAG)
        policy = KeywordPolicy.read_body(r, include_leaves=False)
        l = policy.rows
        td11 = tuple(r.g1() for _ in range(l))
        td12 = tuple(r.g1() for _ in range(l))
        return cls(policy, td11, td12, r.g1(), r.g1(), r.g2())

    @classmethod
    def from_bytes(cls, data: bytes):
        r = Reader(data)
        out = cls.read_from(r)
        r.done()
        return out


@dataclass(frozen=True)
class TransformedTrapdoor(Trapdoor):
    TAG = TypeTag.TDX


def trap(
    pp: PublicParams,
    sk_r: KeyPair | int,
    pk_c: KeyPair | G1Elem,
    pk_a: KeyPair | G1Elem,
    policy: KeywordPolicy,
    rng=None,
) -> Trapdoor:
    """Trapdoor for a compiled policy; leaf keywords are not carried over.

    Costs 2l+4 exponentiations, t·l+2l+1 multiplications and l hashes for an
    l×t policy matrix.
    """
    if policy.leaves is None:
        raise SchemeError("policy has no leaf keywords (already hidden)")
    r_sk = _secret(sk_r, Role.RECEIVER)
    y1, y2, y3 = (rand_scalar_nonzero(rng) for _ in range(3))
    v = [rand_scalar_nonzero(rng) for _ in range(policy.cols - 1)]
    _record(y1=y1, y2=y2, y3=y3, v=v)
    ry3 = fmul(r_sk, y3)
    y12 = (y1 + y2) % ORDER
    shares = share_secret(policy.matrix, y12, v)
    g_y12 = pp.g1**y12
    td11, td12 = [], []
    for i, lam in enumerate(shares):
        h = hash_to_g1(pp, policy.leaf_keyword(i).encode()) ** ry3
        td11.append(pp.g1**lam * h)
        td12.append(g_y12 * h)
    return Trapdoor(
        policy.hidden(),
        tuple(td11),
        tuple(td12),
        _public(pk_c) ** y1,
        _public(pk_a) ** y2,
        pp.g2**ry3,
    )


def trap_trans(sk_a: KeyPair | int, td: Trapdoor, rng=None) -> TransformedTrapdoor:
    if type(td) is not Trapdoor:
        raise SchemeError("trap_trans expects an untransformed Trapdoor")
    if not (len(td.td11) == len(td.td12) == td.policy.rows):
        raise SchemeError("trapdoor component counts disagree with its policy matrix")
    a = _secret(sk_a, Role.AUX)
    yh = rand_scalar_nonzero(rng)
    _record(y_hat=yh)
    e = fmul(yh, a)
    return TransformedTrapdoor(
        td.policy,
        tuple(x**e for x in td.td11),
        tuple(x**e for x in td.td12),
        td.td2**e,
        td.td3**yh,
        td.td4**e,
    )


# -- search -------------------------------------------------------------------------


def search(sk_c: KeyPair | int, ct: TransformedCiphertext, td: TransformedTrapdoor) -> bool:
    """Cloud-side test: does the ciphertext's keyword set satisfy the trapdoor policy?

    Step one pairs every unblinded keyword slot with ``td4`` and every
    unblinded trapdoor row with ``ct4``; rows whose value appears among the
    keyword values are matched.  Step two solves for reconstruction
    coefficients over all matched rows at once and checks the recombined
    equation.  A successful match costs m+l+2 pairings.
    """
    if not isinstance(ct, TransformedCiphertext) or not isinstance(td, TransformedTrapdoor):
        raise SchemeError("search runs on transformed ciphertexts and trapdoors only")
    c = _secret(sk_c, Role.CLOUD)
    ct_den = ct.ct2 * ct.ct3**c
    td_den = td.td2 * td.td3**c
    ct_open = [x**c / ct_den for x in ct.ct1]
    td_open = [x**c / td_den for x in td.td12]
    delta = pair_batch(ct_open, td.td4)
    mu = pair_batch(td_open, ct.ct4)

    slot_of: dict[bytes, int] = {}
    for i, d in enumerate(delta):
        slot_of.setdefault(d.to_bytes(), i)
    matched = {}
    for j, u in enumerate(mu):
        i = slot_of.get(u.to_bytes())
        if i is not None:
            matched[j] = i
    if not matched:
        return False

    gamma = reconstruct_coeffs([(j, td.policy.matrix[j]) for j in matched])
    if gamma is None:
        return False

    lhs_num = None
    rhs_base = None
    for k, g in gamma.items():
        term = td.td11[k] ** fmul(g, c)
        lhs_num = term if lhs_num is None else lhs_num * term
        slot = ct_open[matched[k]] ** g
        rhs_base = slot if rhs_base is None else rhs_base * slot
    lhs = pair(lhs_num / td_den, ct.ct4)
    rhs = pair(rhs_base, td.td4)
    return lhs == rhs
