"""Cloud-side inverted index over transformed ciphertexts.

Buckets are labelled by a single-keyword projection of the first ciphertext
that introduced the keyword.  Insertion scans labels with :func:`equal_test`;
lookup scans them with :func:`match_test` per trapdoor row, then confirms each
candidate with a full :func:`~eepaeks.scheme.search`.

Concurrency: any number of concurrent :func:`fast_search` calls, but
:func:`insert_index` needs exclusive access.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from eepaeks.groups import (
    DecodeError,
    G1Elem,
    G2Elem,
    PublicParams,
    Reader,
    Writer,
    pair,
)
from eepaeks.scheme import KeyPair, Role, TransformedCiphertext, TransformedTrapdoor, _secret, search

INDEX_MAGIC = b"EEPIDX1"


@dataclass(frozen=True)
class SingleTransformedCiphertext:
    ct1_i: G1Elem
    ct2: G1Elem
    ct3: G1Elem
    ct4: G2Elem

    @classmethod
    def project(cls, ct: TransformedCiphertext, i: int) -> "SingleTransformedCiphertext":
        return cls(ct.ct1[i], ct.ct2, ct.ct3, ct.ct4)

    def to_bytes(self) -> bytes:
        return b"".join(x.to_bytes() for x in (self.ct1_i, self.ct2, self.ct3, self.ct4))

    @classmethod
    def read_from(cls, r: Reader) -> "SingleTransformedCiphertext":
        return cls(r.g1(), r.g1(), r.g1(), r.g2())


@dataclass(frozen=True)
class SingleTransformedTrapdoor:
    td12_j: G1Elem
    td2: G1Elem
    td3: G1Elem
    td4: G2Elem

    @classmethod
    def project(cls, td: TransformedTrapdoor, j: int) -> "SingleTransformedTrapdoor":
        return cls(td.td12[j], td.td2, td.td3, td.td4)


def _open(x: G1Elem, den2: G1Elem, den3: G1Elem, c: int) -> G1Elem:
    return x**c / (den2 * den3**c)


def equal_test(
    pp: PublicParams,
    a: SingleTransformedCiphertext,
    b: SingleTransformedCiphertext,
    sk_c: KeyPair | int,
) -> bool:
    """True iff both single ciphertexts carry the same keyword, whoever sent them."""
    c = _secret(sk_c, Role.CLOUD)
    lhs = pair(_open(a.ct1_i, a.ct2, a.ct3, c), b.ct4)
    rhs = pair(_open(b.ct1_i, b.ct2, b.ct3, c), a.ct4)
    return lhs == rhs


def match_test(
    pp: PublicParams,
    a: SingleTransformedCiphertext,
    t: SingleTransformedTrapdoor,
    sk_c: KeyPair | int,
) -> bool:
    c = _secret(sk_c, Role.CLOUD)
    lhs = pair(_open(a.ct1_i, a.ct2, a.ct3, c), t.td4)
    rhs = pair(_open(t.td12_j, t.td2, t.td3, c), a.ct4)
    return lhs == rhs


@dataclass
class IndexEntry:
    doc_ref: bytes
    ct: TransformedCiphertext


@dataclass
class Bucket:
    label: SingleTransformedCiphertext
    entries: list[IndexEntry] = field(default_factory=list)


@dataclass
class InvertedIndex:
    buckets: list[Bucket] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.buckets)

    def documents(self) -> dict[tuple[bytes, bytes], IndexEntry]:
        """Every stored (doc_ref, ciphertext) once, keyed by its identity."""
        out = {}
        for b in self.buckets:
            for e in b.entries:
                out.setdefault((e.doc_ref, e.ct.to_bytes()), e)
        return out

    def to_bytes(self) -> bytes:
        w = Writer()
        w.raw(INDEX_MAGIC)
        w.u32(len(self.buckets))
        for b in self.buckets:
            w.raw(b.label.to_bytes())
            w.u32(len(b.entries))
            for e in b.entries:
                w.blob(e.doc_ref)
                e.ct.write(w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "InvertedIndex":
        r = Reader(data)
        if r.take(len(INDEX_MAGIC)) != INDEX_MAGIC:
            raise DecodeError("bad index magic", 0)
        idx = cls()
        for _ in range(r.count()):
            label = SingleTransformedCiphertext.read_from(r)
            entries = []
            for _ in range(r.count()):
                ref = r.blob()
                entries.append(IndexEntry(ref, TransformedCiphertext.read_from(r)))
            idx.buckets.append(Bucket(label, entries))
        r.done()
        return idx

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        return cls.from_bytes(Path(path).read_bytes())


def init_index(pp: PublicParams) -> InvertedIndex:
    return InvertedIndex()


def insert_index(
    pp: PublicParams,
    ct: TransformedCiphertext,
    idx: InvertedIndex,
    sk_c: KeyPair | int,
    doc_ref: bytes | str,
) -> InvertedIndex:
    """Add ``ct`` under every keyword it carries, opening a bucket on a miss.

    Re-inserting the same ciphertext stores it again; nothing is deduplicated.
    """
    if not isinstance(ct, TransformedCiphertext):
        raise TypeError("only transformed ciphertexts can be indexed")
    if isinstance(doc_ref, str):
        doc_ref = doc_ref.encode("utf-8")
    entry = IndexEntry(bytes(doc_ref), ct)
    for i in range(ct.m):
        single = SingleTransformedCiphertext.project(ct, i)
        for bucket in idx.buckets:
            if equal_test(pp, single, bucket.label, sk_c):
                bucket.entries.append(entry)
                break
        else:
            idx.buckets.append(Bucket(single, [entry]))
    return idx


@dataclass
class SearchStats:
    match_tests: int = 0
    candidates: int = 0
    full_searches: int = 0


def fast_search(
    pp: PublicParams,
    td: TransformedTrapdoor,
    idx: InvertedIndex,
    sk_c: KeyPair | int,
    stats: SearchStats | None = None,
) -> set[bytes]:
    """Doc refs whose ciphertext satisfies ``td``.

    Candidates come from the buckets hit by any trapdoor row; only those get
    the full search.
    """
    stats = stats if stats is not None else SearchStats()
    candidates: dict[tuple[bytes, bytes], IndexEntry] = {}
    for j in range(td.l):
        single = SingleTransformedTrapdoor.project(td, j)
        for bucket in idx.buckets:
            stats.match_tests += 1
            if match_test(pp, bucket.label, single, sk_c):
                for e in bucket.entries:
                    candidates.setdefault((e.doc_ref, e.ct.to_bytes()), e)
                break
    stats.candidates = len(candidates)
    results = set()
    for e in candidates.values():
        stats.full_searches += 1
        if search(sk_c, e.ct, td):
            results.add(e.doc_ref)
    return results


def linear_search(td: TransformedTrapdoor, idx: InvertedIndex, sk_c: KeyPair | int) -> set[bytes]:
    """Reference answer: full search against every stored document."""
    return {e.doc_ref for e in idx.documents().values() if search(sk_c, e.ct, td)}

