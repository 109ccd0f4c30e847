"""EE-PAEKS: expressive public-key authenticated encryption with keyword search.

Typical flow::

    pp = setup()
    cloud, aux = keygen(pp, "cloud"), keygen(pp, "aux")
    sender, receiver = keygen(pp, "sender"), keygen(pp, "receiver")
    ct = enc(pp, sender, cloud, aux, KeywordSet.parse("disease:flu,age:40"))
    td = trap(pp, receiver, cloud, aux, compile_policy(parse_query("disease:flu")))
    search(cloud, enc_trans(aux, ct), trap_trans(aux, td))  # True
"""

from eepaeks.groups import BACKEND_NAME, OpCounters, PublicParams, count_ops, setup
from eepaeks.index import (
    InvertedIndex,
    equal_test,
    fast_search,
    init_index,
    insert_index,
    match_test,
)
from eepaeks.policy import (
    Gate,
    Keyword,
    KeywordPolicy,
    KeywordSet,
    Leaf,
    compile_policy,
    parse_query,
    reconstruct_coeffs,
    render,
    satisfies,
    share_secret,
)
from eepaeks.scheme import (
    Ciphertext,
    KeyPair,
    Role,
    TransformedCiphertext,
    TransformedTrapdoor,
    Trapdoor,
    enc,
    enc_trans,
    keygen,
    search,
    trap,
    trap_trans,
)

__all__ = [
    "BACKEND_NAME",
    "Ciphertext",
    "Gate",
    "InvertedIndex",
    "KeyPair",
    "Keyword",
    "KeywordPolicy",
    "KeywordSet",
    "Leaf",
    "OpCounters",
    "PublicParams",
    "Role",
    "TransformedCiphertext",
    "TransformedTrapdoor",
    "Trapdoor",
    "compile_policy",
    "count_ops",
    "enc",
    "enc_trans",
    "equal_test",
    "fast_search",
    "init_index",
    "insert_index",
    "keygen",
    "match_test",
    "parse_query",
    "reconstruct_coeffs",
    "render",
    "satisfies",
    "search",
    "setup",
    "share_secret",
    "trap",
    "trap_trans",
]
