import random

import pytest

from eepaeks.groups import ORDER, DecodeError, G1Elem, G2Elem, count_ops, hash_to_g1, pair
from eepaeks.policy import KeywordSet, compile_policy, parse_query, reconstruct_coeffs, satisfies
from eepaeks.scheme import (
    Ciphertext,
    KeyPair,
    Role,
    SchemeError,
    TransformedCiphertext,
    TransformedTrapdoor,
    Trapdoor,
    enc,
    enc_trans,
    exposed_randomness,
    keygen,
    search,
    trap,
    trap_trans,
)


def ws_of(text):
    return KeywordSet.parse(text)


def pol_of(text):
    return compile_policy(parse_query(text))


@pytest.fixture
def run(pp, keys):
    """Encrypt ``ws`` and trap ``query``; return both transformed objects."""

    def _run(ws, query, rng=None):
        ct = enc(pp, keys[Role.SENDER], keys[Role.CLOUD].pk, keys[Role.AUX].pk, ws_of(ws), rng)
        td = trap(pp, keys[Role.RECEIVER], keys[Role.CLOUD].pk, keys[Role.AUX].pk, pol_of(query), rng)
        return enc_trans(keys[Role.AUX], ct, rng), trap_trans(keys[Role.AUX], td, rng)

    return _run


# -- keys ---------------------------------------------------------------------------


def test_keygen_contract(pp):
    k = keygen(pp, "receiver", random.Random(3))
    assert k == keygen(pp, Role.RECEIVER, random.Random(3))
    pk = G1Elem.from_bytes(k.pk.to_bytes())
    assert pk.in_group()
    assert pair(k.pk, pp.g2) == pair(pp.g1, pp.g2) ** k.sk


def test_key_serialization(pp, keys):
    for k in keys.values():
        assert KeyPair.from_bytes(k.to_bytes()) == k
        pub = KeyPair.from_bytes(k.public().to_bytes())
        assert pub.sk is None and pub.pk == k.pk
    data = keys[Role.AUX].to_bytes()
    with pytest.raises(DecodeError) as ei:
        KeyPair.from_bytes(data[:6] + b"\x09" + data[7:])
    assert ei.value.offset == 6


def test_role_parse():
    assert Role.parse("CS") is Role.CLOUD and Role.parse("as") is Role.AUX
    with pytest.raises(SchemeError):
        Role.parse("admin")


def test_wrong_role_key_rejected(pp, keys):
    with pytest.raises(SchemeError):
        enc(pp, keys[Role.RECEIVER], keys[Role.CLOUD], keys[Role.AUX], ws_of("a:1"))
    with pytest.raises(SchemeError):
        enc(pp, keys[Role.SENDER].public(), keys[Role.CLOUD], keys[Role.AUX], ws_of("a:1"))


# -- enc ---------------------------------------------------------------------------


def test_enc_shape_and_counts(pp, keys):
    with count_ops() as ops:
        ct = enc(pp, keys[Role.SENDER], keys[Role.CLOUD], keys[Role.AUX], ws_of("a:1,b:2"))
    assert ct.m == 2 and ct.group_elements() == 5
    assert (ops.exps, ops.muls, ops.hashes, ops.pairings) == (6, 3, 2, 0)


def test_enc_white_box_identity(pp, keys):
    ws = ws_of("a:1,b:2,c:3")
    with exposed_randomness() as rec:
        ct = enc(pp, keys[Role.SENDER], keys[Role.CLOUD], keys[Role.AUX], ws)
    shared = pp.g1 ** ((rec["x1"] + rec["x2"]) % ORDER)
    for w, c in zip(ws, ct.ct1):
        assert pair(c / shared, pp.g2) == pair(hash_to_g1(pp, w.encode()), ct.ct4)
    assert ct.ct2 == keys[Role.CLOUD].pk ** rec["x1"]
    assert ct.ct3 == keys[Role.AUX].pk ** rec["x2"]


def test_ciphertext_serialization(pp, keys, rng):
    ct = enc(pp, keys[Role.SENDER], keys[Role.CLOUD], keys[Role.AUX], ws_of("a:1,b:2"), rng)
    ctx = enc_trans(keys[Role.AUX], ct, rng)
    assert Ciphertext.from_bytes(ct.to_bytes()) == ct
    assert TransformedCiphertext.from_bytes(ctx.to_bytes()) == ctx
    with pytest.raises(DecodeError) as ei:
        TransformedCiphertext.from_bytes(ct.to_bytes())
    assert ei.value.offset == 4
    with pytest.raises(DecodeError):
        Ciphertext.from_bytes(ct.to_bytes()[:-1])
    with pytest.raises(DecodeError):
        Ciphertext.from_bytes(ct.to_bytes() + b"\x00")


def test_enc_trans_rerandomizes(pp, keys, run):
    ct = enc(pp, keys[Role.SENDER], keys[Role.CLOUD], keys[Role.AUX], ws_of("a:1,b:2"))
    t1, t2 = enc_trans(keys[Role.AUX], ct), enc_trans(keys[Role.AUX], ct)
    assert t1.to_bytes() != t2.to_bytes()
    assert t1.m == t2.m == ct.m
    with count_ops() as ops:
        enc_trans(keys[Role.AUX], ct)
    assert (ops.exps, ops.muls) == (ct.m + 3, 1)
    with pytest.raises(SchemeError):
        enc_trans(keys[Role.AUX], t1)


def test_search_invariant_across_transforms(pp, keys):
    r = random.Random(1)
    for trial in range(100):
        ws = ws_of("a:1,b:2") if trial % 2 else ws_of("c:3")
        ct = enc(pp, keys[Role.SENDER], keys[Role.CLOUD], keys[Role.AUX], ws, r)
        td = trap(pp, keys[Role.RECEIVER], keys[Role.CLOUD], keys[Role.AUX], pol_of("a:1 AND b:2"), r)
        tdx = trap_trans(keys[Role.AUX], td, r)
        ctxs = [enc_trans(keys[Role.AUX], ct, r) for _ in range(2)]
        tdxs = [tdx, trap_trans(keys[Role.AUX], td, r)]
        results = {search(keys[Role.CLOUD], c, t) for c in ctxs for t in tdxs}
        assert results == {bool(trial % 2)}


# -- trap --------------------------------------------------------------------------


def test_trap_single_leaf_components_coincide(pp, keys):
    td = trap(pp, keys[Role.RECEIVER], keys[Role.CLOUD], keys[Role.AUX], pol_of("disease:flu"))
    assert td.td11 == td.td12 and td.l == 1


def test_trap_counts_and_size(pp, keys):
    pol = pol_of("THRESHOLD(2; a:1, b:2, c:3) AND d:4")
    with count_ops() as ops:
        td = trap(pp, keys[Role.RECEIVER], keys[Role.CLOUD], keys[Role.AUX], pol)
    l, t = pol.rows, pol.cols
    assert (ops.exps, ops.muls, ops.hashes) == (2 * l + 4, t * l + 2 * l + 1, l)
    assert td.group_elements() == 2 * l + 3
    assert td.policy.leaves is None
    data = td.to_bytes()
    for w in pol.leaves:
        assert w.encode() not in data


def test_trap_rejects_hidden_policy(pp, keys):
    with pytest.raises(SchemeError):
        trap(pp, keys[Role.RECEIVER], keys[Role.CLOUD], keys[Role.AUX], pol_of("a:1").hidden())


def test_trap_trans_properties(pp, keys):
    td = trap(pp, keys[Role.RECEIVER], keys[Role.CLOUD], keys[Role.AUX], pol_of("a:1 OR (b:2 AND c:3)"))
    t1, t2 = trap_trans(keys[Role.AUX], td), trap_trans(keys[Role.AUX], td)
    assert t1.to_bytes() != t2.to_bytes()
    assert t1.policy == t2.policy == td.policy
    assert Trapdoor.from_bytes(td.to_bytes()) == td
    assert TransformedTrapdoor.from_bytes(t1.to_bytes()) == t1
    with pytest.raises(SchemeError):
        trap_trans(keys[Role.AUX], t1)
    with count_ops() as ops:
        trap_trans(keys[Role.AUX], td)
    assert (ops.exps, ops.muls) == (2 * td.l + 3, 1)


# -- search ------------------------------------------------------------------------


def test_search_examples(run, keys):
    assert search(keys[Role.CLOUD], *run("disease:flu", "disease:flu"))
    assert not search(keys[Role.CLOUD], *run("disease:flu", "disease:cold"))


@pytest.mark.parametrize(
    "ws,query,expected",
    [
        ("a:1,b:2", "a:1 AND b:2", True),
        ("a:1", "a:1 AND b:2", False),
        ("a:1,c:3", "THRESHOLD(2; a:1, b:2, c:3)", True),
        ("b:2", "THRESHOLD(2; a:1, b:2, c:3)", False),
        ("x:9,b:2", "a:1 OR b:2", True),
        ("a:1,d:4", "(a:1 OR b:2) AND (c:3 OR d:4)", True),
        ("a:1,b:2", "(a:1 OR b:2) AND (c:3 OR d:4)", False),
        ("a:1", "a:1 AND a:1", True),
    ],
)
def test_search_truth_table(run, keys, ws, query, expected):
    assert satisfies(parse_query(query), ws_of(ws)) == expected
    assert search(keys[Role.CLOUD], *run(ws, query)) is expected


def test_search_requires_transformed_inputs(pp, keys):
    ct = enc(pp, keys[Role.SENDER], keys[Role.CLOUD], keys[Role.AUX], ws_of("a:1"))
    td = trap(pp, keys[Role.RECEIVER], keys[Role.CLOUD], keys[Role.AUX], pol_of("a:1"))
    with pytest.raises(SchemeError):
        search(keys[Role.CLOUD], ct, trap_trans(keys[Role.AUX], td))


def test_search_with_wrong_cloud_key_fails(pp, keys, run):
    other = keygen(pp, Role.CLOUD)
    ctx, tdx = run("a:1", "a:1")
    assert not search(other, ctx, tdx)


def test_search_pairings_on_match(run, keys):
    ctx, tdx = run("a:1,b:2,c:3", "a:1 AND (b:2 OR z:0)")
    with count_ops() as ops:
        assert search(keys[Role.CLOUD], ctx, tdx)
    assert ops.pairings == ctx.m + tdx.l + 2


def test_correctness_identity_white_box(pp, keys):
    """Both sides of the recombination equation equal the closed-form target value."""
    s, r_sk = keys[Role.SENDER].sk, keys[Role.RECEIVER].sk
    c, a = keys[Role.CLOUD].sk, keys[Role.AUX].sk
    ws = ws_of("a:1,b:2,c:3")
    pol = pol_of("THRESHOLD(2; a:1, b:2, z:9) AND c:3")
    with exposed_randomness() as rec:
        ct = enc(pp, keys[Role.SENDER], keys[Role.CLOUD], keys[Role.AUX], ws)
        td = trap(pp, keys[Role.RECEIVER], keys[Role.CLOUD], keys[Role.AUX], pol)
        ctx = enc_trans(keys[Role.AUX], ct)
        tdx = trap_trans(keys[Role.AUX], td)
    # Rows 0, 1, 3 carry keywords present in ws; they map to ct slots 0, 1, 2.
    matched = {0: 0, 1: 1, 3: 2}
    gamma = reconstruct_coeffs([(j, pol.matrix[j]) for j in matched])
    assert gamma is not None

    ct_den = ctx.ct2 * ctx.ct3**c
    td_den = tdx.td2 * tdx.td3**c
    lhs_num = rhs_base = None
    for k, g in gamma.items():
        term = tdx.td11[k] ** (g * c % ORDER)
        lhs_num = term if lhs_num is None else lhs_num * term
        slot = (ctx.ct1[matched[k]] ** c / ct_den) ** g
        rhs_base = slot if rhs_base is None else rhs_base * slot
    lhs = pair(lhs_num / td_den, ctx.ct4)
    rhs = pair(rhs_base, tdx.td4)

    common = rec["x_hat"] * rec["x3"] * rec["y_hat"] * rec["y3"] * c * a * a * s * r_sk
    expected = None
    for k, g in gamma.items():
        h = hash_to_g1(pp, pol.leaf_keyword(k).encode())
        term = pair(h, G2Elem.generator()) ** (common * g % ORDER)
        expected = term if expected is None else expected * term
    assert lhs == rhs == expected
    assert search(keys[Role.CLOUD], ctx, tdx)
