import csv
import io
import random

import pytest

from eepaeks.groups import OpCounters
from eepaeks.harness import (
    CloudServer,
    Game,
    NullAdversary,
    ReplayAdversary,
    ScenarioConfig,
    Transcript,
    TranscriptEntry,
    ViolatingAdversary,
    game_driver,
    run_scenario,
)
from eepaeks.policy import KeywordSet
from eepaeks.scheme import Role, enc

CONFIG = """
[scenario]
num_senders = 2
num_receivers = 2
docs_per_sender = 2
seed = 5
documents =
    disease:flu, age:40
    disease:cold, age:50
queries =
    disease:flu AND age:40
    THRESHOLD(2; disease:cold, age:50, age:40)
"""


def test_config_parsing():
    cfg = ScenarioConfig.from_text(CONFIG)
    assert cfg.num_senders == 2 and cfg.docs_per_sender == 2
    assert cfg.documents == ["disease:flu, age:40", "disease:cold, age:50"]
    assert cfg.queries[1].startswith("THRESHOLD")
    with pytest.raises(ValueError):
        ScenarioConfig.from_text("[scenario]\nbogus = 1\n")
    with pytest.raises(ValueError):
        ScenarioConfig.from_text("[other]\n")
    with pytest.raises(ValueError):
        ScenarioConfig(num_senders=0)


def test_single_party_end_to_end():
    cfg = ScenarioConfig(documents=["disease:flu"], queries=["disease:flu"])
    tr = run_scenario(cfg)
    tr.check_dataflow()
    assert [len(r.documents) for r in tr.results] == [1]


def test_scenario_results_and_csv(tmp_path):
    tr = run_scenario(ScenarioConfig.from_text(CONFIG))
    tr.check_dataflow()
    assert len(tr.results) == 4
    for r in tr.results:
        if r.query.startswith("disease:flu"):
            assert r.documents == {b"sender-0/doc-0", b"sender-1/doc-0"}
        else:
            assert r.documents == {b"sender-0/doc-1", b"sender-1/doc-1"}
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert tuple(rows[0]) == Transcript.CSV_HEADER
    enc_rows = [r for r in rows[1:] if r[1] == "enc"]
    assert len(enc_rows) == 4 and all(r[3] == "6" and r[5] == "2" for r in enc_rows)
    # ciphertext bytes: 6-byte header, u32 count, m+2 G1 elements and one G2 element
    assert all(int(r[2]) == 6 + 4 + 4 * 48 + 96 for r in enc_rows)


def test_sender_counts_independent_of_receivers():
    counts = []
    for n in (1, 5):
        cfg = ScenarioConfig(num_receivers=n, documents=["a:1, b:2"], queries=["a:1"])
        tr = run_scenario(cfg)
        counts.append([e.ops for e in tr.rows("sender", "enc")])
    assert counts[0] == counts[1]


def test_dataflow_violations_detected():
    tr = run_scenario(ScenarioConfig(documents=["a:1"], queries=["a:1"]))
    bad = Transcript(list(tr.entries), [], dict(tr.actors))
    bad.entries.append(TranscriptEntry("sender-0", "enc", "Ciphertext", "cloud", 0, OpCounters()))
    with pytest.raises(AssertionError, match="to the cloud"):
        bad.check_dataflow()
    leaky = Transcript(list(tr.entries), [], dict(tr.actors))
    leaky.actors["aux"].stolen = tr.actors["cloud"].keys
    with pytest.raises(AssertionError, match="secret key"):
        leaky.check_dataflow()
    del leaky.actors["aux"].stolen


def test_cloud_rejects_untransformed(pp, keys):
    cloud = CloudServer("cloud", keys[Role.CLOUD], pp)
    raw = enc(pp, keys[Role.SENDER], keys[Role.CLOUD], keys[Role.AUX], KeywordSet.parse("a:1"))
    with pytest.raises(TypeError):
        cloud.store(raw, b"d")


@pytest.mark.parametrize("game", list(Game))
def test_games_run(game):
    for adv in (NullAdversary(1), ReplayAdversary(2)):
        res = game_driver(game, adv, random.Random(3), rounds=20)
        assert res.completed == 20 and res.rejections == 0
        assert 0 <= res.wins <= 20


@pytest.mark.parametrize("game", list(Game))
def test_violating_adversary_rejections_counted(game):
    adv = ViolatingAdversary(seed=4, violations=2)
    res = game_driver(game, adv, random.Random(4), rounds=5)
    assert res.rejections == adv.attempted == 10
    assert res.completed == 0 and res.aborted == 5


def test_challenge_restrictions():
    class BadChallenge(NullAdversary):
        def phase1(self, oracles):
            oracles.ct("a:1,b:2")

        def choose_challenge(self, view):
            return "a:1,b:2", "c:3,d:4"

    res = game_driver(Game.CI_AS, BadChallenge(0), random.Random(0), rounds=3)
    assert res.rejections == 3

    class Unequal(NullAdversary):
        def choose_challenge(self, view):
            return "a:1", "c:3,d:4"

    res = game_driver(Game.CI_CS, Unequal(0), random.Random(0), rounds=2)
    assert res.rejections == 2


def test_transform_oracles_only_in_cs_games(pp):
    seen = {}

    class Probe(NullAdversary):
        def phase1(self, oracles):
            seen[oracles.game] = oracles.tran_ct is not None

    for g in Game:
        game_driver(g, Probe(0), random.Random(0), rounds=1, pp=pp)
    assert seen == {Game.CI_AS: False, Game.TI_AS: False, Game.CI_CS: True, Game.TI_CS: True}


def test_invalid_adversary_key_rejected():
    class BadKey(NullAdversary):
        def begin_round(self, view):
            super().begin_round(view)
            from eepaeks.groups import G1Elem

            return G1Elem.identity()

    res = game_driver(Game.TI_CS, BadKey(0), random.Random(0), rounds=3)
    assert res.rejections == 3 and res.completed == 0

