"""In-process four-party simulation and security-game drivers.

:func:`run_scenario` wires senders, receivers, the auxiliary server (AS) and
the cloud server (CS) together and records every message with its size and
operation counts.  :func:`game_driver` runs the four indistinguishability
games as statistical smoke tests against pluggable adversaries.

Scenario files are INI-style, one ``[scenario]`` section::

    [scenario]
    num_senders = 2
    num_receivers = 1
    keywords_per_doc = 2
    docs_per_sender = 3
    seed = 7
    vocabulary = disease:flu, disease:cold, age:40, age:50
    # optional: explicit documents, one keyword list per line, sent by every sender
    documents =
        disease:flu, age:40
    queries =
        disease:flu AND age:40
        disease:cold OR age:50
"""

from __future__ import annotations

import configparser
import csv
import io
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence, TextIO

from eepaeks.groups import G1Elem, OpCounters, PublicParams, count_ops, setup
from eepaeks.index import InvertedIndex, fast_search, init_index, insert_index
from eepaeks.policy import (
    Keyword,
    KeywordPolicy,
    KeywordSet,
    compile_policy,
    parse_query,
    policy_satisfied_by,
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
    trap,
    trap_trans,
)

DEFAULT_VOCABULARY = (
    "disease:flu",
    "disease:cold",
    "disease:hypertension",
    "disease:diabetes",
    "age:40",
    "age:50",
    "dept:cardiology",
    "dept:oncology",
)


@dataclass
class ScenarioConfig:
    num_senders: int = 1
    num_receivers: int = 1
    keywords_per_doc: int = 2
    docs_per_sender: int = 1
    queries: list[str] = field(default_factory=list)
    seed: int = 0
    vocabulary: list[str] = field(default_factory=lambda: list(DEFAULT_VOCABULARY))
    documents: list[str] | None = None

    def __post_init__(self):
        for name in ("num_senders", "num_receivers", "keywords_per_doc", "docs_per_sender"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.documents is None and self.keywords_per_doc > len(self.vocabulary):
            raise ValueError("keywords_per_doc exceeds the vocabulary size")

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=None)
        cp.read_string(text)
        if "scenario" not in cp:
            raise ValueError("scenario file needs a [scenario] section")
        sec = cp["scenario"]
        known = {
            "num_senders", "num_receivers", "keywords_per_doc", "docs_per_sender",
            "seed", "vocabulary", "documents", "queries",
        }
        unknown = set(sec) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")

        def lines(key):
            return [ln.strip() for ln in sec.get(key, "").splitlines() if ln.strip()]

        kwargs = {k: sec.getint(k) for k in known - {"vocabulary", "documents", "queries"} if k in sec}
        if "vocabulary" in sec:
            kwargs["vocabulary"] = [w.strip() for w in sec["vocabulary"].replace("\n", ",").split(",") if w.strip()]
        if "documents" in sec:
            kwargs["documents"] = lines("documents")
        kwargs["queries"] = lines("queries")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass
class TranscriptEntry:
    actor: str
    step: str
    message: str  # type of the object produced
    recipient: str
    nbytes: int
    ops: OpCounters


@dataclass
class QueryResult:
    receiver: str
    query: str
    documents: set[bytes]


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)
    results: list[QueryResult] = field(default_factory=list)
    actors: dict[str, object] = field(default_factory=dict)

    CSV_HEADER = ("actor", "step", "bytes", "exps", "muls", "hashes", "pairings")

    def rows(self, actor_prefix: str = "", step: str | None = None) -> list[TranscriptEntry]:
        return [
            e for e in self.entries
            if e.actor.startswith(actor_prefix) and (step is None or e.step == step)
        ]

    def write_csv(self, fp: TextIO) -> None:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for e in self.entries:
            w.writerow([e.actor, e.step, e.nbytes, e.ops.exps, e.ops.muls, e.ops.hashes, e.ops.pairings])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def check_dataflow(self) -> None:
        """Raise AssertionError if an untransformed object ever reached the cloud."""
        for e in self.entries:
            if e.recipient == "cloud" and e.message not in ("TransformedCiphertext", "TransformedTrapdoor"):
                raise AssertionError(f"{e.actor} sent {e.message} to the cloud server")
            if e.actor == "aux" and e.step != "keygen" and e.recipient != "cloud":
                raise AssertionError("auxiliary server output must go to the cloud server")
        for name, actor in self.actors.items():
            leaked = _held_secrets(actor) - {actor.keys.sk}
            if leaked:
                raise AssertionError(f"{name} holds another party's secret key")


# -- actors ---------------------------------------------------------------------------


class _Actor:
    def __init__(self, name: str, keys: KeyPair):
        self.name = name
        self.keys = keys


class Sender(_Actor):
    def encrypt(self, pp, pk_c, pk_a, ws, rng) -> Ciphertext:
        return enc(pp, self.keys, pk_c, pk_a, ws, rng)


class Receiver(_Actor):
    def query(self, pp, pk_c, pk_a, policy, rng) -> Trapdoor:
        return trap(pp, self.keys, pk_c, pk_a, policy, rng)


class AuxServer(_Actor):
    def transform_ct(self, ct: Ciphertext, rng) -> TransformedCiphertext:
        return enc_trans(self.keys, ct, rng)

    def transform_td(self, td: Trapdoor, rng) -> TransformedTrapdoor:
        return trap_trans(self.keys, td, rng)


class CloudServer(_Actor):
    def __init__(self, name: str, keys: KeyPair, pp: PublicParams):
        super().__init__(name, keys)
        self.pp = pp
        self.index: InvertedIndex = init_index(pp)

    def store(self, ct: TransformedCiphertext, doc_ref: bytes) -> None:
        if not isinstance(ct, TransformedCiphertext):
            raise TypeError("cloud server only accepts transformed ciphertexts")
        insert_index(self.pp, ct, self.index, self.keys, doc_ref)

    def answer(self, td: TransformedTrapdoor) -> set[bytes]:
        if not isinstance(td, TransformedTrapdoor):
            raise TypeError("cloud server only accepts transformed trapdoors")
        return fast_search(self.pp, td, self.index, self.keys)


def _held_secrets(obj, _seen=None) -> set[int]:
    """Every secret key reachable from ``obj``'s attributes."""
    seen = _seen if _seen is not None else set()
    if id(obj) in seen:
        return set()
    seen.add(id(obj))
    if isinstance(obj, KeyPair):
        return {obj.sk} if obj.sk is not None else set()
    out: set[int] = set()
    if isinstance(obj, (list, tuple, set)):
        for x in obj:
            out |= _held_secrets(x, seen)
    elif isinstance(obj, dict):
        for x in obj.values():
            out |= _held_secrets(x, seen)
    elif hasattr(obj, "__dict__") and not isinstance(obj, type):
        for x in vars(obj).values():
            out |= _held_secrets(x, seen)
    return out


def run_scenario(cfg: ScenarioConfig, pp: PublicParams | None = None) -> Transcript:
    pp = pp or setup()
    rng = random.Random(cfg.seed)
    doc_rng = random.Random(cfg.seed ^ 0x5EED)
    tr = Transcript()

    def step(actor, name, produce, recipient):
        with count_ops() as ops:
            obj = produce()
        nbytes = len(obj.to_bytes()) if hasattr(obj, "to_bytes") else 0
        tr.entries.append(TranscriptEntry(actor, name, type(obj).__name__, recipient, nbytes, ops))
        return obj

    cloud = CloudServer("cloud", step("cloud", "keygen", lambda: keygen(pp, Role.CLOUD, rng), "-"), pp)
    aux = AuxServer("aux", step("aux", "keygen", lambda: keygen(pp, Role.AUX, rng), "-"))
    senders = [
        Sender(f"sender-{k}", step(f"sender-{k}", "keygen", lambda: keygen(pp, Role.SENDER, rng), "-"))
        for k in range(cfg.num_senders)
    ]
    receivers = [
        Receiver(f"receiver-{k}", step(f"receiver-{k}", "keygen", lambda: keygen(pp, Role.RECEIVER, rng), "-"))
        for k in range(cfg.num_receivers)
    ]
    pk_c, pk_a = cloud.keys.pk, aux.keys.pk
    tr.actors = {a.name: a for a in (cloud, aux, *senders, *receivers)}

    vocab = [Keyword.parse(w) for w in cfg.vocabulary]
    for s in senders:
        for d in range(cfg.docs_per_sender):
            if cfg.documents:
                ws = KeywordSet.parse(cfg.documents[d % len(cfg.documents)])
            else:
                ws = KeywordSet(doc_rng.sample(vocab, cfg.keywords_per_doc))
            ref = f"{s.name}/doc-{d}".encode()
            ct = step(s.name, "enc", lambda: s.encrypt(pp, pk_c, pk_a, ws, rng), "aux")
            ctx = step("aux", "enc_trans", lambda: aux.transform_ct(ct, rng), "cloud")
            with count_ops() as ops:
                cloud.store(ctx, ref)
            tr.entries.append(TranscriptEntry("cloud", "insert_index", "InvertedIndex", "-", 0, ops))

    policies = [(q, compile_policy(parse_query(q))) for q in cfg.queries]
    for r in receivers:
        for q, pol in policies:
            td = step(r.name, "trap", lambda: r.query(pp, pk_c, pk_a, pol, rng), "aux")
            tdx = step("aux", "trap_trans", lambda: aux.transform_td(td, rng), "cloud")
            with count_ops() as ops:
                docs = cloud.answer(tdx)
            tr.entries.append(TranscriptEntry("cloud", "fast_search", "set", r.name, 0, ops))
            tr.results.append(QueryResult(r.name, q, docs))
    return tr


# -- security games ------------------------------------------------------------------


class Game(str, Enum):
    CI_AS = "CI-AS"
    CI_CS = "CI-CS"
    TI_AS = "TI-AS"
    TI_CS = "TI-CS"

    @property
    def adversary_role(self) -> Role:
        return Role.AUX if self.value.endswith("AS") else Role.CLOUD

    @property
    def on_ciphertexts(self) -> bool:
        return self.value.startswith("CI")


class RestrictionViolation(Exception):
    """An oracle query or challenge broke the game's admissibility rules."""


@dataclass
class GameView:
    game: Game
    pp: PublicParams
    public_keys: dict[Role, G1Elem]


def _as_policy(p) -> KeywordPolicy:
    if isinstance(p, KeywordPolicy):
        return p
    if isinstance(p, str):
        p = parse_query(p)
    return compile_policy(p)


def _as_keywords(ws) -> KeywordSet:
    if isinstance(ws, KeywordSet):
        return ws
    if isinstance(ws, str):
        return KeywordSet.parse(ws)
    return KeywordSet(ws)


class GameOracleSet:
    """Oracle handles for one round.  ``tran_ct``/``tran_td`` exist only in CS games."""

    def __init__(self, game: Game, pp, keys: dict[Role, KeyPair], pk_adv: G1Elem, rng):
        self.game = game
        self._pp = pp
        self._keys = keys
        self._pk_c = keys[Role.CLOUD].pk if Role.CLOUD in keys else pk_adv
        self._pk_a = keys[Role.AUX].pk if Role.AUX in keys else pk_adv
        self._rng = rng
        self.ct_queries: list[KeywordSet] = []
        self.td_queries: list[KeywordPolicy] = []
        self.challenge: tuple | None = None
        self.rejections = 0
        if game.adversary_role is Role.AUX:
            self.tran_ct = None
            self.tran_td = None

    def _reject(self, why: str):
        self.rejections += 1
        raise RestrictionViolation(why)

    def ct(self, ws) -> Ciphertext:
        ws = _as_keywords(ws)
        if self.challenge is not None:
            self._check_ct_query(ws)
        self.ct_queries.append(ws)
        return enc(self._pp, self._keys[Role.SENDER], self._pk_c, self._pk_a, ws, self._rng)

    def td(self, policy) -> Trapdoor:
        policy = _as_policy(policy)
        if self.challenge is not None:
            self._check_td_query(policy)
        self.td_queries.append(policy)
        return trap(self._pp, self._keys[Role.RECEIVER], self._pk_c, self._pk_a, policy, self._rng)

    def tran_ct(self, ct: Ciphertext) -> TransformedCiphertext:  # noqa: F811 - hidden in AS games
        return enc_trans(self._keys[Role.AUX], ct, self._rng)

    def tran_td(self, td: Trapdoor) -> TransformedTrapdoor:  # noqa: F811
        return trap_trans(self._keys[Role.AUX], td, self._rng)

    # admissibility ------------------------------------------------------------

    def _challenge_keywords(self) -> set[Keyword]:
        x0, x1 = self.challenge
        if self.game.on_ciphertexts:
            return set(x0) | set(x1)
        return set(x0.leaves) | set(x1.leaves)

    def _check_ct_query(self, ws: KeywordSet) -> None:
        if self.game is Game.CI_AS and set(ws) in (set(x) for x in self.challenge):
            self._reject("challenge keyword set queried to the ciphertext oracle")
        if self.game is Game.TI_AS and any(policy_satisfied_by(p, ws) for p in self.challenge):
            self._reject("queried keyword set satisfies a challenge policy")
        if self.game in (Game.CI_CS, Game.TI_CS) and set(ws) & self._challenge_keywords():
            self._reject("challenge keyword queried to the ciphertext oracle")

    def _check_td_query(self, policy: KeywordPolicy) -> None:
        if self.game is Game.CI_AS and any(policy_satisfied_by(policy, w) for w in self.challenge):
            self._reject("queried policy is satisfied by a challenge keyword set")
        if self.game is Game.TI_AS and any(_same_policy(policy, p) for p in self.challenge):
            self._reject("challenge policy queried to the trapdoor oracle")
        if self.game in (Game.CI_CS, Game.TI_CS) and set(policy.leaves) & self._challenge_keywords():
            self._reject("challenge keyword queried to the trapdoor oracle")

    def set_challenge(self, x0, x1) -> None:
        if self.game.on_ciphertexts:
            x0, x1 = _as_keywords(x0), _as_keywords(x1)
            if len(x0) != len(x1):
                self._reject("challenge keyword sets differ in size")
        else:
            x0, x1 = _as_policy(x0), _as_policy(x1)
            if (x0.rows, x0.cols) != (x1.rows, x1.cols):
                self._reject("challenge policies differ in size")
        self.challenge = (x0, x1)
        try:
            for ws in self.ct_queries:
                self._check_ct_query(ws)
            for p in self.td_queries:
                self._check_td_query(p)
        except RestrictionViolation:
            self.challenge = None
            raise


def _same_policy(a: KeywordPolicy, b: KeywordPolicy) -> bool:
    return (a.matrix, a.pi, a.leaves) == (b.matrix, b.pi, b.leaves)


class Adversary:
    """Base adversary: plays the server role honestly and guesses at random."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)
        self.own_key: KeyPair | None = None

    def begin_round(self, view: GameView) -> G1Elem:
        self.own_key = keygen(view.pp, view.game.adversary_role, self.rng)
        return self.own_key.pk

    def phase1(self, oracles: GameOracleSet) -> None:
        pass

    def choose_challenge(self, view: GameView):
        if view.game.on_ciphertexts:
            return "chal:zero", "chal:one"
        return "chal:zero", "chal:one"

    def phase2(self, oracles: GameOracleSet, challenge) -> None:
        pass

    def guess(self, challenge) -> int:
        return self.rng.getrandbits(1)


class NullAdversary(Adversary):
    pass


def _element_bytes(obj) -> set[bytes]:
    out = set()
    for name in ("ct1", "td11", "td12"):
        for x in getattr(obj, name, ()):
            out.add(x.to_bytes())
    for name in ("ct2", "ct3", "ct4", "td2", "td3", "td4"):
        x = getattr(obj, name, None)
        if x is not None:
            out.add(x.to_bytes())
    return out


class ReplayAdversary(Adversary):
    """Looks for group elements shared between the challenge and oracle replies.

    It queries inputs that overlap each challenge candidate as far as the game
    allows; a deterministic component would show up as a byte-equal element.
    """

    def _queries(self, game: Game):
        if game is Game.CI_AS:
            return ("chal:zero,side:a", "chal:one,side:a")
        if game is Game.TI_AS:
            return ("chal:zero OR side:a", "chal:one OR side:a")
        # CS games forbid any overlap with challenge keywords.
        return ("side:a", "side:b")

    def phase1(self, oracles: GameOracleSet) -> None:
        self.seen = ([], [])
        self._ask(oracles)

    def phase2(self, oracles: GameOracleSet, challenge) -> None:
        self._ask(oracles)
        self.challenge_bytes = _element_bytes(challenge)
        if oracles.tran_ct is not None:
            tr = oracles.tran_ct(challenge) if oracles.game.on_ciphertexts else oracles.tran_td(challenge)
            self.challenge_bytes |= _element_bytes(tr)

    def _ask(self, oracles: GameOracleSet) -> None:
        q0, q1 = self._queries(oracles.game)
        ask = oracles.ct if oracles.game.on_ciphertexts else oracles.td
        for side, q in ((0, q0), (1, q1)):
            reply = ask(q)
            self.seen[side].append(_element_bytes(reply))
            if oracles.tran_ct is not None:
                tr = oracles.tran_ct(reply) if oracles.game.on_ciphertexts else oracles.tran_td(reply)
                self.seen[side].append(_element_bytes(tr))

    def guess(self, challenge) -> int:
        hits = [sum(len(self.challenge_bytes & s) for s in self.seen[side]) for side in (0, 1)]
        if hits[0] != hits[1]:
            return 0 if hits[0] > hits[1] else 1
        return self.rng.getrandbits(1)


class ViolatingAdversary(Adversary):
    """Issues ``violations`` inadmissible queries per round after the challenge."""

    def __init__(self, seed: int = 0, violations: int = 1):
        super().__init__(seed)
        self.violations = violations
        self.attempted = 0

    def phase2(self, oracles: GameOracleSet, challenge) -> None:
        for _ in range(self.violations):
            self.attempted += 1
            try:
                if oracles.game is Game.CI_AS:
                    oracles.ct("chal:zero")
                elif oracles.game is Game.TI_AS:
                    oracles.td("chal:zero")
                else:
                    oracles.ct("chal:zero,side:x")
            except RestrictionViolation:
                pass


@dataclass
class GameResult:
    game: Game
    rounds: int
    completed: int
    wins: int
    rejections: int
    aborted: int

    @property
    def advantage(self) -> float:
        return abs(self.wins / self.completed - 0.5) if self.completed else 0.0

    @property
    def bound_3sigma(self) -> float:
        """Three binomial standard deviations of wins/N around 1/2."""
        return 3 * (0.25 / self.completed) ** 0.5 if self.completed else float("inf")


def game_driver(
    game: Game | str,
    adversary: Adversary,
    rng: random.Random,
    rounds: int = 10_000,
    pp: PublicParams | None = None,
) -> GameResult:
    """Play ``rounds`` independent rounds and estimate |Pr[b' = b] - 1/2|."""
    game = Game(game)
    pp = pp or setup()
    wins = completed = rejections = aborted = 0
    honest_roles = [r for r in Role if r is not game.adversary_role]
    for _ in range(rounds):
        keys = {r: keygen(pp, r, rng) for r in honest_roles}
        view = GameView(game, pp, {r: k.pk for r, k in keys.items()})
        pk_adv = adversary.begin_round(view)
        oracles = GameOracleSet(game, pp, keys, pk_adv, rng)
        if not isinstance(pk_adv, G1Elem) or pk_adv.is_identity() or not pk_adv.in_group():
            rejections += 1
            aborted += 1
            continue
        try:
            adversary.phase1(oracles)
            x0, x1 = adversary.choose_challenge(view)
            oracles.set_challenge(x0, x1)
            b = rng.getrandbits(1)
            xb = oracles.challenge[b]
            if game.on_ciphertexts:
                chal = enc(pp, keys[Role.SENDER], oracles._pk_c, oracles._pk_a, xb, rng)
            else:
                chal = trap(pp, keys[Role.RECEIVER], oracles._pk_c, oracles._pk_a, xb, rng)
            adversary.phase2(oracles, chal)
            guess = adversary.guess(chal)
        except RestrictionViolation:
            pass
        rejections += oracles.rejections
        if oracles.rejections:
            aborted += 1
            continue
        completed += 1
        wins += int(guess == b)
    return GameResult(game, rounds, completed, wins, rejections, aborted)


def run_games(
    adversaries: Sequence[type[Adversary]] = (NullAdversary, ReplayAdversary),
    rounds: int = 10_000,
    seed: int = 0,
) -> list[GameResult]:
    pp = setup()
    out = []
    for k, game in enumerate(Game):
        for j, cls in enumerate(adversaries):
            rng = random.Random(seed * 1000 + k * 10 + j)
            out.append(game_driver(game, cls(seed=rng.getrandbits(32)), rng, rounds, pp))
    return out
