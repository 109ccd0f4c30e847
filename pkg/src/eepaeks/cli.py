"""``eepaeks`` command-line tool.

Every key and object is a file path; every file is in the framed binary
format and can be read back by the subcommand that consumes it.

Exit codes: 0 success (``search``: match), 1 ``search`` found no match,
2 usage / syntax / role errors, 3 unreadable or malformed files.

Example pipeline::

    eepaeks setup --out pp.bin
    eepaeks keygen --pp pp.bin --role cloud --out cs.key      # also cs.key.pub
    eepaeks keygen --pp pp.bin --role aux --out as.key
    eepaeks keygen --pp pp.bin --role sender --out s.key
    eepaeks keygen --pp pp.bin --role receiver --out r.key
    eepaeks encrypt --pp pp.bin --sk s.key --pk-cloud cs.key.pub --pk-aux as.key.pub \\
        --keywords disease:flu --out ct.bin
    eepaeks trapdoor --pp pp.bin --sk r.key --pk-cloud cs.key.pub --pk-aux as.key.pub \\
        --query "disease:flu" --out td.bin
    eepaeks transform-ct --sk as.key --in ct.bin --out ctx.bin
    eepaeks transform-td --sk as.key --in td.bin --out tdx.bin
    eepaeks search --sk cs.key --in ctx.bin --trapdoor tdx.bin
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from contextlib import nullcontext
from pathlib import Path

from eepaeks import bench as benchmod
from eepaeks.groups import BACKEND_NAME, DecodeError, PublicParams, UnsupportedCurve, count_ops, setup
from eepaeks.harness import ScenarioConfig, run_scenario
from eepaeks.index import InvertedIndex, fast_search, init_index, insert_index
from eepaeks.policy import KeywordSet, PolicyError, compile_policy, parse_query
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
    keygen,
    search,
    trap,
    trap_trans,
)

EXIT_NO_MATCH = 1
EXIT_USAGE = 2
EXIT_BAD_FILE = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _read(path: str, what: str, decoder):
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CliError(f"cannot read {what} {path!r}: {e.strerror}", EXIT_BAD_FILE) from None
    try:
        return decoder(data)
    except DecodeError as e:
        raise CliError(f"{path}: malformed {what}: {e}", EXIT_BAD_FILE) from None


def _write(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise CliError(f"cannot write {path!r}: {e.strerror}", EXIT_BAD_FILE) from None


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise CliError(f"{args.command}: missing required option(s): {', '.join(missing)}")


def _pp(args) -> PublicParams:
    if args.pp is None:
        return setup()
    return _read(args.pp, "public parameters", PublicParams.from_bytes)


def _key(path: str, role: Role, secret: bool) -> KeyPair:
    key = _read(path, "key", KeyPair.from_bytes)
    if key.role != role:
        raise CliError(f"{path}: expected a {role.name.lower()} key, got {key.role.name.lower()}")
    if secret and key.sk is None:
        raise CliError(f"{path}: {role.name.lower()} key file has no secret part (pass the key, not the .pub)")
    return key


def _rng(args):
    return random.Random(args.seed) if args.seed is not None else None


# -- subcommands -------------------------------------------------------------------


def cmd_setup(args) -> int:
    _need(args, "out")
    _write(args.out, setup(args.curve).to_bytes())
    return 0


def cmd_keygen(args) -> int:
    _need(args, "role", "out")
    pp = _pp(args)
    key = keygen(pp, Role.parse(args.role), _rng(args))
    _write(args.out, key.to_bytes(pp.curve_code))
    _write(args.out + ".pub", key.public().to_bytes(pp.curve_code))
    return 0


def cmd_encrypt(args) -> int:
    _need(args, "sk", "pk_cloud", "pk_aux", "keywords", "out")
    pp = _pp(args)
    ws = KeywordSet.parse(args.keywords)
    ct = enc(
        pp,
        _key(args.sk, Role.SENDER, True),
        _key(args.pk_cloud, Role.CLOUD, False).pk,
        _key(args.pk_aux, Role.AUX, False).pk,
        ws,
        _rng(args),
    )
    _write(args.out, ct.to_bytes())
    return 0


def cmd_trapdoor(args) -> int:
    _need(args, "sk", "pk_cloud", "pk_aux", "query", "out")
    pp = _pp(args)
    policy = compile_policy(parse_query(args.query))
    td = trap(
        pp,
        _key(args.sk, Role.RECEIVER, True),
        _key(args.pk_cloud, Role.CLOUD, False).pk,
        _key(args.pk_aux, Role.AUX, False).pk,
        policy,
        _rng(args),
    )
    _write(args.out, td.to_bytes())
    return 0


def cmd_transform_ct(args) -> int:
    _need(args, "sk", "in_", "out")
    ct = _read(args.in_, "ciphertext", Ciphertext.from_bytes)
    _write(args.out, enc_trans(_key(args.sk, Role.AUX, True), ct, _rng(args)).to_bytes())
    return 0


def cmd_transform_td(args) -> int:
    _need(args, "sk", "in_", "out")
    td = _read(args.in_, "trapdoor", Trapdoor.from_bytes)
    _write(args.out, trap_trans(_key(args.sk, Role.AUX, True), td, _rng(args)).to_bytes())
    return 0


def cmd_search(args) -> int:
    _need(args, "sk", "in_", "trapdoor")
    ct = _read(args.in_, "transformed ciphertext", TransformedCiphertext.from_bytes)
    td = _read(args.trapdoor, "transformed trapdoor", TransformedTrapdoor.from_bytes)
    hit = search(_key(args.sk, Role.CLOUD, True), ct, td)
    print("match" if hit else "no match")
    return 0 if hit else EXIT_NO_MATCH


def _load_index(args, pp) -> InvertedIndex:
    if Path(args.index).exists():
        return _read(args.index, "index", InvertedIndex.from_bytes)
    return init_index(pp)


def cmd_index_insert(args) -> int:
    _need(args, "sk", "in_", "index", "doc")
    pp = _pp(args)
    idx = _load_index(args, pp)
    ct = _read(args.in_, "transformed ciphertext", TransformedCiphertext.from_bytes)
    insert_index(pp, ct, idx, _key(args.sk, Role.CLOUD, True), args.doc)
    _write(args.index, idx.to_bytes())
    return 0


def cmd_index_search(args) -> int:
    _need(args, "sk", "in_", "index")
    pp = _pp(args)
    if not Path(args.index).exists():
        raise CliError(f"cannot read index {args.index!r}: no such file", EXIT_BAD_FILE)
    idx = _read(args.index, "index", InvertedIndex.from_bytes)
    td = _read(args.in_, "transformed trapdoor", TransformedTrapdoor.from_bytes)
    for ref in sorted(fast_search(pp, td, idx, _key(args.sk, Role.CLOUD, True))):
        print(ref.decode("utf-8", "backslashreplace"))
    return 0


def _range(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        lo, _, hi = part.partition("-")
        try:
            lo_i = int(lo)
            hi_i = int(hi) if hi else lo_i
        except ValueError:
            raise CliError(f"bad range {text!r}; use e.g. 1-20 or 1,5,10") from None
        if lo_i < 1 or hi_i < lo_i:
            raise CliError(f"bad range {text!r}")
        out.extend(range(lo_i, hi_i + 1))
    return out


def cmd_bench(args) -> int:
    if args.compare_backends:
        rows = benchmod.compare_backends(args.trials)
        keys = ["kernel", "native_ns", "purepy_ns", "speedup"]
        print(",".join(keys))
        for r in rows:
            print(",".join(f"{r[k]:.1f}" if isinstance(r.get(k), float) else str(r.get(k, "")) for k in keys))
        return 0
    ms, ls = _range(args.m), _range(args.l)
    sizes = [(m, l) for m in ms for l in ls]
    rows = benchmod.run_bench(sizes, trials=args.trials, count_only=args.count_ops, seed=args.seed or 0)
    bad = []
    for r in rows:
        exp = benchmod.expected_counts(r.op, r.m, r.l)
        got = r.counts.as_dict()
        if any(got[k] != v for k, v in exp.items()):
            bad.append(f"{r.op} m={r.m} l={r.l}: expected {exp}, got {got}")
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else nullcontext(sys.stdout)
    with out as fp:
        benchmod.write_csv(rows, fp)
    if args.linearity:
        lin = benchmod.enc_linearity(trials=args.trials)
        print(f"enc slope {lin.slope:.0f} ns/keyword, R^2 {lin.r_squared:.4f}", file=sys.stderr)
    for line in bad:
        print(f"count mismatch: {line}", file=sys.stderr)
    return 1 if bad else 0


def cmd_scenario(args) -> int:
    _need(args, "config")
    try:
        cfg = ScenarioConfig.from_file(args.config)
    except OSError as e:
        raise CliError(f"cannot read {args.config!r}: {e.strerror}", EXIT_BAD_FILE) from None
    except (ValueError, KeyError) as e:
        raise CliError(f"{args.config}: {e}") from None
    tr = run_scenario(cfg)
    tr.check_dataflow()
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else nullcontext(sys.stdout)
    with out as fp:
        tr.write_csv(fp)
    for r in tr.results:
        docs = " ".join(sorted(d.decode() for d in r.documents)) or "-"
        print(f"{r.receiver}\t{r.query}\t{docs}", file=sys.stderr)
    return 0


COMMANDS = {
    "setup": (cmd_setup, "write public parameters"),
    "keygen": (cmd_keygen, "generate a key pair for one role (writes OUT and OUT.pub)"),
    "encrypt": (cmd_encrypt, "encrypt a keyword set (sender)"),
    "trapdoor": (cmd_trapdoor, "build a trapdoor for a boolean query (receiver)"),
    "transform-ct": (cmd_transform_ct, "re-randomize a ciphertext (auxiliary server)"),
    "transform-td": (cmd_transform_td, "re-randomize a trapdoor (auxiliary server)"),
    "search": (cmd_search, "test a transformed ciphertext against a transformed trapdoor (cloud)"),
    "index-insert": (cmd_index_insert, "add a transformed ciphertext to an index file (cloud)"),
    "index-search": (cmd_index_search, "list documents in an index matching a transformed trapdoor"),
    "bench": (cmd_bench, "operation counts and timings as CSV"),
    "scenario": (cmd_scenario, "run a multi-party scenario and write its transcript CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pp", help="public parameters file (default: built-in curve parameters)")
    common.add_argument("--sk", help="own key file")
    common.add_argument("--pk-cloud", help="cloud server public key file")
    common.add_argument("--pk-aux", help="auxiliary server public key file")
    common.add_argument("--in", dest="in_", metavar="IN", help="input object file")
    common.add_argument("--out", help="output file")
    common.add_argument("--index", help="index file")
    common.add_argument("--seed", type=int, help="deterministic RNG seed (testing only)")
    common.add_argument("--count-ops", action="store_true", help="report operation counts on stderr")

    p = argparse.ArgumentParser(
        prog="eepaeks",
        description="Public-key authenticated keyword search with boolean queries.",
        epilog="exit codes: 0 ok / match, 1 no match (search), 2 usage error, 3 bad file",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({BACKEND_NAME})")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    parsers = {}
    for name, (_, help_) in COMMANDS.items():
        parsers[name] = sub.add_parser(name, parents=[common], help=help_, description=help_)
    parsers["setup"].add_argument("--curve", help="curve id (default: $EEPAEKS_CURVE or bls12_381)")
    parsers["keygen"].add_argument("--role", help="cloud | aux | sender | receiver")
    parsers["encrypt"].add_argument("--keywords", help="name:value[,name:value...]")
    parsers["trapdoor"].add_argument("--query", help='e.g. "disease:flu AND (age:40 OR age:50)"')
    parsers["search"].add_argument("--trapdoor", help="transformed trapdoor file")
    parsers["index-insert"].add_argument("--doc", help="document reference stored with the ciphertext")
    b = parsers["bench"]
    b.add_argument("--m", default="1-5", help="keyword counts, e.g. 1-20 or 10,50,100")
    b.add_argument("--l", default="1-5", help="policy row counts")
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--linearity", action="store_true", help="also fit enc time vs m over 10..100")
    b.add_argument("--compare-backends", action="store_true", help="time group kernels on each backend")
    parsers["scenario"].add_argument("--config", help="scenario INI file")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = COMMANDS[args.command][0]
    counting = args.count_ops and args.command != "bench"
    try:
        with count_ops() if counting else nullcontext() as ops:
            code = func(args)
    except CliError as e:
        print(f"eepaeks {args.command}: {e}", file=sys.stderr)
        return e.code
    except PolicyError as e:
        print(f"eepaeks {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemeError, UnsupportedCurve) as e:
        print(f"eepaeks {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    if counting:
        print(json.dumps(ops.as_dict()), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
