"""Command-line front end: setup, keygen, encrypt, decrypt, policy
inspection, benchmarking, and the telemetry simulator.

Key material lives under ``$ABE_HOME`` (default ``~/.abekit``); all
output files are written via temp-then-rename so failures never leave
partial files behind.  Exit codes: 0 success, 1 crypto/policy/IO error,
2 usage error.  Errors print one machine-parseable line:
``ErrorClass: message``.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from pathlib import Path

from . import bench as bench_mod
from . import pipeline as pl
from . import schemes as sch
from .access_tree import AttributeBag, compile_policy, compile_text
from .container import SealedContainer, open_container, seal, seal_kp
from .errors import AbeError
from .pairing import SecurityLevel, suite_init
from .policy import parse_policy, print_policy

_LEVELS = {80: SecurityLevel.S80, 112: SecurityLevel.S112,
           128: SecurityLevel.S128}


def _home(args) -> Path:
    if getattr(args, "home", None):
        return Path(args.home)
    return Path(os.environ.get("ABE_HOME", Path.home() / ".abekit"))


def _atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".{path.name}.tmp"
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _rng(args) -> random.Random:
    if getattr(args, "seed", None) is not None:
        return random.Random(args.seed)
    return random.SystemRandom()


def _parse_bag(spec: str) -> AttributeBag:
    atoms, numeric = [], []
    for item in filter(None, (s.strip() for s in spec.split(","))):
        name, eq, value = item.partition("=")
        if eq and value.isdigit():
            numeric.append((name.strip(), int(value)))
        else:
            atoms.append(item)
    return AttributeBag.build(atoms, numeric)


def _paths(home: Path, scheme: str) -> dict:
    return {"params": home / f"{scheme}-params.bin",
            "master": home / f"{scheme}-master.bin",
            "universe": home / "kp-universe.bin"}


def _load_cp(home: Path):
    p = _paths(home, "cp")
    return sch.deserialize_cp_params(p["params"].read_bytes())


def _load_kp(home: Path):
    p = _paths(home, "kp")
    params = sch.deserialize_kp_params(p["params"].read_bytes())
    universe = sch.deserialize_kp_universe(params.suite,
                                           p["universe"].read_bytes())
    return params, universe


# --------------------------------------------------------------------------
# subcommands

def cmd_setup(args) -> int:
    home = Path(args.out) if args.out else _home(args)
    rng = _rng(args)
    suite = suite_init(_LEVELS[args.level])
    paths = _paths(home, args.scheme)
    if args.scheme == "cp":
        params, master = sch.cp_setup(suite, rng)
        _atomic_write(paths["params"], sch.serialize_cp_params(params))
        _atomic_write(paths["master"], sch.serialize_cp_master(suite, master))
    else:
        params, master, universe = sch.kp_setup(suite, rng)
        _atomic_write(paths["params"], sch.serialize_kp_params(params))
        _atomic_write(paths["master"], sch.serialize_kp_master(suite, master))
        _atomic_write(paths["universe"], sch.serialize_kp_universe(universe))
    print(f"setup: wrote {args.scheme} params and master key to {home}")
    return 0


def cmd_keygen(args) -> int:
    home = _home(args)
    rng = _rng(args)
    paths = _paths(home, args.scheme)
    if args.scheme == "cp":
        if not args.attrs:
            raise AbeError("cp keygen requires --attrs")
        params = _load_cp(home)
        master = sch.deserialize_cp_master(params.suite,
                                           paths["master"].read_bytes())
        bag = _parse_bag(args.attrs)
        key = sch.cp_keygen(params, master, bag, rng)
        blob = sch.serialize_cp_key(params.suite, key)
    else:
        if not args.policy:
            raise AbeError("kp keygen requires --policy")
        params, universe = _load_kp(home)
        master = sch.deserialize_kp_master(params.suite,
                                           paths["master"].read_bytes())
        tree = compile_text(args.policy)
        for leaf in tree.leaves():
            sch.kp_register(universe, master, leaf.attr)
        _atomic_write(paths["universe"], sch.serialize_kp_universe(universe))
        key = sch.kp_keygen(params, master, universe, tree, rng)
        blob = sch.serialize_kp_key(params.suite, key)
    _atomic_write(args.out, blob)
    print(f"keygen: wrote {args.scheme} key to {args.out}")
    return 0


def cmd_encrypt(args) -> int:
    home = _home(args)
    rng = _rng(args)
    payload = Path(args.infile).read_bytes()
    if args.scheme == "cp":
        if not args.policy:
            raise AbeError("cp encrypt requires --policy")
        params = _load_cp(home)
        container = seal(params, args.policy, payload, rng)
    else:
        if not args.attrs:
            raise AbeError("kp encrypt requires --attrs")
        params, universe = _load_kp(home)
        bag = _parse_bag(args.attrs)
        master_path = _paths(home, "kp")["master"]
        # auto-register unseen attributes when the master key is on hand
        if master_path.exists():
            master = sch.deserialize_kp_master(params.suite,
                                               master_path.read_bytes())
            for attr in sorted(bag.attrs):
                sch.kp_register(universe, master, attr)
            _atomic_write(_paths(home, "kp")["universe"],
                          sch.serialize_kp_universe(universe))
        container = seal_kp(params, universe, bag, payload, rng)
    _atomic_write(args.out, container.to_bytes())
    print(f"encrypt: wrote container to {args.out}")
    return 0


def cmd_decrypt(args) -> int:
    home = _home(args)
    blob = Path(args.key).read_bytes()
    container = SealedContainer.from_bytes(Path(args.infile).read_bytes())
    if container.scheme == sch.SCHEME_CP:
        params = _load_cp(home)
        key = sch.deserialize_cp_key(params.suite, blob)
    else:
        params, _universe = _load_kp(home)
        key = sch.deserialize_kp_key(params.suite, blob)
    payload = open_container(params, key, container)
    _atomic_write(args.out, payload)
    print(f"decrypt: wrote {len(payload)} bytes to {args.out}")
    return 0


def cmd_policy(args) -> int:
    ast = parse_policy(args.text)
    print(print_policy(ast))
    if args.explain:
        tree = compile_policy(ast)
        gates = tree.gate_counts()
        print(f"leaves: {tree.leaf_count}")
        print(f"and gates: {gates['and']}")
        print(f"or gates: {gates['or']}")
        print(f"threshold gates: {gates['threshold']}")
        print(f"depth: {tree.depth}")
    return 0


def _parse_range(spec: str) -> tuple:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(x) for x in spec.split(","))


def cmd_bench(args) -> int:
    config = bench_mod.BenchConfig(
        schemes=tuple(args.scheme.split(",")),
        levels=tuple(int(x) for x in args.levels.split(",")),
        attr_counts=_parse_range(args.attrs),
        trials=args.trials,
        shape=args.shape,
        profile=args.profile,
        seed=args.seed if args.seed is not None else 0,
    )
    records, summary = bench_mod.run_bench(config, csv_path=args.csv,
                                           summary_path=args.summary)
    print(f"bench: {len(records)} rows -> {args.csv}")
    if args.plot:
        written = bench_mod.plot_summary(summary, args.plot)
        for path in written:
            print(f"bench: plot {path}")
    return 0


def _addr(spec: str) -> tuple:
    host, _, port = spec.rpartition(":")
    return (host or "127.0.0.1", int(port))


def cmd_sim_send(args) -> int:
    home = _home(args)
    rng = _rng(args)
    params = _load_cp(home)
    out_dir = Path(args.dir) if args.dir else Path("sensor-data")
    files = pl.generate_streams(args.duration, out_dir,
                                seed=args.seed if args.seed is not None else 0)
    sender = pl.Sender(params, args.policy, _addr(args.server), rng=rng)
    rows = sender.send_files(files)
    sent = sum(1 for r in rows if r.status == "sent")
    print(f"sim-send: {sent}/{len(rows)} files sent to {args.server}")
    return 0


def cmd_sim_collect(args) -> int:
    home = _home(args)
    params = _load_cp(home)
    key = sch.deserialize_cp_key(params.suite, Path(args.key).read_bytes())
    collector = pl.Collector(_addr(args.bind), params, key)
    try:
        results = collector.run(expected_files=args.expect,
                                idle_timeout_s=args.timeout)
    finally:
        collector.close()
    ok = sum(1 for r in results if r.status == "ok")
    print(f"sim-collect: {ok}/{len(results)} files decrypted and verified")
    if args.report:
        rows = [{"cycle": r.file_id, "stream_type": r.stream,
                 "seal_ms": 0.0, "send_ms": 0.0,
                 "end_to_end_ms": r.end_to_end_ms, "status": r.status}
                for r in results]
        pl.LatencyReport(rows).write_csv(args.report)
        print(f"sim-collect: report -> {args.report}")
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="abekit")
    top.add_argument("--home", help="key directory (overrides ABE_HOME)")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, scheme=True):
        p.add_argument("--home", help="key directory (overrides ABE_HOME)")
        p.add_argument("--seed", type=int, help="deterministic RNG seed")
        if scheme:
            p.add_argument("--scheme", choices=("cp", "kp"), required=True)

    p = sub.add_parser("setup", help="generate public params + master key")
    common(p)
    p.add_argument("--level", type=int, choices=(80, 112, 128), default=80)
    p.add_argument("--out", help="output directory (default: key home)")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("keygen", help="issue a secret key")
    common(p)
    p.add_argument("--attrs", help="cp: comma list of attributes")
    p.add_argument("--policy", help="kp: key policy string")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encrypt", help="seal a file into a container")
    common(p)
    p.add_argument("--policy", help="cp: access policy")
    p.add_argument("--attrs", help="kp: ciphertext attributes")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="open a sealed container")
    common(p, scheme=False)
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("policy", help="parse and inspect a policy")
    p.add_argument("text")
    p.add_argument("--explain", action="store_true",
                   help="print compiled tree statistics")
    p.set_defaults(func=cmd_policy)

    p = sub.add_parser("bench", help="run the benchmark harness")
    p.add_argument("--scheme", default="cp,kp",
                   help="comma list from {cp,kp}")
    p.add_argument("--levels", default="80")
    p.add_argument("--attrs", default="1..30",
                   help="attribute counts: lo..hi or comma list")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--csv", required=True)
    p.add_argument("--summary")
    p.add_argument("--shape", choices=("and", "or", "random"), default="and")
    p.add_argument("--profile", choices=sorted(bench_mod.DEVICE_PROFILES),
                   default="edison")
    p.add_argument("--seed", type=int)
    p.add_argument("--plot", help="directory for SVG plots")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sim-send", help="generate + seal + send telemetry")
    common(p, scheme=False)
    p.add_argument("--policy", required=True)
    p.add_argument("--server", required=True, help="host:port")
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--dir", help="sensor data directory")
    p.set_defaults(func=cmd_sim_send)

    p = sub.add_parser("sim-collect", help="receive + decrypt telemetry")
    common(p, scheme=False)
    p.add_argument("--bind", required=True, help="host:port")
    p.add_argument("--key", required=True)
    p.add_argument("--expect", type=int)
    p.add_argument("--timeout", type=float, default=5.0)
    p.add_argument("--report", help="latency report CSV path")
    p.set_defaults(func=cmd_sim_collect)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AbeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
