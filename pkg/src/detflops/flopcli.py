"""Command-line front end: ``gen``, ``verify``, ``cone`` and ``oracle``.

Every command writes sorted-key JSON without timestamps, so re-running a
command on the same inputs reproduces its output byte for byte.  Exit codes:
0 ok, 1 diagram failure, 2 bad parameters, 3 degenerate instance, 4
inconsistent fan, 5 depth exhausted, 6 oracle inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field, fields as dc_fields
from pathlib import Path
from typing import Sequence

from .chamberwalk import (InconsistentFan, StabilizerObstruction, bir_generators, chamber_bfs, classify_generator,
                          fundamental_domain, verify_fan)
from .exactnum import parse_field
from .flopengine import FlopMap, check_diagram
from .picardlattice import (CalibrationUnavailable, OracleInconclusive, calibrate_all,
                            load_fixtures, pushforward_matrix, save_fixtures, shipped_fixture_path)
from .picardlattice.lattice import identity
from .tensorcore import Degenerate, Instance, InstanceFormatError, check_nondegenerate, random_instance
from .varprobe import rank_locus_scan, smoothness_scan

EXIT_OK, EXIT_DIAGRAM, EXIT_PARAMS, EXIT_DEGENERATE, EXIT_FAN, EXIT_DEPTH, EXIT_ORACLE = 0, 1, 2, 3, 4, 5, 6


class ParamError(ValueError):
    pass


@dataclass
class RunConfig:
    """Budgets and paths for one command; ``from_dict`` rejects unknown keys."""

    command: str
    instance: str | None = None
    fields: list[str] = dc_field(default_factory=lambda: ["3"])
    budget: int = 10**6
    samples: int = 200
    retries: int = 64
    diagram_points: int = 100
    diagram_field: str = "7"
    depth_limit: int = 3
    ball_radius: int = 4
    out: str | None = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("budget", "samples", "retries", "diagram_points", "depth_limit", "ball_radius", "threads"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                # depth 0 is allowed: it only reports the initial walls
                if name == "depth_limit" and v == 0:
                    continue
                raise ParamError(f"{name} must be a positive integer, got {v!r}")
        try:
            [parse_field(f) for f in self.fields]
            parse_field(self.diagram_field)
        except ValueError as exc:
            raise ParamError(str(exc)) from exc

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParamError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def field_specs(self):
        return [parse_field(f) for f in self.fields]


def dump_json(obj, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n")


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _pmap(fn, jobs: list, threads: int) -> list:
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(job) for job in jobs]


def _load_instance(path: str) -> Instance:
    try:
        return Instance.load(path)
    except (OSError, InstanceFormatError) as exc:
        raise ParamError(f"cannot read instance {path}: {exc}") from exc


# -- gen ------------------------------------------------------------------------------

def cmd_gen(n: int, N: int, seed: int, bound: int, out: str | None) -> int:
    if n < 1 or N < 2 or bound < 1:
        raise ParamError(f"need n >= 1, N >= 2 and bound >= 1 (got n={n}, N={N}, bound={bound})")
    inst = random_instance(n, N, seed, bound)
    out = out or f"instance_n{n}_N{N}_seed{seed}.json"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    inst.save(out)
    print(f"dim X = {inst.dim}, models = {inst.model_count}")
    if inst.dim < 3:
        _warn(f"dim X = {inst.dim} < 3: the minimal model count bound is only stated for dim X >= 3")
    print(f"wrote {out}")
    return EXIT_OK


# -- verify ---------------------------------------------------------------------------

def _smooth_job(job):
    inst, ell, fields, cfg = job
    return smoothness_scan(inst, ell, [parse_field(f) for f in fields], cfg.budget, cfg.samples, cfg.seed).to_json()


def _rank_job(job):
    inst, pair, cfg = job
    return rank_locus_scan(inst, pair, budget=cfg.budget, seed=cfg.seed).to_json()


def _diagram_job(job):
    inst, pair, cfg = job
    rep = check_diagram(FlopMap(inst, *pair), budget=cfg.diagram_points, field=parse_field(cfg.diagram_field),
                        seed=cfg.seed)
    return rep.to_json()


def verify_report(inst: Instance, cfg: RunConfig) -> dict:
    check_nondegenerate(inst)
    slots = inst.slots
    unordered = [(j, i) for j in slots for i in slots if j < i]
    ordered = [(j, i) for j in slots for i in slots if j != i]
    smooth = _pmap(_smooth_job, [(inst, ell, cfg.fields, cfg) for ell in slots], cfg.threads)
    ranks = _pmap(_rank_job, [(inst, p, cfg) for p in unordered], cfg.threads)
    diagrams = _pmap(_diagram_job, [(inst, p, cfg) for p in ordered], cfg.threads)
    singular = [r["model"] for r in smooth if r["verdict"] == "singular-witness"]
    no_witness = [r["pair"] for r in ranks if r["verdict"] != "exceptional-locus-nonempty"]
    failed = [d["flop"] for d in diagrams if d["verdict"] != "commutes"]
    short = [d["flop"] for d in diagrams if d["tested"] < cfg.diagram_points]
    assumptions = {
        "smooth-models": {"verdict": "singular-witness" if singular else "no-singular-point-found",
                          "models": singular, "evidence": "probabilistic"},
        "flops-not-isomorphisms-over-base": {
            "verdict": "witnessed-for-all-pairs" if not no_witness else "inconclusive",
            "pairs_without_witness": no_witness},
    }
    return {"instance": {"n": inst.n, "N": inst.N, "seed": inst.seed, "bound": inst.bound},
            "smoothness": smooth, "rank_locus": ranks, "diagrams": diagrams,
            "assumptions": assumptions,
            "verdict": "diagram-failure" if failed else "pass",
            "diagram_failures": failed, "diagram_short_budget": short}


def cmd_verify(cfg: RunConfig) -> int:
    inst = _load_instance(cfg.instance)
    try:
        report = verify_report(inst, cfg)
    except Degenerate as exc:
        print(f"degenerate instance: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    out = cfg.out or "verify.json"
    dump_json(report, out)
    a = report["assumptions"]
    if a["smooth-models"]["models"]:
        _warn(f"singular points found on models {a['smooth-models']['models']}")
    if a["flops-not-isomorphisms-over-base"]["pairs_without_witness"]:
        _warn(f"no exceptional witness for pairs {a['flops-not-isomorphisms-over-base']['pairs_without_witness']}")
    if report["diagram_short_budget"]:
        _warn(f"fewer than {cfg.diagram_points} points tested for flops {report['diagram_short_budget']}")
    print(f"smooth-models: {a['smooth-models']['verdict']}")
    print(f"flops-not-isomorphisms-over-base: {a['flops-not-isomorphisms-over-base']['verdict']}")
    print(f"diagrams: {len(report['diagrams']) - len(report['diagram_failures'])}/{len(report['diagrams'])} commute")
    print(f"wrote {out}")
    return EXIT_DIAGRAM if report["diagram_failures"] else EXIT_OK


# -- cone -----------------------------------------------------------------------------

def _shipped_for(inst: Instance):
    path = shipped_fixture_path()
    if not path.exists():
        return None
    N, mats, meta = load_fixtures(path)
    if not meta or N != inst.N:
        return None
    try:
        ref = random_instance(meta["n"], meta["N"], meta["seed"], meta["bound"])
    except (KeyError, ValueError):
        return None
    return mats if ref.b.tolist() == inst.b.tolist() else None


def resolve_pushforwards(inst: Instance, mode: str, fixtures: str | None, threads: int = 1):
    if fixtures:
        N, mats, _ = load_fixtures(fixtures)
        if N != inst.N:
            raise ParamError(f"fixtures are for N = {N}, instance has N = {inst.N}")
        return mats, "fixtures"
    if mode == "auto":
        mats = _shipped_for(inst)
        if mats is not None:
            return mats, "shipped-fixtures"
        mode = "oracle-calibrated" if inst.n == 1 and inst.N >= 3 else "structural"
    if mode == "structural":
        _warn("structural pushforwards are provisional (not oracle-calibrated)")
    return calibrate_all(inst, mode, threads=threads), mode


def cmd_cone(cfg: RunConfig, mode: str = "auto", fixtures: str | None = None, force: bool = False) -> int:
    inst = _load_instance(cfg.instance)
    if not force:
        try:
            check_nondegenerate(inst)
        except Degenerate as exc:
            print(f"degenerate instance: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
    try:
        mats, source = resolve_pushforwards(inst, mode, fixtures, cfg.threads)
    except OracleInconclusive as exc:
        print(f"oracle inconclusive: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    out = Path(cfg.out or "cone_out")
    N = inst.N
    try:
        cert = chamber_bfs(N, mats, cfg.depth_limit)
        if cert.status == "closed":
            cert.checks.extend(verify_fan(cert))
    except InconsistentFan as exc:
        print(f"inconsistent fan: {exc}", file=sys.stderr)
        return EXIT_FAN
    out.mkdir(parents=True, exist_ok=True)
    save_fixtures(out / "pushforwards.json", N, list(mats.values()),
                  {"n": inst.n, "N": N, "seed": inst.seed, "bound": inst.bound})
    cert_json = cert.to_json()
    cert_json["pushforward_source"] = source
    if cert.status != "closed":
        dump_json(cert_json, out / "certificate.json")
        print(f"frontier still open at depth {cfg.depth_limit}", file=sys.stderr)
        return EXIT_DEPTH
    try:
        gens = bir_generators(cert)
    except InconsistentFan as exc:
        print(f"inconsistent fan: {exc}", file=sys.stderr)
        return EXIT_FAN
    cert_json["generator_types"] = [_rounded(classify_generator(g)) for g in gens]
    dump_json(cert_json, out / "certificate.json")
    try:
        dom = fundamental_domain(cert, cfg.ball_radius)
        dom_json = dom.to_json()
    except StabilizerObstruction as exc:
        _warn(f"stabilizer obstruction: {exc}")
        dom_json = {"status": "stabilizer-obstruction", "witness": str(exc), "ball_radius": cfg.ball_radius}
    dump_json(dom_json, out / "domain.json")
    k = len(cert.orbit_reps)
    print(f"orbits = {k}, generators = {len(gens)}")
    print(f"orbits = {k} (≤ N+1 {'✓' if k <= N + 1 else '✗'})")
    print(f"domain: {dom_json['status']} on the ball of radius {cfg.ball_radius}")
    print(f"wrote {out}/")
    return EXIT_OK


def _rounded(d: dict) -> dict:
    return {k: (round(v, 9) if isinstance(v, float) else v) for k, v in d.items()}


# -- oracle ---------------------------------------------------------------------------

def cmd_oracle(cfg: RunConfig, flop: Sequence[int], primes: Sequence[int], tower: int,
               allow_single: bool = False) -> int:
    inst = _load_instance(cfg.instance)
    j, i = int(flop[0]), int(flop[1])
    if not (0 <= j <= inst.N and 0 <= i <= inst.N):
        raise ParamError(f"flop indices must lie in 0..{inst.N}")
    if tower < 1:
        raise ParamError("tower height must be positive")
    if len(set(primes)) < 2 and not allow_single:
        _warn("a single prime gives no cross-check (pass --allow-single to silence)")
    out = cfg.out or f"pushforward_{j}_{i}.json"
    if j == i:
        mat = identity(inst.N)
        data = {"N": inst.N, "fixtures": [{"flop": [j, i], "matrix": [list(r) for r in mat],
                                           "primes": list(primes), "provenance": "identity"}]}
        dump_json(data, out)
        print(f"identity word: identity matrix; wrote {out}")
        return EXIT_OK
    try:
        pf = pushforward_matrix(FlopMap(inst, j, i), "oracle-calibrated", tuple(primes), tower, cfg.seed)
    except CalibrationUnavailable as exc:
        raise ParamError(str(exc)) from exc
    except OracleInconclusive as exc:
        print(f"oracle inconclusive: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    save_fixtures(out, inst.N, [pf], {"n": inst.n, "N": inst.N, "seed": inst.seed, "bound": inst.bound})
    print(f"flop {j} -> {i}: det = {pf.det}, primes = {list(primes)}")
    print(f"wrote {out}")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--budget", type=int, default=10**6, help="enumeration cap per field")
    common.add_argument("--out", default=None)
    common.add_argument("--force", action="store_true")
    common.add_argument("--allow-single", action="store_true")
    common.add_argument("--config", default=None, help="JSON file with RunConfig keys")

    p = argparse.ArgumentParser(prog="detflops", description="Flops of determinantal Calabi-Yau complete intersections.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a seeded random instance")
    for name in ("n", "N", "seed", "bound"):
        g.add_argument(name, type=int)

    v = sub.add_parser("verify", parents=[common], help="smoothness, exceptional locus and diagram checks")
    v.add_argument("instance")
    v.add_argument("--fields", default="3", help="comma separated fields, e.g. 3,5,3^2")
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--diagram-points", type=int, default=100)
    v.add_argument("--diagram-field", default="7")
    v.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("cone", parents=[common], help="chamber walk, generators and fundamental domain")
    c.add_argument("instance")
    c.add_argument("--mode", choices=["auto", "structural", "oracle-calibrated"], default="auto")
    c.add_argument("--fixtures", default=None)
    c.add_argument("--depth", type=int, default=3)
    c.add_argument("--radius", type=int, default=4)

    o = sub.add_parser("oracle", parents=[common], help="calibrate one pushforward matrix by point counting")
    o.add_argument("instance")
    o.add_argument("--flop", type=int, nargs=2, required=True, metavar=("J", "I"))
    o.add_argument("--primes", type=_int_list, default=[3, 5])
    o.add_argument("--tower", type=int, default=3)
    o.add_argument("--seed", type=int, default=0)
    return p


def _config(args) -> RunConfig:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParamError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise ParamError("config must be a JSON object")
    data = dict(base)
    data.update(command=args.command, instance=getattr(args, "instance", None), out=args.out,
                threads=args.threads, budget=args.budget)
    if args.command == "verify":
        data.update(fields=[f.strip() for f in args.fields.split(",") if f.strip()], samples=args.samples,
                    diagram_points=args.diagram_points, diagram_field=args.diagram_field, seed=args.seed)
    elif args.command == "cone":
        data.update(depth_limit=args.depth, ball_radius=args.radius)
    elif args.command == "oracle":
        data.update(seed=args.seed)
    return RunConfig.from_dict(data)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAMS if exc.code else EXIT_OK
    try:
        if args.command == "gen":
            return cmd_gen(args.n, args.N, args.seed, args.bound, args.out)
        cfg = _config(args)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "cone":
            return cmd_cone(cfg, args.mode, args.fixtures, args.force)
        return cmd_oracle(cfg, args.flop, args.primes, args.tower, args.allow_single)
    except ParamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
