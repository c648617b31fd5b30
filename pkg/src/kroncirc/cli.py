"""``kroncirc`` command line.

Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import decomp as dc
from .builder import BuildCaps, boost_depth, build_depth2, build_mixed_product, process_expectation
from .errors import CapExceeded
from .exponents import exponent_calc, js_recurrence_exponent
from .field import Q, Field, FieldError
from .partition import PartitionError, RectPartition, js_recurrence, partition_search
from .polymethod import polymethod_decomp
from .presets import hadamard1, outer1, resolve_base
from .rigidity import (
    RigidityError,
    agreement_count,
    change_bound,
    good_pair_count,
    rank1_construct_2x2,
    rank1_construct_kron2,
    rank1_construct_wh,
    rank1_oracle,
)
from .serialize import FormatError, dump_json, load_json
from .store import load_circuit, save_circuit, target_of
from .verify import VerifyError, format_size_report, size_report, verify_exact, verify_random

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


class UsageError(ValueError):
    """Invalid command-line input that argparse cannot catch."""


@dataclass(frozen=True)
class CommandConfig:
    """Options shared by every subcommand."""

    command: str
    json: bool = False
    threads: int = 1
    seed: int = 0
    field: Field = Q
    caps: BuildCaps = BuildCaps()

    def __post_init__(self):
        if self.caps.max_terms < 1 or self.caps.max_nnz < 1:
            raise UsageError("caps must be positive")


# decomposition presets


def _cache_dir() -> Path | None:
    path = os.environ.get("KRONCIRC_CACHE")
    return Path(path) if path else None


def cached_partition(base, max_parts: int | None) -> RectPartition:
    """``partition_search`` memoized in ``$KRONCIRC_CACHE`` when set."""
    cache = _cache_dir()
    key = None
    if cache is not None:
        digest = hashlib.sha256(json.dumps(dc.to_inline(base), sort_keys=True).encode()).hexdigest()[:16]
        key = cache / f"partition-{digest}-{max_parts}.json"
        if key.exists():
            return RectPartition.from_json(load_json(key), base.field)
    part = partition_search(base, max_parts)
    if key is not None:
        cache.mkdir(parents=True, exist_ok=True)
        dump_json(part.to_json(), key)
    return part


def resolve_decomp(spec: str, base_spec: str | None, field: Field, max_parts: int | None = 8) -> dc.Decomposition:
    """``onehot:<base>``, ``rigidity:wh:<k>``, ``rigidity:kron2:<omega>:<k>``, ``partition:auto``, ``file:<path>``."""
    if spec.startswith("onehot:"):
        b = resolve_base(spec[7:], field)
        d = dc.gen_one_hot(b.matrix)
        return replace(d, unit=b.unit, unit_power=b.power, source=spec)
    if spec.startswith("rigidity:wh:"):
        k = int(spec.split(":")[2])
        d = dc.from_rigidity(rank1_construct_wh(k, field))
        return replace(d, unit=hadamard1(field), unit_power=k, source=spec)
    if spec.startswith("rigidity:kron2:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise UsageError("expected rigidity:kron2:<omega>:<k>")
        omega, k = field.parse(parts[2]), int(parts[3])
        d = dc.from_rigidity(rank1_construct_kron2(omega, k, field))
        return replace(d, unit=outer1(omega, field), unit_power=k, source=spec)
    if spec == "partition:auto":
        if not base_spec:
            raise UsageError("partition:auto needs --base")
        b = resolve_base(base_spec, field)
        d = dc.from_partition(cached_partition(b.matrix, max_parts))
        return replace(d, unit=b.unit, unit_power=b.power, source=f"partition:auto({base_spec})")
    if spec.startswith("file:"):
        return dc.from_json(load_json(spec[5:]))
    raise UsageError(f"unknown decomposition preset {spec!r}")


# output helpers


def _emit(cfg: CommandConfig, obj: dict, text: str) -> None:
    if cfg.json:
        print(json.dumps(obj, indent=2, sort_keys=True, default=str))
    else:
        print(text)


def _stats_text(st: dc.DecompStats) -> str:
    return "\n".join(
        [
            f"alpha1 = {st.alpha1:.6f}",
            f"alpha2 = {st.alpha2:.6f}",
            f"G      = {st.G:.6f}",
            f"E      = {st.E:.6f}",
            f"beta   = {st.beta:.6f}",
            f"gap alpha2-alpha1 = {st.gap:.6f}",
            f"oriented (pairs swapped so E <= 0) = {st.oriented}",
            f"one_sided  = {st.one_sided}",
            f"imbalanced = {st.imbalanced}",
        ]
    )


# subcommands


def cmd_build(cfg: CommandConfig, a) -> int:
    method = a.method
    if method == "mixed-product":
        if not a.base:
            raise UsageError("mixed-product needs --base")
        b = resolve_base(a.base, cfg.field)
        if b.power != 1:
            unit, n = b.unit, b.power * a.n
        else:
            unit, n = b.unit, a.n
        parts = [int(x) for x in a.parts.split(",")] if a.parts else None
        c = build_mixed_product(unit, n, a.depth, parts)
    else:
        if not a.decomp:
            raise UsageError(f"method {method} needs --decomp")
        d = resolve_decomp(a.decomp, a.base, cfg.field, a.max_parts)
        if method == "boost":
            _, upow = d.unit_matrix()
            c = boost_depth(d, a.n * upow, a.depth, cfg.caps)
        else:
            st = dc.stats(d)
            if method == "one-sided" and not st.one_sided:
                raise UsageError("decomposition is not one-sided")
            if method == "imbalanced" and not st.imbalanced:
                raise UsageError("decomposition is not imbalanced")
            c = build_depth2(d, a.n, cfg.caps)
    c.meta["seed"] = cfg.seed
    out = save_circuit(c, a.out) if a.out else None
    rep = size_report(c)
    obj = {"out": str(out) if out else None, "size_report": rep, "params": {k: v for k, v in c.meta.items() if k != "target_unit"}}
    text = f"method {c.meta.get('method')}  wrote {out}\n" + format_size_report(rep)
    _emit(cfg, json.loads(json.dumps(obj, default=str)), text)
    return EXIT_OK


def cmd_stats(cfg: CommandConfig, a) -> int:
    d = resolve_decomp(a.decomp, a.base, cfg.field, a.max_parts)
    ok = dc.validate(d)
    if not ok:
        raise UsageError("decomposition does not sum to its base")
    st = dc.stats(d)
    obj = {"decomp": a.decomp, "J": d.J, "q": d.q, "stats": st.to_json()}
    _emit(cfg, obj, f"{a.decomp}: J={d.J} q={d.q}\n" + _stats_text(st))
    return EXIT_OK


def cmd_verify(cfg: CommandConfig, a) -> int:
    c = load_circuit(a.circuit)
    if a.base:
        b = resolve_base(a.base, c.field)
        unit, n = b.unit, b.power * a.n
    else:
        t = target_of(c)
        if t is None:
            raise UsageError("circuit has no recorded target; pass --base and --n")
        unit, n = t
    if a.mode == "exact":
        rep = verify_exact(c, unit, n)
    else:
        rep = verify_random(c, unit, n, a.trials, cfg.seed)
    sizes = size_report(c, unit, n)
    obj = {"report": rep.to_json(), "size_report": sizes}
    _emit(cfg, obj, rep.summary() + f"\nseed {cfg.seed}\n" + format_size_report(sizes))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_rigidity(cfg: CommandConfig, a) -> int:
    f = cfg.field
    if a.action == "construct":
        if a.family == "wh":
            w = rank1_construct_wh(a.k, f)
        elif a.family == "kron2":
            w = rank1_construct_kron2(f.parse(a.omega), a.k, f)
        else:
            b = resolve_base(a.base or "", f)
            w = rank1_construct_2x2(b.matrix, a.k)
        mode = "wh" if a.family == "wh" or (a.family == "kron2" and f.parse(a.omega) == f(-1)) else "generic"
        obj = {
            "family": a.family,
            "k": a.k,
            "changes": w.changes,
            "closed_form": change_bound(a.k, mode),
            "verified": w.verify(),
        }
        if a.out:
            dump_json(w.to_json(), a.out)
        _emit(cfg, obj, f"{a.family} k={a.k}: changes {w.changes} (closed form {obj['closed_form']}), identity holds: {obj['verified']}")
        return EXIT_OK if obj["verified"] else EXIT_FAIL
    if a.action == "oracle":
        b = resolve_base(a.base, f)
        pool = [f.parse(t) for t in a.pool.split(",")] if a.pool else None
        best, w = rank1_oracle(b.matrix, pool)
        obj = {"base": a.base, "min_changes": best, "note": "exact over the entry pool; an upper bound on rank-1 rigidity"}
        if a.out:
            dump_json(w.to_json(), a.out)
        _emit(cfg, obj, f"{a.base}: rank-1 oracle minimum {best} changes (within the entry pool)")
        return EXIT_OK
    if a.action == "poly":
        b = resolve_base(a.base, f)
        w = polymethod_decomp(b.matrix, a.n, a.l, a.h)
        obj = {
            "base": a.base,
            "n": a.n,
            "l": a.l,
            "h": a.h,
            "changes": w.changes,
            "rank_bound": w.rank_bound,
            "bad_pairs": w.meta["bad_pairs"],
            "union_bound": w.meta["union_bound"],
            "verified": w.verify(),
        }
        if a.out:
            dump_json(w.to_json(), a.out)
        _emit(
            cfg,
            obj,
            f"{a.base}^(x){a.n} window [{a.l},{a.h}]: rank {w.rank_bound}, changes {w.changes}, "
            f"bad pairs {obj['bad_pairs']}, union bound {obj['union_bound']}, identity holds: {obj['verified']}",
        )
        return EXIT_OK if obj["verified"] else EXIT_FAIL
    # report
    rows = []
    for n in range(1, a.nmax + 1):
        row = {
            "n": n,
            "generic_changes": change_bound(n),
            "wh_changes": change_bound(n, "wh"),
            "generic_good": good_pair_count(n),
            "wh_good": good_pair_count(n, "wh"),
        }
        if n <= a.brute_max:
            row["generic_good_brute"] = agreement_count(n)
            row["wh_good_brute"] = agreement_count(n, "wh")
        rows.append(row)
    lines = ["n  generic  wh  (changes; brute-force good-pair check)"]
    for r in rows:
        chk = ""
        if "generic_good_brute" in r:
            chk = "ok" if (r["generic_good_brute"], r["wh_good_brute"]) == (r["generic_good"], r["wh_good"]) else "MISMATCH"
        lines.append(f"{r['n']}  {r['generic_changes']}  {r['wh_changes']}  {chk}")
    _emit(cfg, {"rows": rows}, "\n".join(lines))
    return EXIT_OK


def cmd_partition(cfg: CommandConfig, a) -> int:
    if a.action == "search":
        b = resolve_base(a.base, cfg.field)
        part = cached_partition(b.matrix, a.max_parts)
        bits = math.log2(b.q)
        obj = {
            "base": a.base,
            "rects": [{"rows": list(r), "cols": list(c)} for r, c in part.rects],
            "objective": part.objective,
            "alpha1": part.alpha1,
            "exponent": part.alpha1 / (bits * math.log(2)) if bits else None,
        }
        if a.out:
            dump_json(part.to_json(), a.out)
        lines = [f"{len(part.rects)} rectangles, objective {part.objective:.6f}, alpha1 {part.alpha1:.6f}"]
        if obj["exponent"] is not None:
            lines.append(f"exponent alpha1/(log2(q) ln 2) = {obj['exponent']:.5f}")
        lines += [f"  rows {list(r)} x cols {list(c)}" for r, c in part.rects]
        _emit(cfg, obj, "\n".join(lines))
        return EXIT_OK
    rows = []
    for n in range(1, a.nmax + 1):
        st, bound = js_recurrence(n)
        rows.append(
            {
                "n": n,
                "s": st.s,
                "r": st.r,
                "bound_2(s+r)": bound,
                "wires_2s+3r": st.wires,
                "exponent_wires": js_recurrence_exponent(st.s, st.r, n),
            }
        )
    lines = ["n  s  r  2(s+r)  2s+3r  log_N(2s+3r)"]
    lines += [f"{r['n']}  {r['s']}  {r['r']}  {r['bound_2(s+r)']}  {r['wires_2s+3r']}  {r['exponent_wires']:.5f}" for r in rows]
    _emit(cfg, {"rows": rows}, "\n".join(lines))
    return EXIT_OK


def cmd_exponent(cfg: CommandConfig, a) -> int:
    params = {k: v for k, v in {"k": a.k, "r": a.r, "changes": a.changes, "q": a.q, "s": a.s}.items() if v is not None}
    res = exponent_calc(a.family, **params)
    if a.family in ("kron2", "wh", "js"):
        text = f"{res['c']:.4f}"
    elif a.family == "prior":
        text = f"c = {res['c']:.5f}, exponent = {res['exponent']:.5f}, min c over n=5..8 = {res['min_c_n5_to_8']:.5f} (n={res['argmin_n']})"
    else:
        text = f"h = {res['h']:.6e}, b = {res['b']:.6f}, a = {res['a']:.6e}"
    _emit(cfg, res, text)
    return EXIT_OK


def cmd_expect(cfg: CommandConfig, a) -> int:
    d = resolve_decomp(a.decomp, a.base, cfg.field, a.max_parts)
    la, lb, info = process_expectation(d, a.n)
    obj = {"n": a.n, "layer1": str(la), "layer2": str(lb), **info}
    _emit(cfg, obj, f"E[exp(S_{a.n})] = ({la}, {lb}); stage-2 paths {info['stage2_paths']}")
    return EXIT_OK


# parser


def build_parser() -> argparse.ArgumentParser:
    def common(defaults: bool) -> argparse.ArgumentParser:
        # global flags are accepted before or after the subcommand
        c = argparse.ArgumentParser(add_help=False)
        d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
        c.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")
        c.add_argument(
            "--threads",
            type=int,
            default=d(os.cpu_count() or 1),
            help="accepted for compatibility; work is single-threaded",
        )
        c.add_argument("--seed", type=int, default=d(0))
        c.add_argument("--field", default=d("Q"), help="Q or GF<p>")
        c.add_argument("--max-terms", type=int, default=d(BuildCaps.max_terms))
        c.add_argument("--max-nnz", type=int, default=d(BuildCaps.max_nnz))
        return c

    p = argparse.ArgumentParser(
        prog="kroncirc", description="Sparse circuits for Kronecker powers.", parents=[common(True)]
    )
    sub = p.add_subparsers(dest="command", required=True)
    shared = [common(False)]
    b = sub.add_parser("build", parents=shared, help="synthesize a circuit")
    b.add_argument("--method", choices=["auto", "imbalanced", "one-sided", "mixed-product", "boost"], default="auto")
    b.add_argument("--base")
    b.add_argument("--decomp")
    b.add_argument("--n", type=int, required=True, help="power of the base (or of the decomposition's base)")
    b.add_argument("--depth", type=int, default=2)
    b.add_argument("--parts", help="mixed-product split, e.g. 8,7")
    b.add_argument("--max-parts", type=int, default=8)
    b.add_argument("--out")

    s = sub.add_parser("stats", parents=shared, help="decomposition statistics")
    s.add_argument("--decomp", required=True)
    s.add_argument("--base")
    s.add_argument("--max-parts", type=int, default=8)

    v = sub.add_parser("verify", parents=shared, help="verify a circuit directory")
    v.add_argument("--circuit", required=True)
    v.add_argument("--mode", choices=["exact", "random"], default="random")
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--base")
    v.add_argument("--n", type=int)

    r = sub.add_parser("rigidity", parents=shared, help="rigidity witnesses")
    rs = r.add_subparsers(dest="action", required=True)
    rc = rs.add_parser("construct", parents=shared)
    rc.add_argument("--family", choices=["kron2", "wh", "2x2"], default="wh")
    rc.add_argument("--k", type=int, required=True)
    rc.add_argument("--omega", default="2")
    rc.add_argument("--base")
    rc.add_argument("--out")
    ro = rs.add_parser("oracle", parents=shared)
    ro.add_argument("--base", required=True)
    ro.add_argument("--pool", help="comma-separated entry pool")
    ro.add_argument("--out")
    rp = rs.add_parser("poly", parents=shared)
    rp.add_argument("--base", default="mat:2,3;5,7")
    rp.add_argument("--n", type=int, default=4)
    rp.add_argument("--l", type=int, default=1)
    rp.add_argument("--h", type=int, default=3)
    rp.add_argument("--out")
    rr = rs.add_parser("report", parents=shared)
    rr.add_argument("--nmax", type=int, default=8)
    rr.add_argument("--brute-max", type=int, default=6)

    pa = sub.add_parser("partition", parents=shared, help="rectangle partitions")
    ps = pa.add_subparsers(dest="action", required=True)
    pse = ps.add_parser("search", parents=shared)
    pse.add_argument("--base", required=True)
    pse.add_argument("--max-parts", type=int, default=8)
    pse.add_argument("--out")
    pj = ps.add_parser("js", parents=shared)
    pj.add_argument("--nmax", type=int, default=10)

    e = sub.add_parser("exponent", parents=shared, help="closed-form exponents")
    e.add_argument("--family", choices=["kron2", "wh", "prior", "general-q", "js"], required=True)
    e.add_argument("--k", type=int)
    e.add_argument("--r", type=int)
    e.add_argument("--changes", type=int)
    e.add_argument("--q", type=int)
    e.add_argument("--s", type=float)

    x = sub.add_parser("expect", parents=shared, help="exact expectation of the random process")
    x.add_argument("--decomp", required=True)
    x.add_argument("--base")
    x.add_argument("--n", type=int, required=True)
    x.add_argument("--max-parts", type=int, default=8)
    return p


_HANDLERS = {
    "build": cmd_build,
    "stats": cmd_stats,
    "verify": cmd_verify,
    "rigidity": cmd_rigidity,
    "partition": cmd_partition,
    "exponent": cmd_exponent,
    "expect": cmd_expect,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        cfg = CommandConfig(
            a.command,
            json=a.json,
            threads=a.threads,
            seed=a.seed,
            field=Field.from_tag(a.field),
            caps=BuildCaps(a.max_terms, a.max_nnz),
        )
        return _HANDLERS[a.command](cfg, a)
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        if exc.partial:
            print(f"partial: {json.dumps(exc.partial, default=str)}", file=sys.stderr)
        return EXIT_CAP
    except (
        UsageError,
        FieldError,
        FormatError,
        dc.DecompositionError,
        RigidityError,
        PartitionError,
        VerifyError,
        ValueError,
        OSError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
