"""The ``drl`` command line front end."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .chains import build_regular_decomposition, decomposition_chains_valid, decomposition_to_json, random_chain
from .gf import FieldError, GuardError, is_prime, prime_power
from .lang import (DvsError, fmt_subset, parse_refinement, parse_system, print_system, rebind_refinement,
                   validate)
from .lattice import apply_refinement, generate_radical_twists
from .specializer import SpecializationError, at_q
from . import stats
from .stats import CheckReport, frac_str

CHECKS = ("enumerate", "measure", "nu", "fubini", "independence", "stationarity", "oct", "quasirandom",
          "uniformity", "gowers", "decompose", "probe")
CSV_HEADER = ["q", "m", "kind", "u", "deviation_float", "bound_float", "pass"]


class UsageError(Exception):
    pass


# -- argument helpers ---------------------------------------------------------

def _subset(text: str) -> tuple:
    text = text.strip().strip("{}")
    return tuple(sorted(int(x) for x in text.split(",") if x.strip())) if text else ()


def _family(text: str) -> list:
    return [_subset(part) for part in text.split(";") if part.strip()]


def _qs(args, spec) -> list:
    if args.q_list:
        qs = [int(x) for x in args.q_list.split(",") if x.strip()]
    elif args.q:
        qs = [args.q]
    else:
        raise UsageError("give --q or --q-list")
    for q in qs:
        pp = prime_power(q)
        if pp is None:
            raise UsageError(f"q={q} is not a prime power")
        if not is_prime(q) and pp[0] != spec.p:
            raise UsageError(f"q={q} is not a power of the characteristic {spec.p}")
    return qs


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(str(e)) from e


def _load(args):
    spec = parse_system(_read(args.file))
    diags = validate(spec)
    if diags:
        raise DvsError(diags)
    ref = parse_refinement(_read(args.refine), spec.p) if getattr(args, "refine", None) else None
    return spec, ref


def _refined_at(spec, ref, q):
    if ref is None:
        return spec
    s = at_q(spec, q, 1).spec
    r = rebind_refinement(ref, s.p) if s.p != spec.p else ref
    return apply_refinement(s, r)


def _constants(pairs):
    for item in pairs or []:
        name, _, val = item.partition("=")
        if name not in stats.CONSTANTS:
            raise UsageError(f"unknown constant {name}")
        stats.CONSTANTS[name] = Fraction(val)


# -- per-q jobs ---------------------------------------------------------------

def _u(args, spec):
    return _subset(args.u) if args.u else tuple(sorted(spec.vertices))


def _J(args, spec):
    if args.J:
        return _family(args.J)
    blocks = [b.subset for b in spec.blocks if len(b.subset) >= 2]
    return [u for u in blocks if not any(set(u) < set(w) for w in blocks)]


def _chains(args, sys, u):
    dens = Fraction(args.density)
    return [random_chain(sys, u, dens, args.seed + k) for k in range(args.chains)]


def run_job(cmd, args, spec, ref, q, sweep=None) -> dict:
    """One (check, q) job; returns the per-q document body."""
    m = args.m
    doc = {"checks": []}
    use = _refined_at(spec, ref, q) if cmd not in ("decompose",) else spec
    sysq = at_q(use, q, m, args.workers)
    u = _u(args, spec)
    checks = doc["checks"]
    if cmd == "enumerate":
        doc["counts"] = sysq.counts()
    elif cmd in ("measure", "nu"):
        est = sweep[cmd]
        i = est.qs.index(q)
        checks.append(CheckReport(cmd, u, q, m, est.ratios[i], est.value,
                                  stats.Bound(stats.CONSTANTS["residual"], Fraction(-1, 2)),
                                  {"N": est.ratios[i] * (q ** est.d if est.d else 1) if cmd == "measure" else est.ratios[i],
                                   "fit": frac_str(est.value), "slope": est.slope,
                                   "consistent": est.consistent}))
    elif cmd == "fubini":
        checks.extend(stats.fubini_check(sysq, u, _subset(args.v) if args.v else u[:1]))
    elif cmd == "independence":
        checks.append(stats.independence_check(sysq, _J(args, spec)))
    elif cmd == "stationarity":
        checks.extend(stats.stationarity_check(sysq, _J(args, spec), u if args.u else (min(spec.vertices),),
                                               args.samples, args.seed))
    elif cmd == "oct":
        val = stats.octahedral_sum(sysq, u, stats.balanced_indicator(sysq, u), args.mode)
        checks.append(CheckReport("oct", u, q, m, val, 0, None, {"|Omega(u)^-|": len(sysq.boundary(u))}))
    elif cmd == "quasirandom":
        checks.append(stats.quasirandom_report(sysq, u, args.mode))
    elif cmd == "uniformity":
        if ref is not None and args.etale:
            base = at_q(spec, q, m, args.workers)
            checks.extend(stats.etale_edge_uniformity_dev(base, sysq, u, W) for W in _chains(args, sysq, u))
        else:
            checks.extend(stats.edge_uniformity_dev(sysq, u, W) for W in _chains(args, sysq, u))
    elif cmd == "gowers":
        oct_ = stats.octahedral_sum(sysq, u, stats.balanced_indicator(sysq, u))
        checks.extend(stats.gowers_inequality_check(sysq, u, W, oct_) for W in _chains(args, sysq, u))
    elif cmd == "decompose":
        if ref is None:
            raise UsageError("decompose needs --refine")
        base = at_q(spec, q, m, args.workers)
        refined = at_q(_refined_at(spec, ref, q), q, m, args.workers)
        dec = build_regular_decomposition(base, refined)
        doc["decomposition"] = decomposition_to_json(dec)
        ok = bool(dec.properties["(2) sections bijective"] and dec.properties["(5) images equal or disjoint"]
                  and dec.properties["partition"] and decomposition_chains_valid(base, dec))
        checks.append(CheckReport("decompose", u, q, m, dec.count(), dec.count(), None,
                                  dec.counts(), passed=ok))
    elif cmd == "probe":
        res = sweep["probe"]
        doc["verdict"] = res.verdict
        checks.extend(res.reports(m, q))
    return doc


def _sweep_data(cmd, args, spec, ref, qs):
    u = _u(args, spec)
    if cmd == "measure":
        if len(qs) < 3:
            raise UsageError("measure needs at least three q values")
        sysl = [at_q(_refined_at(spec, ref, q), q, args.m, args.workers) for q in qs]
        d = args.d if args.d is not None else round(stats.loglog_slope(qs, [len(s.omega(u)) for s in sysl]) or 0)
        return {"measure": stats.count_fit([(s.q, len(s.omega(u))) for s in sysl], d, args.max_den)}
    if cmd == "nu":
        sysl = [at_q(_refined_at(spec, ref, q), q, args.m, args.workers) for q in qs]
        return {"nu": stats.nu_estimate(sysl, u, args.max_den)}
    if cmd == "probe":
        if ref is not None:
            cands, names = [ref], [Path(args.refine).stem]
        else:
            cands, names = [], []
            for b in spec.blocks:
                if len(b.subset) < 2:
                    continue
                for w in b.vars:
                    try:
                        tw = generate_radical_twists(spec, w)
                    except (DvsError, ValueError):
                        continue
                    cands.extend(tw)
                    names.extend(t.targets[0].vars[0] for t in tw)
        return {"probe": stats.regularity_probe(spec, cands, u, qs, args.m, names)}
    return {}


# -- emitters -----------------------------------------------------------------

def emit_json(docs, merge: bool = False) -> str:
    if merge:
        return json.dumps(docs) + "\n"
    return "".join(json.dumps(d) + "\n" for d in docs)


def emit_csv(docs, allow_mixed: bool = False) -> str:
    rows = []
    kinds = set()
    for d in docs:
        for c in d["checks"]:
            kinds.add(c["kind"])
            rows.append([d["q"], d["m"], c["kind"], fmt_subset(c["u"]), c["deviation_float"],
                         "" if c["bound_float"] is None else c["bound_float"], str(c["pass"]).lower()])
    if len(kinds) > 1 and not allow_mixed:
        raise UsageError(f"mixed check kinds {sorted(kinds)}; pass --allow-mixed")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    return buf.getvalue()


def spec_hash(spec) -> str:
    return hashlib.sha256(print_system(spec).encode()).hexdigest()


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="drl", description="Enumerate and audit difference-polynomial systems.")
    ap.add_argument("--version", action="version", version=f"drl {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("parse", help="validate a .dvs file and print it canonically")
    p.add_argument("file")
    p.add_argument("--refine")

    def common(p):
        p.add_argument("file")
        p.add_argument("--q", type=int)
        p.add_argument("--q-list")
        p.add_argument("--m", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("-o", "--output")
        p.add_argument("--strict", action="store_true")
        p.add_argument("--merge", action="store_true")
        p.add_argument("--allow-mixed", action="store_true")
        p.add_argument("--refine")
        p.add_argument("--u")
        p.add_argument("--v")
        p.add_argument("--J")
        p.add_argument("--samples", type=int, default=5)
        p.add_argument("--chains", type=int, default=10)
        p.add_argument("--density", default="1/2")
        p.add_argument("--mode", choices=("naive", "contracted", "both"), default="contracted")
        p.add_argument("--etale", action="store_true", help="measure against the image of refinement chains")
        p.add_argument("--d", type=int)
        p.add_argument("--max-den", type=int, default=64)
        p.add_argument("--const", action="append", metavar="NAME=VALUE")
        p.add_argument("--max-points", type=int)

    for name in CHECKS:
        common(sub.add_parser(name))
    sw = sub.add_parser("sweep", help="run one check over a q-list")
    common(sw)
    sw.add_argument("--check", choices=CHECKS, required=True)
    return ap


def _run(args) -> int:
    if args.cmd == "parse":
        spec, ref = _load(args)
        if ref is not None:
            spec = apply_refinement(spec, ref)
        sys.stdout.write(print_system(spec) + "\n")
        return 0
    if args.m < 1:
        raise UsageError("m must be at least 1")
    if args.max_points:
        import os
        os.environ["DRL_GUARD_POINTS"] = str(args.max_points)
    _constants(args.const)
    cmd = args.check if args.cmd == "sweep" else args.cmd
    spec, ref = _load(args)
    qs = _qs(args, spec)
    sweep = _sweep_data(cmd, args, spec, ref, qs)
    shown = apply_refinement(spec, ref) if ref is not None and cmd != "decompose" else spec
    head = {"system": spec.name, "spec_hash": spec_hash(shown)}

    def job(q):
        body = run_job(cmd, args, spec, ref, q, sweep)
        reports = body.pop("checks")
        return reports, {**head, "q": q, "m": args.m, **body,
                         "checks": [r.to_dict() for r in reports], "version": __version__}

    if args.workers > 1 and len(qs) > 1:
        with ThreadPoolExecutor(args.workers) as ex:
            results = list(ex.map(job, qs))
    else:
        results = [job(q) for q in qs]
    docs = [d for _, d in results]
    for reports, _ in results:
        for r in reports:
            print(r.summary(), file=sys.stderr)
    text = emit_json(docs, args.merge) if args.format == "json" else emit_csv(docs, args.allow_mixed)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    failed = any(c["pass"] is False for d in docs for c in d["checks"])
    return 1 if args.strict and failed else 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return _run(args)
    except DvsError as e:
        for d in e.diagnostics:
            print(f"{getattr(args, 'file', '')}:{d}", file=sys.stderr)
        return 2
    except (UsageError, FieldError, GuardError, SpecializationError, ValueError) as e:
        print(f"drl: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
