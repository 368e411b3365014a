"""Command line front end: ``metricline certify | subadditive | catalog``.

Exit codes: 0 Certified, 2 Refuted, 3 Inconclusive, 1 usage or domain error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import catalog
from .candidate import LambdaSet, MetricCandidate
from .certify import certify
from .config import CheckConfig, ConfigError, load_config
from .expr import DomainError, ExprError, ParseError
from .necessary import run_battery
from .report import build, dumps
from .search import find_counterexample
from .subadditive import FIXTURES, HALF, WHOLE, GeneratorError, GeneratorFunction, classify_translation_invariant
from .verdict import CERTIFIED, REFUTED, Verdict

USAGE_ERROR = 1


class UsageError(Exception):
    pass


def _params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--param expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _config(args) -> CheckConfig:
    config = load_config(args.config) if args.config else CheckConfig()
    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    threads = os.environ.get("METRICLINE_THREADS")
    if threads:
        try:
            config = config.replace(threads=int(threads))
        except ValueError:
            raise UsageError(f"METRICLINE_THREADS must be an integer, got {threads!r}")
    return config


def _emit(report: dict, args, summary: list[str]) -> None:
    for line in summary:
        print(line)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))


def _necessary_witness(rep) -> dict:
    w = rep.strongest()
    for group, kind in ((rep.first_order, "first-order bound"), (rep.diagonal_positivity, "diagonal slope"),
                        (rep.second_order, "second-order bound")):
        if w in group:
            pts = [w["x"], w["y"]] if "y" in w else [w["x"], w["x"]]
            return {"kind": "necessary", "condition": kind, "points": pts, "magnitude": w["excess"], "detail": w}
    return {"kind": "necessary", "detail": w}


def _merge(verdict: Verdict, necessary, violation) -> Verdict:
    """Combine certify, the necessary battery and the search into one verdict."""
    if verdict.kind == REFUTED:
        return verdict
    diagnostics = list(verdict.diagnostics)
    if violation is not None:
        if verdict.kind == CERTIFIED:
            diagnostics.append("sufficient conditions held on the samples but a triangle violation was found")
        return Verdict.refuted(violation.to_dict(), verdict.evidence, diagnostics)
    if necessary.verdict_contribution == REFUTED.lower():
        if verdict.kind == CERTIFIED:
            diagnostics.append("sufficient conditions held on the samples but a necessary condition failed")
            return Verdict.inconclusive(diagnostics, verdict.evidence)
        return Verdict.refuted(_necessary_witness(necessary), verdict.evidence, diagnostics)
    if verdict.kind != CERTIFIED:
        diagnostics.append("counterexample search found no violation")
        return Verdict.inconclusive(diagnostics, verdict.evidence)
    return verdict


def _candidate(args) -> tuple[MetricCandidate, dict]:
    if args.catalog:
        entry = catalog.get(args.catalog, _params(args.param))
        info = {"label": entry.d.label, "source": entry.source, "catalog": entry.name,
                "params": dict(entry.params), "nonsmooth_set": entry.nonsmooth_set.describe()}
        return entry.d, info
    if args.param:
        raise UsageError("--param only applies to --catalog")
    lam = LambdaSet(tuple(args.nonsmooth or ()))
    cand = MetricCandidate.from_source(args.expr, label="expr", lambda_set=lam)
    info = {"label": cand.label, "source": cand.source, "catalog": None, "params": {},
            "nonsmooth_set": lam.describe()}
    return cand, info


def cmd_certify(args) -> int:
    config = _config(args)
    cand, info = _candidate(args)
    timings = {}
    t = time.perf_counter()
    verdict = certify(cand, config, search=False)
    timings["certify_ms"] = 1e3 * (time.perf_counter() - t)
    if "domain_error" in verdict.evidence:
        print(f"domain error: {verdict.evidence['domain_error']['message']}", file=sys.stderr)
        return USAGE_ERROR
    t = time.perf_counter()
    necessary = run_battery(cand, config)
    timings["necessary_ms"] = 1e3 * (time.perf_counter() - t)
    t = time.perf_counter()
    violation = find_counterexample(cand, config)
    timings["search_ms"] = 1e3 * (time.perf_counter() - t)
    final = _merge(verdict, necessary, violation)
    report = build("certify", info, final, necessary, violation, config, timings)
    summary = [
        f"candidate: {info['source']}",
        f"verdict: {final.summary()}",
        f"necessary conditions: {necessary.verdict_contribution}",
        "search: " + (f"violation {list(violation.witness)} magnitude {violation.magnitude:.6g}"
                      if violation is not None else "no violation found"),
    ]
    _emit(report, args, summary)
    return final.exit_code


def cmd_subadditive(args) -> int:
    config = _config(args)
    domain = HALF if args.half_line else WHOLE
    gen = GeneratorFunction.from_source(args.generator, domain)
    t = time.perf_counter()
    verdict = classify_translation_invariant(gen, config)
    timings = {"subadditive_ms": 1e3 * (time.perf_counter() - t)}
    info = {"label": args.generator if args.generator in FIXTURES else "generator", "source": gen.text,
            "catalog": None, "params": {}, "domain": domain, "metric": gen.metric_source()}
    report = build("subadditive", info, verdict, None, None, config, timings)
    summary = [f"generator: {gen.text} ({domain})", f"verdict: {verdict.summary()}"]
    if verdict.kind == REFUTED and "pair" in verdict.witness:
        p = verdict.witness["pair"]
        summary.append(f"pair: ({p['x']:g}, {p['y']:g}) gap {p['gap']:.6g}")
    _emit(report, args, summary)
    return verdict.exit_code


def cmd_catalog(args) -> int:
    names = [args.name] if args.name else list(catalog.NAMES)
    info = [catalog.describe(n) for n in names]
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(dumps({"catalog": info}))
    for item in info:
        params = ", ".join(f"{k}={v['default']} ({v['constraint']})" for k, v in item["params"].items()) or "none"
        print(f"{item['name']}: {item['formula']}")
        print(f"  params: {params}")
        print(f"  non-smooth set: {', '.join(item['nonsmooth_set']) or 'diagonal only'}")
        print(f"  expected: {item['expected_theorem'] or 'no certificate'}")
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--json", help="write the JSON report to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metricline", description="Decide whether d(x, y) is a metric on the line.")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="certify or refute a candidate d(x, y)")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--expr", help='candidate in the expression language, e.g. "abs(x-y)"')
    src.add_argument("--catalog", choices=catalog.NAMES, help="catalog entry")
    c.add_argument("--param", action="append", metavar="K=V", help="catalog parameter (repeatable)")
    c.add_argument("--nonsmooth", action="append", choices=("xy=0", "|x|=|y|"),
                   help="declare a non-smooth set for --expr (repeatable)")
    _common(c)
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("subadditive", help="translation invariant d(x, y) = f(y - x)")
    s.add_argument("--generator", required=True, help=f"f in the variable x, or a fixture: {', '.join(FIXTURES)}")
    s.add_argument("--half-line", action="store_true", help="treat the generator as g on [0, inf)")
    _common(s)
    s.set_defaults(func=cmd_subadditive)

    k = sub.add_parser("catalog", help="list catalog entries")
    k.add_argument("--name", help="show a single entry")
    k.add_argument("--json", help="write the listing as JSON")
    k.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except (catalog.CatalogError, ConfigError, GeneratorError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
    except ExprError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
