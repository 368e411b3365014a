"""Acceptance criteria 1-8, one PASS/FAIL line each (see the summary section of the pytest run)."""

import json
import math
import time

import numpy as np

from metricline import catalog
from metricline.autodiff import cross_partial_batch
from metricline.candidate import MetricCandidate
from metricline.certify import certify, estimate_limit
from metricline.cli import main
from metricline.config import CheckConfig
from metricline.expr import evaluate
from metricline.necessary import run_battery
from metricline.search import brute_force_oracle, triangle_margin
from metricline.subadditive import (EXA1, EXA2, HALF, Grid1D, GeneratorFunction, check_subadditive,
                                    classify_translation_invariant)
from metricline.verdict import CERTIFIED, REFUTED

CONFIG = CheckConfig()

CERTIFY_CASES = [
    ("chordal", {}, "T-H4D"),
    ("p_relative", {"p": 1}, "T-combined"),
    ("p_relative", {"p": 2}, "T-combined"),
    ("p_relative", {"p": 3}, "T-combined"),
    ("generalized_chordal", {"alpha": 1, "beta": 1, "p": 3}, "T-combined"),
    ("concave_ti", {"g": "sqrt(x)"}, "T-H4A"),
    ("concave_ti", {"g": "x/(1+x)"}, "T-H4A"),
]


def _label(name, params):
    return name + ("(" + ",".join(f"{k}={v}" for k, v in params.items()) + ")" if params else "")


def test_criterion_1_catalog_certification(record):
    t0 = time.perf_counter()
    failures = []
    for name, params, theorem in CERTIFY_CASES:
        v = certify(catalog.get(name, params).d, CONFIG)
        if v.kind != CERTIFIED or v.theorem != theorem:
            failures.append(f"{_label(name, params)} -> {v.kind} {v.theorem or ''}".rstrip())
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60
    detail = f"{len(CERTIFY_CASES) - len(failures)}/{len(CERTIFY_CASES)} certified in {elapsed:.1f}s"
    if failures:
        detail += "; " + "; ".join(failures)
    record(1, ok, detail)
    assert ok, detail


def _box_points(entry, n=10_000, seed=0):
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    while sum(len(a) for a in xs) < n:
        P = rng.uniform(-10, 10, (2 * n, 2))
        x, y = P[:, 0], P[:, 1]
        keep = np.abs(x - y) > CONFIG.diag_band * (1 + np.abs(x) + np.abs(y))
        if entry.nonsmooth_set:
            keep &= ~entry.nonsmooth_set.in_band(x, y, CONFIG.lambda_band)
        xs.append(x[keep])
        ys.append(y[keep])
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


def _rel(a, b):
    den = np.maximum(np.abs(a), np.abs(b))
    return np.where(den > 0, np.abs(a - b) / np.where(den > 0, den, 1.0), 0.0)


def test_criterion_2_cross_partial_oracle(record):
    cases = [("chordal", {})] + [("p_relative", {"p": p}) for p in (1, 2, 3)] + \
        [("generalized_chordal", {"alpha": 1, "beta": 1, "p": 3})]
    parts, ok = [], True
    for name, params in cases:
        entry = catalog.get(name, params)
        x, y = _box_points(entry)
        est, _ = cross_partial_batch(entry.d.expr, x, y, CONFIG)
        rel = _rel(est.value, entry.closed_cross_partial(x, y))
        bad = int(np.count_nonzero(rel > 1e-8))
        ok &= bad == 0 and bool(np.all(est.ok))
        parts.append(f"{_label(name, params)} max rel {rel.max():.1e} ({bad} > 1e-8)")
    record(2, ok, "; ".join(parts))
    assert ok, "; ".join(parts)


def test_criterion_3_h4d_limits(record):
    worst = 0.0
    for p in (1, 2, 3):
        e = catalog.get("p_relative", {"p": p}).d.expr
        for c in (0.0, 1.0, 5.0):
            for direction in "+-":
                L = estimate_limit(lambda l: evaluate(e, {"x": c, "y": l}), direction, CONFIG)
                assert L.magnitudes_used[-1] == 1e6
                worst = max(worst, abs(L.value - 1) if L.converged else math.inf)
    e = catalog.get("chordal").d.expr
    for c in (0.0, 1.0, 5.0):
        target = 2 / math.sqrt(1 + c * c)
        for direction in "+-":
            L = estimate_limit(lambda l: evaluate(e, {"x": c, "y": l}), direction, CONFIG)
            worst = max(worst, abs(L.value / target - 1) if L.converged else math.inf)
    ok = worst <= 1e-6
    record(3, ok, f"worst relative error {worst:.1e} (tolerance 1e-6)")
    assert ok


def test_criterion_4_refutations(record):
    exa = MetricCandidate.from_source(GeneratorFunction.from_source(EXA1).metric_source(), label="exa1")
    v = certify(exa, CONFIG)
    mag = v.witness["magnitude"] if v.kind == REFUTED else 0.0
    ok1 = v.kind == REFUTED and mag >= 1 / 3 - 1e-9
    sq = MetricCandidate.from_source("(x-y)^2")
    oracle = brute_force_oracle(sq, [0.0, 0.5, 1.0])
    tri = [w for w in oracle if w.kind == "triangle"]
    ok2 = bool(tri) and tri[0].witness == (0.0, 0.5, 1.0) and abs(tri[0].values["m1"] + 0.5) < 1e-15
    first = run_battery(sq, CONFIG).first_order
    ok3 = bool(first) and all(abs(w["bound"]) < 1e-9 for w in first)
    ok = ok1 and ok2 and ok3
    record(4, ok, f"exa1 {v.kind} magnitude {mag:.12g}; (x-y)^2 oracle m1 "
                  f"{tri[0].values['m1'] if tri else None}; first-order witnesses {len(first)} with bound 0")
    assert ok


def test_criterion_5_subadditivity(record):
    f2 = GeneratorFunction.from_source(EXA2)
    stats = {}
    viol2 = check_subadditive(f2, Grid1D.default(CONFIG, f2), stats=stats)
    f1 = GeneratorFunction.from_source(EXA1)
    viol1 = check_subadditive(f1, Grid1D.default(CONFIG, f1))
    first = (viol1[0].x, viol1[0].y) if viol1 else None
    ok = stats["violations_total"] == 0 and first == (3.0, -2.0)
    record(5, ok, f"exa2 violations {stats['violations_total']}; exa1 first pair {first}")
    assert ok


ASYMMETRIC = "pw(y > x, 2*(y - x), x - y)"
QUADRATIC = ["(x-y)^2", "min((x-y)^2, abs(x-y))"]


def test_criterion_6_necessary_consistency(record):
    noisy = []
    for name, params, _ in CERTIFY_CASES:
        rep = run_battery(catalog.get(name, params).d, CONFIG)
        if rep.verdict_contribution != "consistent":
            noisy.append(_label(name, params))
    silent = [src for src in [ASYMMETRIC] + QUADRATIC
              if run_battery(MetricCandidate.from_source(src), CONFIG).verdict_contribution != "refuted"]
    ok = not noisy and not silent
    record(6, ok, f"catalog entries with witnesses: {noisy or 'none'}; injected candidates without: {silent or 'none'}")
    assert ok


def _concave_generator(rng) -> str:
    k = int(rng.integers(1, 5))
    slopes = np.sort(rng.uniform(0.05, 3.0, k + 1))[::-1]
    pieces = [f"{slopes[0]:.6g}*x"]
    # later pieces are tangent lines below the first, keeping g(0) = 0 and concavity
    knots = np.sort(rng.uniform(0.1, 4.0, k))
    value = slopes[0] * knots[0]
    for i in range(1, k + 1):
        b = value - slopes[i] * knots[i - 1]
        pieces.append(f"{slopes[i]:.6g}*x + {b:.6g}")
        if i < k:
            value = slopes[i] * knots[i] + b
    return "min(" + ", ".join(pieces) + ")"


def _bump_generator(rng) -> str:
    t1 = round(float(rng.uniform(0.3, 1.5)), 2)
    t2 = round(t1 + float(rng.uniform(0.2, 1.5)), 2)
    peak = round(float(rng.uniform(0.5, 2.0)), 2)
    floor = round(float(rng.uniform(0.05, 0.9)) * peak, 2)
    return (f"pw(x < {t1}, {peak / t1:.6g}*x, x < {t2}, {peak} - {(peak - floor) / (t2 - t1):.6g}*(x - {t1}), "
            f"{floor})")


def test_criterion_7_soundness_sweep(record):
    rng = np.random.default_rng(2024)
    grid = np.linspace(-5, 5, CONFIG.oracle_grid)
    certified, clean = 0, 0
    for _ in range(100):
        g = GeneratorFunction.from_source(_concave_generator(rng), HALF)
        v = classify_translation_invariant(g, CONFIG)
        certified += v.kind == CERTIFIED
        d = MetricCandidate.from_source(g.metric_source())
        clean += not [w for w in brute_force_oracle(d, grid) if w.kind == "triangle"]
    genuine, tried = 0, 0
    while genuine < 100 and tried < 1000:
        tried += 1
        g = GeneratorFunction.from_source(_bump_generator(rng), HALF)
        v = classify_translation_invariant(g, CONFIG)
        if v.kind != REFUTED or v.witness.get("kind") != "triangle":
            continue
        d = MetricCandidate.from_source(g.metric_source())
        genuine += triangle_margin(d, v.witness["points"]).m_min < 0
    ok = certified == 100 and clean == 100 and genuine == 100
    record(7, ok, f"concave: {certified}/100 certified, {clean}/100 oracle-clean; "
                  f"non-monotone: {genuine}/100 genuine triangle violations ({tried} generators drawn)")
    assert ok


def _report(tmp_path, argv, name):
    path = tmp_path / name
    main(argv + ["--json", str(path)])
    text = path.read_text(encoding="utf-8")
    data = json.loads(text)
    data.pop("timings")
    return text[: text.index('"timings"')], data


def test_criterion_8_determinism(tmp_path, record):
    runs = [
        ["certify", "--catalog", "chordal", "--seed", "7"],
        ["certify", "--expr", "(x-y)^2", "--seed", "7"],
        ["certify", "--catalog", "p_relative", "--param", "p=2", "--seed", "7"],
        ["subadditive", "--generator", "exa1", "--seed", "7"],
    ]
    same = 0
    for i, argv in enumerate(runs):
        a = _report(tmp_path, argv, f"a{i}.json")
        b = _report(tmp_path, argv, f"b{i}.json")
        same += a == b
    ok = same == len(runs)
    record(8, ok, f"{same}/{len(runs)} report pairs byte-identical outside timings")
    assert ok
