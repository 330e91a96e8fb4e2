"""Command-line front end.

Exit codes: 0 when a decision was reached (including negative ones), 2 when
an Inconclusive verdict dominates, 3 on input or validation errors.
Reports are JSON with sorted keys and no timestamps, so identical inputs and
seeds give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import (ConfigError, load_family_spec, load_map, load_norm, load_point, load_space,
                     load_sequences, load_subspace, probe_config, read_json)
from .derivative import LiftedMap, NotDifferentiable, check_differentiable, construct_derivative, verify_chain_rule
from .family import build_family, metric_identification, tangency_probe
from .gallery import SCENARIOS, TARGETS, ScenarioOptions, embeddability_check, run_scenario
from .limits import MIN_SAMPLES
from .metric import CapabilityError, MetricAxiomError, validate_metric
from .tangency import (INCONCLUSIVE, InsufficientGeometry, decide_strong_tangency, epsilon_profile,
                       profile_csv)

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 2, 3


class _Collector(logging.Handler):
    def __init__(self):
        super().__init__(logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record):
        self.messages.append(record.getMessage())


def _clean(x: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return x


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise ConfigError(out, f"cannot write ({exc.strerror})") from exc


def _probe(args):
    if args.schedule_len < MIN_SAMPLES:
        raise ConfigError("--schedule-len", f"must be at least {MIN_SAMPLES}")
    return probe_config(args.rel_tol, args.abs_tol, args.schedule_base, args.schedule_growth,
                        args.schedule_len)


def _config_echo(args, **docs) -> dict:
    skip = {"func", "out", "jobs"}
    echo = {k: v for k, v in vars(args).items() if k not in skip}
    echo.update(docs)
    return echo


def _provenance(args, probe=None) -> dict:
    out = {"tool": "pretangent", "version": __version__, "seed": args.seed}
    if probe is not None:
        out["schedule"] = list(probe.schedule.indices)
    return out


def cmd_analyze(args, warnings):
    probe = _probe(args)
    space_doc, seq_doc, norm_doc = read_json(args.space), read_json(args.sequences), read_json(args.norm)
    space = load_space(space_doc)
    a, seqs, extra = load_sequences(seq_doc)
    norm = load_norm(norm_doc)
    if not seqs:
        raise ConfigError("sequences.sequences", "need at least one candidate")
    fam, rejected = build_family(seqs, a, norm, space, probe, args.jobs)
    q = metric_identification(fam, args.zero_tol)
    result = {"family": fam.labels, "dmat": fam.to_dict()["dmat"], "values": fam.values,
              "classes": [list(c) for c in q.classes], "rho": q.rho, "quotient": q.to_dict(),
              "rejected": [r.to_dict() for r in rejected],
              "embeddability": {t: embeddability_check(q, t, q.projection[0]).to_dict()
                                for t in TARGETS} if len(q) <= 64 else None}
    probes = None
    if not args.no_probe:
        pool = list(fam.members) + [s for s in seqs if s not in fam.members] + extra
        probes = tangency_probe(fam, pool, None, args.zero_tol, args.seed, args.jobs).to_dict()
    result["probes"] = probes
    unsure = any(r.inconclusive for r in rejected)
    report = {"command": "analyze", "config": _config_echo(args, space_doc=space_doc,
                                                           sequences_doc=seq_doc, norm_doc=norm_doc),
              "provenance": _provenance(args, probe), "result": result, "warnings": warnings}
    return report, EXIT_INCONCLUSIVE if unsure else EXIT_OK


def cmd_derivative(args, warnings):
    probe = _probe(args)
    docs = {"f": read_json(args.f), "src": read_json(args.src), "tgt": read_json(args.tgt)}
    s1, a1, seq1, r1 = load_family_spec(docs["src"], "src")
    s2, a2, seq2, r2 = load_family_spec(docs["tgt"], "tgt")
    f = LiftedMap(load_map(docs["f"], "f"), s1, s2, a1, a2, "f")
    fam1, _ = build_family(seq1, a1, r1, s1, probe, args.jobs)
    fam2, _ = build_family(seq2, a2, r2, s2, probe, args.jobs)
    rep = check_differentiable(f, fam1, fam2, args.zero_tol, args.jobs)
    result: dict = {"conditions": rep.to_dict(), "src_family": fam1.labels, "tgt_family": fam2.labels}
    if rep.differentiable:
        d = construct_derivative(f, fam1, fam2, args.zero_tol, jobs=args.jobs)
        result["derivative"] = d.to_dict()
    if args.g:
        docs["g"] = read_json(args.g)
        docs["fam3"] = read_json(args.fam3) if args.fam3 else docs["tgt"]
        s3, a3, seq3, r3 = load_family_spec(docs["fam3"], "fam3")
        g = LiftedMap(load_map(docs["g"], "g"), s2, s3, a2, a3, "g")
        fam3, _ = build_family(seq3, a3, r3, s3, probe, args.jobs)
        try:
            result["chain_rule"] = verify_chain_rule(f, g, fam1, fam2, fam3, args.zero_tol,
                                                     args.jobs).to_dict()
        except NotDifferentiable as exc:
            result["chain_rule"] = {"holds": None, "error": str(exc)}
    report = {"command": "derivative", "config": _config_echo(args, **{f"{k}_doc": v for k, v in docs.items()}),
              "provenance": _provenance(args, probe), "result": result, "warnings": warnings}
    return report, EXIT_INCONCLUSIVE if rep.status == "Inconclusive" else EXIT_OK


def cmd_tangency(args, warnings):
    docs = {"sub_y": read_json(args.sub_y), "sub_z": read_json(args.sub_z),
            "point": read_json(args.point)}
    Y, Z = load_subspace(docs["sub_y"], "sub_y"), load_subspace(docs["sub_z"], "sub_z")
    a = load_point(docs["point"])
    if args.space:
        docs["space"] = read_json(args.space)
        space = load_space(docs["space"])
        if space.dimension != Y.parent.dimension or space.dimension != Z.parent.dimension:
            raise ConfigError("space.dimension", "does not match the subspaces")
    if Y.parent.dimension != Z.parent.dimension or np.atleast_1d(a).size != Y.parent.dimension:
        raise ConfigError("point", "dimensions of point and subspaces differ")
    try:
        prof = epsilon_profile(a, Z, Y, args.t0, args.grid_len, 0.5, args.eta, args.n_sphere,
                               args.n_target, args.seed, args.jobs, args.combine)
    except ValueError as exc:
        if isinstance(exc, (ConfigError, InsufficientGeometry)):
            raise
        raise ConfigError("point", str(exc)) from exc
    verdict = decide_strong_tangency(prof, args.slope_margin, args.ratio_floor)
    if args.csv:
        _write(profile_csv(prof), args.csv)
    result = {"verdict": verdict.to_dict(), "profile": prof.to_dict()}
    report = {"command": "tangency", "config": _config_echo(args, **{f"{k}_doc": v for k, v in docs.items()}),
              "provenance": _provenance(args), "result": result, "warnings": warnings}
    return report, EXIT_INCONCLUSIVE if verdict.kind == INCONCLUSIVE else EXIT_OK


def cmd_gallery(args, warnings):
    names = sorted(SCENARIOS) if args.scenario == "all" else [args.scenario]
    for n in names:
        if n not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {n!r}; choose from {sorted(SCENARIOS)} or 'all'")
    opts = ScenarioOptions(t0=args.t0, grid_len=args.grid_len, eta=args.eta,
                           n_sphere=args.n_sphere, n_target=args.n_target, seed=args.seed,
                           jobs=args.jobs, zero_tol=args.zero_tol, probe=_probe(args))
    kw = {"alpha": args.alpha} if args.alpha is not None else {}
    results = [run_scenario(n, opts, **kw) for n in names]
    unsure = any(r.verdict.kind == INCONCLUSIVE for r in results)
    if args.csv or (args.scenario == "all" and args.out is None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "verdict", "slope", *(f"{t}_defect" for t in TARGETS)])
        for r in results:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                        for v in r.summary_row()])
        _write(buf.getvalue(), args.csv)
        if args.out is None:
            return None, EXIT_INCONCLUSIVE if unsure else EXIT_OK
    report = {"command": "gallery", "config": _config_echo(args, options=opts.to_dict()),
              "provenance": _provenance(args, opts.probe),
              "result": {r.scenario: r.to_dict() for r in results}, "warnings": warnings}
    return report, EXIT_INCONCLUSIVE if unsure else EXIT_OK


def cmd_validate(args, warnings):
    doc = read_json(args.space)
    space = load_space(doc)
    rep = validate_metric(space, args.sample_count, args.seed)
    report = {"command": "validate", "config": _config_echo(args, space_doc=doc),
              "provenance": _provenance(args), "result": rep.to_dict(), "warnings": warnings}
    return report, EXIT_OK if rep.passed else EXIT_INPUT


def _positive(kind):
    def parse(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("numerics")
    g.add_argument("--rel-tol", type=_positive(float), default=1e-6)
    g.add_argument("--abs-tol", type=_positive(float), default=1e-9)
    g.add_argument("--schedule-base", type=_positive(float), default=4.0)
    g.add_argument("--schedule-growth", type=_positive(float), default=1.6)
    g.add_argument("--schedule-len", type=_positive(int), default=24)
    g.add_argument("--zero-tol", type=_positive(float), default=1e-4)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--jobs", type=_positive(int), default=os.cpu_count() or 1)
    g.add_argument("--out", default=None, help="report path (default: stdout)")

    def sampling(t0=None, grid_len=20):
        # a fresh parent per subcommand: argparse shares action objects with parents
        sp = argparse.ArgumentParser(add_help=False)
        s = sp.add_argument_group("sampling")
        s.add_argument("--t0", type=_positive(float), default=t0)
        s.add_argument("--grid-len", type=_positive(int), default=grid_len)
        s.add_argument("--eta", type=_positive(float), default=0.05)
        s.add_argument("--n-sphere", type=_positive(int), default=512)
        s.add_argument("--n-target", type=_positive(int), default=4096)
        return sp

    p = argparse.ArgumentParser(prog="pretangent", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="self-stable family and its quotient")
    a.add_argument("--space", required=True)
    a.add_argument("--sequences", required=True)
    a.add_argument("--norm", required=True)
    a.add_argument("--no-probe", action="store_true", help="skip the subsequence tangency probe")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("derivative", parents=[common], help="quotient-level derivative of a map")
    d.add_argument("--f", required=True)
    d.add_argument("--src", required=True)
    d.add_argument("--tgt", required=True)
    d.add_argument("--g", default=None, help="second map for the chain rule")
    d.add_argument("--fam3", default=None, help="family for the target of g (default: --tgt)")
    d.set_defaults(func=cmd_derivative)

    t = sub.add_parser("tangency", parents=[common, sampling()], help="eps profile and verdict")
    t.add_argument("--space", default=None)
    t.add_argument("--sub-y", required=True)
    t.add_argument("--sub-z", required=True)
    t.add_argument("--point", required=True)
    t.add_argument("--combine", choices=("max", "min"), default="max")
    t.add_argument("--slope-margin", type=_positive(float), default=0.15)
    t.add_argument("--ratio-floor", type=_positive(float), default=1e-3)
    t.add_argument("--csv", default=None, help="also write the profile as CSV")
    t.set_defaults(func=cmd_tangency)

    gal = sub.add_parser("gallery", help="built-in scenarios")
    gsub = gal.add_subparsers(dest="action", required=True)
    run = gsub.add_parser("run", parents=[common, sampling(0.1, 11)])
    run.add_argument("scenario", help=f"one of {sorted(SCENARIOS)} or 'all'")
    run.add_argument("--alpha", type=_positive(float), default=None)
    run.add_argument("--csv", default=None, help="summary table path")
    run.set_defaults(func=cmd_gallery)

    v = sub.add_parser("validate", parents=[common], help="check the metric axioms on samples")
    v.add_argument("--space", required=True)
    v.add_argument("--sample-count", type=_positive(int), default=1000)
    v.set_defaults(func=cmd_validate)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    collector = _Collector()
    root = logging.getLogger("pretangent")
    root.addHandler(collector)
    try:
        report, code = args.func(args, collector.messages)
        if report is not None:
            _write(dumps(report), args.out)
        return code
    except (ConfigError, MetricAxiomError, CapabilityError, InsufficientGeometry, KeyError) as exc:
        print(f"pretangent: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"pretangent: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        root.removeHandler(collector)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
