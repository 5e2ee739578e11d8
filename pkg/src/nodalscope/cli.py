"""Command-line front end: generate specs, certify, trace nodal sets,
run doubling scans, and assemble family reports.

Exit codes: 0 success (or certificate pass), 1 hypothesis failure
(certificate fail), 2 input error. Every artifact embeds the schema version
and a hash of the producing configuration. All paths are relative to --out.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .certify import (
    ReportConfig,
    certify_equidistribution,
    config_hash,
    default_k1,
    default_k2,
    largest_admissible_r,
    report_to_json,
)
from .doubling import (
    doubling_summary_json,
    fit_growth_constant,
    scan_doubling,
    write_records_csv,
)
from .errors import NodalscopeError, NoModesError
from .geometry import TorusModel
from .harness import (
    EnsembleMember,
    member_doubling,
    member_lift_index,
    member_nodal_stats,
    run_family_report,
)
from .nodal import extract_nodal, find_singular_points, singular_points_json, \
    write_segments_csv
from .spectrum import random_eigenfunction, spec_from_json, spec_to_json

SCHEMA_VERSION = 1


def _config_payload(args, fields) -> dict:
    payload = {"schema_version": SCHEMA_VERSION}
    for name in fields:
        payload[name] = getattr(args, name, None)
    payload["threads"] = _thread_count(args)
    return payload


def _thread_count(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("NODALSCOPE_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _out_path(args, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _write_json(path: Path, payload: dict, digest: str) -> None:
    payload = {"schema_version": SCHEMA_VERSION, "config_hash": digest,
               **payload}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def cmd_gen(args) -> int:
    model = TorusModel(args.dim)
    try:
        spec = random_eigenfunction(args.m, model, args.seed)
    except NoModesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    path = _out_path(args, f"spec_m{args.m}_dim{args.dim}_seed{args.seed}.json")
    path.write_text(spec_to_json(spec) + "\n")
    print(f"wrote {path}")
    print(f"lambda = {spec.lam:.6f}, modes = {spec.n_modes}")
    return 0


def _load_spec(path: str):
    return spec_from_json(Path(path).read_text())


def cmd_certify(args) -> int:
    spec = _load_spec(args.spec)
    k1 = args.k1 if args.k1 is not None else default_k1(spec.model)
    k2 = args.k2 if args.k2 is not None else default_k2(spec.model)
    cert = certify_equidistribution(spec, args.r, k1, k2)
    digest = config_hash(_config_payload(args, ["spec", "r", "k1", "k2"]))
    path = _out_path(args, f"certificate_m{spec.m}_r{args.r}.json")
    _write_json(path, {
        "spec_id": cert.spec_id,
        "r": cert.r, "K1": cert.k1, "K2": cert.k2,
        "min_ratio": cert.min_ratio, "max_ratio": cert.max_ratio,
        "pass": cert.passed, "centers_used": cert.centers_used,
    }, digest)
    print(f"wrote {path}")
    print(f"pass={cert.passed} min_ratio={cert.min_ratio:.6f} "
          f"max_ratio={cert.max_ratio:.6f}")
    return 0 if cert.passed else 1


def cmd_nodal(args) -> int:
    spec = _load_spec(args.spec)
    ns = extract_nodal(spec, args.grid)
    points = find_singular_points(spec, args.grid)
    digest = config_hash(_config_payload(args, ["spec", "grid"]))
    seg_path = _out_path(args, f"nodal_segments_m{spec.m}_N{args.grid}.csv")
    write_segments_csv(ns, seg_path, header_lines=[
        f"schema_version={SCHEMA_VERSION} config={digest}"
    ])
    summary_path = _out_path(args, f"nodal_summary_m{spec.m}_N{args.grid}.json")
    _write_json(summary_path, {
        "length": ns.length,
        "n_segments": 0 if ns.segments is None else len(ns.segments),
        "n_polylines": len(ns.polylines),
        "singular_points": json.loads(singular_points_json(points)),
        "length_over_sqrt_lambda": ns.length / math.sqrt(spec.lam),
    }, digest)
    print(f"wrote {seg_path}")
    print(f"wrote {summary_path}")
    print(f"length = {ns.length:.6f}")
    return 0


def cmd_doubling(args) -> int:
    spec = _load_spec(args.spec)
    records = scan_doubling(spec, args.r, tol=args.tol)
    c_star = fit_growth_constant(records, args.r, spec.lam)
    digest = config_hash(_config_payload(args, ["spec", "r", "tol"]))
    rec_path = _out_path(args, f"doubling_records_m{spec.m}_r{args.r}.csv")
    write_records_csv(records, rec_path, header_lines=[
        f"schema_version={SCHEMA_VERSION} config={digest}"
    ])
    sum_path = _out_path(args, f"doubling_summary_m{spec.m}_r{args.r}.json")
    _write_json(sum_path, json.loads(doubling_summary_json(
        spec, records, args.r)), digest)
    print(f"wrote {rec_path}")
    print(f"wrote {sum_path}")
    print(f"c_star = {c_star:.6f} over {len(records)} records")
    return 0


def cmd_report(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    specs = [_load_spec(p) for p in manifest["specs"]]
    config = ReportConfig(
        beta=manifest.get("beta", 0.01),
        kappa=manifest.get("kappa", 1.0),
    )
    members_by_m: dict[int, list[EnsembleMember]] = {}
    failed = []
    for spec in specs:
        r = largest_admissible_r(spec)
        if r is None:
            failed.append(spec)
            continue
        cert = certify_equidistribution(spec, r)
        member = EnsembleMember(spec=spec, r=r, certificate=cert)
        member_doubling(member)
        member_nodal_stats(member)
        member_lift_index(member)
        members_by_m.setdefault(spec.m, []).append(member)
    if not members_by_m:
        print("error: no family member certified; report refused",
              file=sys.stderr)
        return 1
    reports = run_family_report(members_by_m, config)
    digest = config_hash(_config_payload(args, ["manifest"]))
    agg_path = _out_path(args, "family_report.csv")
    with open(agg_path, "w") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION} config={digest}\n")
        fh.write("m,seed,lambda,r,nodal_length,c_star,N_lift,eq4_pred,"
                 "eq4_verdict\n")
        for rep in reports:
            meta, meas, pred = rep.meta, rep.measured, rep.predicted
            path = _out_path(
                args, f"report_m{meta['m']}_seed{meta['seed']}.json"
            )
            path.write_text(report_to_json(rep) + "\n")
            fh.write(
                f"{meta['m']},{meta['seed']},{meta['lambda']},{meta['r']},"
                f"{meas['nodal_length']},{meas['c_star']},{meas['N_lift']},"
                f"{pred['eq4']},{rep.verdicts.get('eq4_length_bound')}\n"
            )
    print(f"wrote {agg_path} and {len(reports)} member reports")
    for spec in failed:
        print(f"note: m={spec.m} seed={spec.seed} never certified; skipped")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nodalscope",
        description="Nodal sets, doubling indices, and equidistribution "
                    "certificates for exact toral eigenfunctions",
    )
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count (default: NODALSCOPE_THREADS or "
                             "available parallelism; reductions are "
                             "order-independent)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random eigenfunction spec")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--dim", type=int, default=2, choices=(2, 3))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("certify", help="equidistribution certificate")
    p.add_argument("--spec", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--k2", type=float, default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("nodal", help="extract the nodal set")
    p.add_argument("--spec", required=True)
    p.add_argument("--grid", type=int, default=512)
    p.set_defaults(func=cmd_nodal)

    p = sub.add_parser("doubling", help="doubling-index scan")
    p.add_argument("--spec", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-2)
    p.set_defaults(func=cmd_doubling)

    p = sub.add_parser("report", help="family bounds report")
    p.add_argument("--manifest", required=True,
                   help="JSON file: {\"specs\": [paths...], \"beta\": 0.01}")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NodalscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
