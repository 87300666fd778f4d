"""Command-line front end.

Subcommands ``solve``, ``verify``, ``whitney``, ``norms`` and ``report`` read
a JSON manifest and write their outputs to ``--out``.  Exit codes: 0 all
checks pass, 1 a verification failed, 2 usage error (bad flags or
manifest), 3 a mathematical precondition is violated.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import __version__
from .errors import (AccuracyError, ConvergenceWarning, DegenerateProbeError, EmptyCoverError,
                     InsufficientData, NoChainError, NotContractiveError, UndefinedNormError,
                     UnsupportedHomogeneity)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_MATH = 0, 1, 2, 3
_MATH_ERRORS = (NotContractiveError, UndefinedNormError, EmptyCoverError, DegenerateProbeError,
                AccuracyError, InsufficientData, NoChainError, UnsupportedHomogeneity)


class UsageError(Exception):
    """Malformed manifest or arguments."""


# --------------------------------------------------------------------------
# Manifest helpers


def load_manifest(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read manifest: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"manifest is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise UsageError("manifest must be a JSON object")
    return data


def _complex(v, default=0j) -> complex:
    if v is None:
        return complex(default)
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _grid(cfg: dict, dom):
    from .grid import make_grid

    g = cfg.get("grid", {})
    center = _complex(g.get("center"), dom.centroid if dom is not None else 0)
    return make_grid(center, float(g.get("half_width", 4.0)), int(g.get("resolution", 512)))


def _domain(cfg: dict, required: bool = True):
    from .geometry import resolve_domain

    if "domain" not in cfg:
        if required:
            raise UsageError("manifest needs a 'domain'")
        return None
    return resolve_domain(cfg["domain"])


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


# --------------------------------------------------------------------------
# solve


def make_problem(cfg: dict, dom, spec):
    """Build a :class:`~beltrami_lab.beltrami.BeltramiProblem` from the ``mu`` entry."""
    from . import beltrami as bt
    from .grid import ComplexField
    from .norms import SobolevParams

    mu = cfg.get("mu", {"family": "zero"})
    fam = mu.get("family", "zero")
    a = float(mu.get("amplitude", 0.0))
    prm = SobolevParams(int(cfg.get("n", 1)), float(cfg.get("p", 4)))
    c = _complex(mu.get("center"), dom.centroid)
    r = float(mu.get("radius", 0.5))
    if fam == "zero":
        return bt.BeltramiProblem(ComplexField.zeros(spec), dom, prm, lambda z: 0 * z)
    if fam == "bump":
        return bt.BeltramiProblem.from_function(bt.bump_coefficient(a, r, c), dom, spec, prm)
    if fam == "jump":
        return bt.BeltramiProblem.from_function(bt.jump_coefficient(a, r, c), dom, spec, prm)
    if fam == "mollified":
        return bt.BeltramiProblem(bt.mollified_coefficient(a, dom, spec), dom, prm)
    if fam == "constant":
        return bt.BeltramiProblem(dom.indicator(spec) * a, dom, prm)
    raise UsageError(f"unknown mu family {fam!r}")


def cmd_solve(cfg: dict, out: Path, seed: int) -> int:
    from . import beltrami as bt
    from .grid import ComplexField, write_cfld

    dom = _domain(cfg)
    spec = _grid(cfg, dom)
    prob = make_problem(cfg, dom, spec)
    tol, kmax = float(cfg.get("tol", 1e-10)), int(cfg.get("kmax", 500))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        sol = bt.solve(prob, tol, kmax)
    write_cfld(sol.h, out / "h.cfld")
    write_cfld(sol.f, out / "f.cfld")
    sol.trace.write_csv(out / "trace.csv")
    diag = dict(sol.diagnostics)
    diag["converged"] = sol.trace.converged
    diag["f_minus_z_sup"] = (sol.f - ComplexField(spec, spec.points)).sup()
    diag["grid"] = spec.to_json()
    diag["domain"] = dom.name
    ok = sol.trace.converged and diag["beltrami_relative"] <= float(cfg.get("residual_tol", 5e-3))
    if "resolutions" in cfg:
        table = bt.regularity_table(prob, cfg["resolutions"], tol, kmax)
        _write_json(out / "regularity.json", table)
        diag["regularity_bounded"] = table["bounded"]
    diag["pass"] = bool(ok)
    _write_json(out / "diagnostics.json", diag)
    print(f"solve: {sol.trace.iterations} iterations, relative Beltrami residual "
          f"{diag['beltrami_relative']:.3e}, {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# verify and report


def cmd_verify(cfg: dict, out: Path, seed: int, threads: int) -> int:
    from .identities import default_suite, run_suite, validate_suite, write_reports
    from .errors import InvalidArgument

    suite = cfg.get("suite", "default")
    jobs = default_suite() if suite == "default" else suite
    try:
        jobs = validate_suite(jobs)
    except InvalidArgument as e:
        raise UsageError(str(e)) from e
    reports = run_suite(jobs, seed, threads)
    write_reports(reports, out / "verification.csv")
    write_reports(reports, out / "reports.csv", append=True)
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"FAIL {r.identity} {json.dumps(r.params, sort_keys=True)} "
              f"defect={r.defect:.3e} tol={r.tolerance:.3e}")
    print(f"verify: {len(reports) - len(failed)}/{len(reports)} checks pass")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_report(cfg: dict, out: Path) -> int:
    from .identities import read_reports

    inputs = cfg.get("inputs") or [str(out / "verification.csv")]
    reports = []
    for p in inputs:
        if not Path(p).exists():
            raise UsageError(f"report input {p} does not exist")
        reports.extend(read_reports(p))
    summary = {}
    for r in reports:
        s = summary.setdefault(r.identity, {"checks": 0, "passed": 0, "worst_defect": 0.0})
        s["checks"] += 1
        s["passed"] += int(r.passed)
        s["worst_defect"] = max(s["worst_defect"], r.defect)
    _write_json(out / "summary.json", summary)
    for name in sorted(summary):
        s = summary[name]
        print(f"{name:22s} {s['passed']:4d}/{s['checks']:<4d} worst defect {s['worst_defect']:.3e}")
    return EXIT_OK if all(s["passed"] == s["checks"] for s in summary.values()) else EXIT_FAIL


# --------------------------------------------------------------------------
# whitney and norms


def cmd_whitney(cfg: dict, out: Path, seed: int) -> int:
    from .geometry.whitney import audit_chains, audit_covering, whitney

    dom = _domain(cfg)
    cov = whitney(dom, float(cfg.get("min_side", 2.0 ** -5)), float(cfg.get("c_w", 2.0)))
    cov.write_csv(out / "covering.csv")
    audit = {"covering": audit_covering(cov), "generations": cov.generation_census()}
    a = audit["covering"]
    ok = a["distance_ok"] and a["neighbor_ok"] and a["connected"] and a["collar_ok"]
    if cfg.get("chains", True):
        rho = float(cfg.get("rho0", 5.0))
        if cfg.get("calibrate", True):
            rho = cov.calibrate_rho(rho)
        ch = audit_chains(cov, rho)
        ch["chain_constant"] = float(cfg.get("chain_constant", 10.0))
        audit["chains"] = ch
        ok = ok and ch["chain_ratio_max"] <= ch["chain_constant"] and ch["shadow_ok"] \
            and ch["descendants_in_shadow"]
    if cfg.get("maximal", False):
        from .geometry.maximal import covering_grid, maximal_lemma_audit, random_densities

        spec = covering_grid(cov)
        gs = random_densities(spec, dom.mask(spec), int(cfg.get("densities", 5)), seed)
        worst = {"far": 0.0, "close": 0.0, "below": 0.0}
        for g in gs:
            r = maximal_lemma_audit(cov, g)
            worst = {k: max(worst[k], r[k]) for k in worst}
        audit["maximal"] = worst
        ok = ok and max(worst["far"], worst["close"]) <= float(cfg.get("maximal_constant", 20.0))
    audit["pass"] = bool(ok)
    _write_json(out / "audit.json", audit)
    print(f"whitney: {cov.size} cubes, {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _field(cfg: dict, spec):
    from .grid import ComplexField, read_cfld, sample

    f = cfg.get("field", {"kind": "constant", "value": 1.0})
    kind = f.get("kind")
    if kind == "constant":
        return ComplexField(spec, np.full(spec.shape, _complex(f.get("value", 1.0))))
    if kind == "polynomial":
        terms = f.get("terms", [])

        def fn(z):
            out = np.zeros(z.shape, dtype=complex)
            for t in terms:
                a, b, c = int(t[0]), int(t[1]), _complex(t[2:4] if len(t) >= 4 else t[2])
                out += c * z ** a * np.conj(z) ** b
            return out
        return sample(fn, spec)
    if kind == "cfld":
        return read_cfld(f["path"])
    raise UsageError(f"unknown field kind {kind!r}")


def cmd_norms(cfg: dict, out: Path, seed: int) -> int:
    from . import norms as nm

    dom = _domain(cfg)
    spec = _grid(cfg, dom)
    f = _field(cfg, spec)
    spec = f.spec
    records = []
    for item in cfg.get("norms", [{"norm": "lp", "p": 2}]):
        kind = item.get("norm")
        if kind == "lp":
            p = float(item.get("p", 2))
            records.append(nm.norm_record("lp", nm.lp_norm(f, dom, p), {"p": p}, dom, spec))
        elif kind == "sobolev":
            prm = nm.SobolevParams(int(item.get("n", 1)), float(item.get("p", 2)))
            v, collar = nm.sobolev_norm(f, dom, prm, item.get("variant", "full"), return_collar=True)
            records.append(nm.norm_record("sobolev", v, {"n": prm.n, "p": prm.p}, dom, spec, collar))
        elif kind == "holder":
            s = float(item.get("s", 0.5))
            records.append(nm.norm_record("holder", nm.holder_norm(f, dom, s, seed=seed), {"s": s},
                                          dom, spec))
        elif kind == "besov":
            s, p, m = float(item.get("s", 0.75)), float(item.get("p", 4)), int(item.get("M", 4096))
            v = nm.besov_boundary_seminorm(dom.normal_field(m), s, p)
            records.append(nm.norm_record("besov_boundary", v, {"s": s, "p": p, "M": m}, dom, spec))
        else:
            raise UsageError(f"unknown norm {kind!r}")
    (out / "norms.json").write_text(nm.dumps_records(records) + "\n")
    for r in records:
        print(f"{r['norm']:16s} {json.dumps(r['params'], sort_keys=True):30s} {r['value']}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beltrami-lab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, hlp in [("solve", "solve a Beltrami problem"),
                      ("verify", "run an identity verification suite"),
                      ("whitney", "build and audit a Whitney covering"),
                      ("norms", "evaluate discrete norms of a field"),
                      ("report", "summarize verification CSV files")]:
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--manifest", type=str, default=None, help="JSON manifest path")
        s.add_argument("--out", type=str, default=".", help="output directory")
        s.add_argument("--seed", type=int, default=None, help="run seed (overrides the manifest)")
        s.add_argument("--threads", type=int, default=1, help="worker threads")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        if args.command in ("solve", "whitney", "norms") and args.manifest is None:
            raise UsageError(f"{args.command} needs --manifest")
        cfg = load_manifest(args.manifest)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        if seed < 0:
            raise UsageError("seed must be non-negative")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with sfft.set_workers(args.threads):
            if args.command == "solve":
                return cmd_solve(cfg, out, seed)
            if args.command == "verify":
                return cmd_verify(cfg, out, seed, args.threads)
            if args.command == "whitney":
                return cmd_whitney(cfg, out, seed)
            if args.command == "norms":
                return cmd_norms(cfg, out, seed)
            return cmd_report(cfg, out)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except _MATH_ERRORS as e:
        print(f"precondition violated: {e}", file=sys.stderr)
        return EXIT_MATH
    except (KeyError, TypeError, ValueError) as e:
        print(f"usage error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
