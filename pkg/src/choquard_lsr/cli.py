"""Command-line driver: ``choquard <stage> --config run.json --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .ansatz import build_ansatz
from .checks import Workbench, run_checks
from .config import RunConfig, load_config
from .errors import ChoquardError, ConfigError
from .fields import set_workers
from .landscape import concentration_study, find_critical_points, make_lattice, scan_reduced
from .radial import RadialGrid, linearized_spectrum, residual_report, solve_ground_state
from .reduction import InnerSystem, estimate_contraction, solve_auxiliary

log = logging.getLogger("choquard")


def _profile(cfg: RunConfig, out: Path):
    """Ground state from the cache in ``out`` or freshly computed (and cached)."""
    path = out / f"profile-{cfg.hash}.bin"
    p = io.load_profile(path, cfg.hash)
    if p is not None:
        log.info("using cached profile %s", path)
        return p, path, True
    r = cfg["radial"]
    p = solve_ground_state(RadialGrid(r["r_max"], r["n"]), r["tol"])
    io.save_profile(path, p, cfg.hash)
    return p, path, False


def cmd_ground_state(cfg, out, wb):
    """Solve (or load) the ground state and write its summary."""
    p, path, cached = _profile(cfg, out)
    summary = {"U0": p.peak, "tail": {"A": p.tail[0], "kappa": p.tail[1], "beta": p.tail[2]},
               "residual": residual_report(p), "mass": p.mass, "cache": path.name, "from_cache": cached}
    io.write_json(out / "ground_state.json", summary, cfg.hash)
    print(f"U(0)={p.peak:.10f} kappa={p.tail[1]:.5f} residual={summary['residual']['u_equation']:.2e}")
    return 0


def cmd_spectrum(cfg, out, wb):
    """Lowest eigenvalues of the linearized operator per angular sector."""
    sp = cfg["spectrum"]
    sectors = linearized_spectrum(wb.profile, sp["ell_max"], sp["k"])
    rows = [{"ell": s.ell, "index": i, "eigenvalue": float(v)}
            for s in sectors for i, v in enumerate(s.eigenvalues)]
    io.write_csv(out / "spectrum.csv", rows, ["ell", "index", "eigenvalue"], cfg.hash)
    io.write_json(out / "spectrum.json", {"sectors": {s.ell: s.eigenvalues.tolist() for s in sectors}},
                  cfg.hash)
    for s in sectors:
        print(f"ell={s.ell}: {np.array2string(s.eigenvalues, precision=6)}")
    return 0


def cmd_reduce(cfg, out, wb):
    """Solve the auxiliary equation at the probe point for each eps."""
    V = wb.potential
    prm = wb.solve_params(V)
    x = wb.probe_point(V)
    records = []
    for eps in cfg.eps:
        xi = x / eps
        ap = build_ansatz(wb.profile, xi, wb.ctx(V, eps), wb.box_at(xi))
        system = InnerSystem(ap, prm.lin_tol, prm.max_inner)
        res = solve_auxiliary(ap, params=prm, system=system)
        ce = estimate_contraction(ap, params=prm, w_star=res.w, system=system,
                                  pairs=cfg["solve"]["contraction_pairs"], seed=cfg["seed"])
        rec = res.record(ap)
        rec.update(delta_est=ce.delta_est, contraction_pairs=ce.as_dict())
        records.append(rec)
        print(f"eps={eps}: |w|_E={res.norm_E:.4e} iterations={res.iterations} "
              f"lipschitz={ce.estimate:.3e} in_gamma={res.in_gamma}")
    io.write_json(out / "reduce.json", {"slow_point": x.tolist(), "c0": prm.c0, "solves": records}, cfg.hash)
    return 0


def _scan_center(V, eps, wb):
    return (V.x0 if V.x0 is not None else wb.probe_point(V)) / eps


def cmd_scan(cfg, out, wb):
    """Scan the reduced functional on a lattice and report critical points."""
    V = wb.potential
    prm = wb.solve_params(V)
    sc = cfg["scan"]
    report = {}
    for eps in cfg.eps:
        lattice = make_lattice(_scan_center(V, eps, wb), sc["count"], sc["spacing"])
        samples = scan_reduced(wb.profile, wb.ctx(V, eps), lattice, prm, cfg["box"]["L"], cfg["box"]["n"],
                               wb.D, int(cfg["threads"]))
        rows = [s.row() for s in samples]
        io.write_csv(out / f"scan-eps{eps:g}.csv", rows, list(rows[0]), cfg.hash)
        crit = find_critical_points(samples, sc["spacing"], V, eps)
        report[f"{eps:g}"] = [c.as_dict() for c in crit]
        print(f"eps={eps}: {len(crit)} critical point(s) "
              + " ".join(f"{c.kind}@{np.round(c.x_slow, 4).tolist()} index={c.brouwer_index}" for c in crit))
    io.write_json(out / "critical_points.json", {"critical_points": report}, cfg.hash)
    return 0


def cmd_concentrate(cfg, out, wb):
    """Follow the critical point as eps decreases and record the solution peak."""
    V = wb.potential
    sc = cfg["scan"]
    series = concentration_study(wb.profile, V, cfg.eps, wb.solve_params(V), sc["count"], sc["spacing"],
                                 cfg["box"]["L"], cfg["box"]["n"], wb.truncation(V), int(cfg["threads"]))
    io.write_json(out / "concentration.json", series.as_dict(), cfg.hash)
    rows = [{"eps": r.eps, "peak_x1": r.peak_location[0], "peak_x2": r.peak_location[1],
             "peak_x3": r.peak_location[2], "peak_height": r.peak_height, "width": r.width,
             "norm_E": r.norm_E} for r in series.records]
    io.write_csv(out / "concentration.csv", rows, list(rows[0]), cfg.hash)
    for r in series.records:
        print(f"eps={r.eps}: peak {np.round(r.peak_location, 4).tolist()} height={r.peak_height:.5f} "
              f"width={r.width:.4f} |w|_E={r.norm_E:.3e}")
    return 0


def cmd_verify(cfg, out, wb):
    """Run the acceptance checks; exit 0 iff all pass."""
    results = run_checks(workbench=wb, echo=print)
    io.write_json(out / "verify.json", {"checks": [r.as_dict() for r in results],
                                        "passed": all(r.passed for r in results)}, cfg.hash)
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"first failing check: {failed[0].number} {failed[0].name}", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "ground-state": cmd_ground_state,
    "spectrum": cmd_spectrum,
    "reduce": cmd_reduce,
    "scan": cmd_scan,
    "concentrate": cmd_concentrate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="choquard", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=(fn.__doc__ or name).strip().splitlines()[0])
        sp.add_argument("--config", type=Path, help="JSON run configuration (defaults if omitted)")
        sp.add_argument("--out", type=Path, help="output directory (overrides the config)")
        sp.add_argument("--threads", type=int, help="FFT and scan worker count")
        sp.add_argument("--seed", type=int, help="random seed (overrides the config)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    if args.out is not None:
        overrides["out"] = str(args.out)
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = load_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    set_workers(int(cfg["threads"]))
    io.atomic_write(out / "config.json", cfg.to_json())
    try:
        profile = _profile(cfg, out)[0] if args.command != "ground-state" else None
        wb = Workbench(cfg, profile)
        return COMMANDS[args.command](cfg, out, wb)
    except ChoquardError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
