"""Command line front end.

Usage::

    netheat <subcommand> --config run.toml [--paired other.toml] [--out DIR] [--seed N]

Exit status is 0 when every requested verdict holds, 1 when one fails, 2 on
usage errors and the ``exit_code`` of the error class otherwise.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, evolution, semilinear
from .config import load_config
from .coupling import classify_coupling, verify_matrix_linf_contractivity
from .errors import MeshMismatch, NetheatError, NotPositive

COMMANDS = ("simulate", "spectrum", "kernel", "verify", "gaussian-fit", "semilinear", "check-matrix")
INTERNAL_ERROR = 70


def _fmt(x):
    return format(float(x), ".17g")


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _initial_state(op, cfg, seed):
    kind = cfg.run.initial
    if kind == "constant":
        return np.ones(op.ndof)
    if kind == "eigen":
        lam, V = op.pencil_eigh()
        v = V[:, 0].real
        return v / np.abs(v).max()
    return np.random.default_rng(seed).uniform(0.0, 1.0, op.ndof)


def _write_trajectory(out, op, traj):
    complex_ = any(np.iscomplexobj(s.values) for s in traj.states)
    with open(out / "trajectory.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "dof", "x", "value"] + (["value_imag"] if complex_ else []))
        for s in traj.states:
            for p, (x, v) in enumerate(zip(op.stretch, s.values)):
                row = [_fmt(s.time), p, _fmt(x), _fmt(np.real(v))]
                if complex_:
                    row.append(_fmt(np.imag(v)))
                w.writerow(row)
    with open(out / "norms.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "L1", "L2", "Linf"])
        for s, (n1, n2, ninf) in zip(traj.states, traj.norms):
            w.writerow([_fmt(s.time), _fmt(n1), _fmt(n2), _fmt(ninf)])


def cmd_simulate(cfg, args, out):
    op = cfg.build_operator()
    u0 = _initial_state(op, cfg, args.seed)
    _write_trajectory(out, op, evolution.evolve(op, u0, cfg.run.t_end, cfg.run.dt))
    return 0


def cmd_semilinear(cfg, args, out):
    op = cfg.build_operator()
    psi = cfg.psi or semilinear.NonlinearFlux.uniform("zero", op.network.m)
    u0 = _initial_state(op, cfg, args.seed)
    traj = semilinear.solve_semilinear(op, psi, u0, cfg.run.t_end, cfg.run.dt, cfg.blowup_cap)
    _write_trajectory(out, op, traj)
    return 0


def cmd_spectrum(cfg, args, out):
    op = cfg.build_operator()
    rep = analysis.spectrum(op, min(cfg.run.k, op.ndof))
    _write_json(out / "spectrum.json", rep.as_dict())
    return 0


def cmd_kernel(cfg, args, out):
    op = cfg.build_operator()
    with open(out / "kernel.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["t", "x", "y", "K"] + (["K_imag"] if op.is_complex else [])
        w.writerow(header)
        for t in cfg.run.times:
            km = evolution.heat_kernel(op, t)
            x = km.coordinates
            for p in range(op.ndof):
                for q in range(op.ndof):
                    v = km.entries[p, q]
                    row = [_fmt(t), _fmt(x[p]), _fmt(x[q]), _fmt(np.real(v))]
                    if op.is_complex:
                        row.append(_fmt(np.imag(v)))
                    w.writerow(row)
    return 0


def _verdict_suite(cfg, paired, seed):
    op = cfg.build_operator()
    tol = cfg.run.tolerance
    grid = list(cfg.run.times)
    rep = classify_coupling(op.coupling) if op.coupling.size else None

    def pred(flag):
        return True if rep is None else bool(getattr(rep, flag))

    records = []
    for verdict, flag in (
        (analysis.verify_realness(op, grid, seed=seed, tol=tol), "is_real"),
        (analysis.verify_positivity(op, grid, tol=analysis.POSITIVITY_RTOL), "positive_offdiagonal"),
        (analysis.verify_linf_contractivity(op, grid, seed=seed, tol=tol), "row_criterion"),
        (analysis.verify_l1_contractivity(op, grid, seed=seed, tol=tol), "column_criterion"),
        (analysis.verify_self_adjointness(op, grid), "is_self_adjoint"),
    ):
        records.append((verdict, pred(flag)))
    if paired is not None:
        other = paired.build_operator()
        if op.dirichlet_enforced and not other.dirichlet_enforced:
            records.append((analysis.verify_domination(op, other, grid, seed=seed), None))
        elif op.dirichlet_enforced == other.dirichlet_enforced:
            records.append((analysis.verify_coupling_domination(other, op, grid), None))
        else:
            raise MeshMismatch("paired config must describe the dominating (all-Kirchhoff or same-type) system")
    if records[1][0].holds:
        try:
            records.append((analysis.irreducibility_probe(op, max(grid)), None))
        except NotPositive:
            pass
    return records


def cmd_verify(cfg, args, out):
    paired = load_config(args.paired) if args.paired else None
    records = _verdict_suite(cfg, paired, args.seed)
    ok = True
    with open(out / "verdicts.jsonl", "w") as fh:
        for verdict, predicted in records:
            d = verdict.as_dict()
            if predicted is not None:
                d["predicted"] = predicted
            fh.write(json.dumps(d) + "\n")
            ok &= verdict.holds
    return 0 if ok else 1


def cmd_gaussian_fit(cfg, args, out):
    op = cfg.build_operator()
    fit = analysis.fit_gaussian_envelope(op, cfg.run.times)
    _write_json(out / "gaussian.json", fit.as_dict())
    dofs, xs = op.dofs.edge_positions()
    keep = dofs >= 0
    dofs, xs = dofs[keep], xs[keep]
    with open(out / "gaussian_samples.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y", "K", "bound"])
        for t in cfg.run.times:
            K = np.real(evolution.heat_kernel(op, t).entries)[np.ix_(dofs, dofs)]
            bound = fit.bound(t, np.abs(xs[:, None] - xs[None, :]))
            for p in range(xs.size):
                for q in range(xs.size):
                    w.writerow([_fmt(t), _fmt(xs[p]), _fmt(xs[q]), _fmt(K[p, q]), _fmt(bound[p, q])])
    return 0


def cmd_check_matrix(cfg, args, out):
    B = cfg.coupling
    rep = classify_coupling(B)
    grid = sorted(set(np.geomspace(1e-9, 10.0, 21).tolist()) | set(cfg.run.times))
    holds = verify_matrix_linf_contractivity(B, grid, seed=args.seed)
    verdict = analysis.PropertyVerdict(
        "matrix_linf_contractivity", holds, 1e-10,
        None if holds else {"row_margin": rep.row_margin},
        {"t_grid": grid},
    )
    d = verdict.as_dict()
    d["predicted"] = rep.row_criterion
    _write_json(out / "check_matrix.json", {"report": rep.as_dict(), "verdict": d})
    return 0 if holds else 1


HANDLERS = {
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "kernel": cmd_kernel,
    "verify": cmd_verify,
    "gaussian-fit": cmd_gaussian_fit,
    "semilinear": cmd_semilinear,
    "check-matrix": cmd_check_matrix,
}


def build_parser():
    p = argparse.ArgumentParser(prog="netheat", description="Diffusion on metric graphs with non-local vertex coupling.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--paired", help="second configuration (dominating system for domination checks)")
    p.add_argument("--out", help="output directory (default: run.out from the config)")
    p.add_argument("--seed", type=int, help="seed for randomized checks (default: run.seed)")
    return p


def run_subcommand(cmd, cfg, args):
    out = Path(args.out or cfg.run.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.seed is None:
        args.seed = cfg.run.seed
    return HANDLERS[cmd](cfg, args, out)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return run_subcommand(args.command, cfg, args)
    except NetheatError as exc:
        print(f"netheat: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # pragma: no cover
        print(f"netheat: internal error: {exc!r}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
