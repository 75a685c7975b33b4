"""Command-line front end.

Subcommands: simulate (write replicate data + ground truth), fit (estimate a
model from two CSV matrices), rank (cross-validated total ranks plus the
angle-based joint rank), evaluate (metrics of a fitted model against a
truth file), and bench (simulate -> fit -> evaluate over replicates and
settings, one results table).

Exit codes: 0 success (fit converged), 2 fit stopped at t_max (model still
written), 1 invalid input.
"""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .errors import InvalidInputError
from .families import binomial, gaussian, nll
from .fit import FitOptions, fit_ecca
from .io import load_matrix_csv, save_matrix_csv
from .metrics import EvalReport, append_reports_csv, chordal_distance, \
    relative_error
from .model import assemble_theta, load_model, save_model
from .rank import estimate_ranks
from .simulate import save_scenario, setting_scenario, simulate
from .soc import SocOptions

BENCH_COLUMNS = ["setting", "rep", "view", "relative_error",
                 "chordal_distance", "nll_final", "converged", "seconds",
                 "status"]


def parse_family(text):
    if text == "gaussian":
        return gaussian()
    if text.startswith("binomial:"):
        try:
            return binomial(int(text.split(":", 1)[1]))
        except ValueError:
            raise InvalidInputError(f"bad trial count in family spec {text!r}")
    raise InvalidInputError(
        f"family must be 'gaussian' or 'binomial:<m>', got {text!r}")


def parse_ranks(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise InvalidInputError("--ranks expects r0,r1,r2")
    r0, r1, r2 = (int(p) for p in parts)
    return r0, r1, r2


def parse_grid(text):
    """Either 'a:b' (inclusive) or a comma list of ranks."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",")]


def _fit_options(args):
    soc = SocOptions()
    if args.gamma is not None:
        soc.gamma = args.gamma
    opts = FitOptions(soc=soc, intercept=not args.no_intercept)
    if args.eps is not None:
        opts.eps = args.eps
    if args.t_max is not None:
        opts.t_max = args.t_max
    return opts


def _add_fit_flags(sub):
    sub.add_argument("--gamma", type=float, default=None,
                     help="SOC inverse step size (default 1000)")
    sub.add_argument("--eps", type=float, default=None,
                     help="outer objective-change tolerance")
    sub.add_argument("--t-max", type=int, default=None,
                     help="maximum outer iterations (default 100)")
    sub.add_argument("--no-intercept", action="store_true",
                     help="fix the intercepts at zero")


def cmd_simulate(args):
    os.makedirs(args.out, exist_ok=True)
    for rep in range(args.reps):
        scn = setting_scenario(args.setting,
                               seed=_rep_seed(args.seed, args.setting, rep),
                               snr=args.snr, trials=args.trials)
        truth = simulate(scn)
        rep_dir = os.path.join(args.out, f"rep_{rep}")
        os.makedirs(rep_dir, exist_ok=True)
        save_matrix_csv(truth.x1, os.path.join(rep_dir, "x1.csv"))
        save_matrix_csv(truth.x2, os.path.join(rep_dir, "x2.csv"))
        save_model(truth.model, os.path.join(rep_dir, "truth.json"))
        save_scenario(scn, os.path.join(rep_dir, "scenario.json"))
    return 0


def _rep_seed(seed, setting, rep):
    # stable 63-bit mix of (seed, setting, rep)
    return int(np.random.SeedSequence((seed, setting, rep)).generate_state(1)[0] >> 1)


def cmd_fit(args):
    x1 = load_matrix_csv(args.x1)
    x2 = load_matrix_csv(args.x2)
    fam1 = parse_family(args.family1)
    fam2 = parse_family(args.family2)
    if args.ranks:
        r0, r1, r2 = parse_ranks(args.ranks)
    elif args.rank_json:
        with open(args.rank_json) as fh:
            doc = json.load(fh)
        r0, r1, r2 = int(doc["r0"]), int(doc["r1"]), int(doc["r2"])
    else:
        raise InvalidInputError("provide --ranks or --rank-json")
    opts = _fit_options(args)
    model, trace = fit_ecca(x1, x2, fam1, fam2, r0, r1, r2, opts=opts)
    os.makedirs(args.out, exist_ok=True)
    save_model(model, os.path.join(args.out, "model.json"))
    _write_trace_csv(trace, os.path.join(args.out, "trace.csv"))
    return 0 if trace.converged else 2


def _write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "nll_total", "nll_loadings", "nll_scores_z",
                         "nll_scores_u", "max_residual"])
        writer.writerow([0, repr(trace.nll_initial), "", "", "", ""])
        for i in range(trace.n_iter):
            writer.writerow([
                i + 1, repr(trace.nll_total[i]), repr(trace.nll_loadings[i]),
                repr(trace.nll_scores_z[i]), repr(trace.nll_scores_u[i]),
                repr(trace.max_residual[i])])


def cmd_rank(args):
    x1 = load_matrix_csv(args.x1)
    x2 = load_matrix_csv(args.x2)
    fam1 = parse_family(args.family1)
    fam2 = parse_family(args.family2)
    grid1 = parse_grid(args.grid1 or args.grid)
    grid2 = parse_grid(args.grid2 or args.grid)
    est = estimate_ranks(x1, x2, fam1, fam2, grid1, grid2,
                         folds=args.folds, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    doc = {
        "r0": est.r0, "r1": est.r1, "r2": est.r2,
        "curves": {str(v): {str(r): val for r, val in curve.items()}
                   for v, curve in est.cv_curves.items()},
        "angles_deg": est.angles_deg,
        "split_index": est.split_index,
    }
    with open(os.path.join(args.out, "rank.json"), "w") as fh:
        json.dump(doc, fh, indent=1)
    return 0


def cmd_evaluate(args):
    model = load_model(args.model)
    truth = load_model(args.truth)
    reports = []
    for view in (1, 2):
        th_hat = assemble_theta(model, view)
        th = assemble_theta(truth, view)
        u, v = (model.u1, model.v1) if view == 1 else (model.u2, model.v2)
        ut, vt = (truth.u1, truth.v1) if view == 1 else (truth.u2, truth.v2)
        reports.append(EvalReport(
            setting=args.setting, rep=args.rep, view=view,
            relative_error=relative_error(th_hat, th),
            chordal_distance=chordal_distance(ut @ vt.T, u @ v.T)))
    append_reports_csv(args.out, reports)
    return 0


def cmd_bench(args):
    settings = [int(s) for s in args.settings.split(",")]
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for setting in settings:
        for rep in range(args.reps):
            scn = setting_scenario(setting, seed=_rep_seed(args.seed, setting, rep),
                                   snr=args.snr, trials=args.trials)
            t0 = time.perf_counter()
            try:
                truth = simulate(scn)
                model, trace = fit_ecca(
                    truth.x1, truth.x2, scn.fam1, scn.fam2,
                    scn.r0, scn.r1, scn.r2, opts=_fit_options(args))
                elapsed = time.perf_counter() - t0
                for view in (1, 2):
                    th_hat = assemble_theta(model, view)
                    th = (truth.theta1, truth.theta2)[view - 1]
                    u, v = (model.u1, model.v1) if view == 1 else (model.u2, model.v2)
                    ut, vt = (truth.model.u1, truth.model.v1) if view == 1 \
                        else (truth.model.u2, truth.model.v2)
                    x = (truth.x1, truth.x2)[view - 1]
                    fam = (scn.fam1, scn.fam2)[view - 1]
                    rows.append([
                        setting, rep, view,
                        repr(relative_error(th_hat, th)),
                        repr(chordal_distance(ut @ vt.T, u @ v.T)),
                        repr(nll(fam, x, th_hat)),
                        int(trace.converged),
                        repr(elapsed if args.timing else 0.0),
                        "ok",
                    ])
            except Exception as exc:  # record the failure, keep going
                elapsed = time.perf_counter() - t0
                rows.append([setting, rep, 0, "nan", "nan", "nan", 0,
                             repr(elapsed if args.timing else 0.0),
                             f"error: {exc}"])
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    path = os.path.join(args.out, "results.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_COLUMNS)
        writer.writerows(rows)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ecca",
        description="Two-view exponential-family CCA: simulate, fit, pick "
                    "ranks, evaluate, benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write simulated replicates")
    p.add_argument("--setting", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr", type=float, default=5.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the decomposition to two CSV matrices")
    p.add_argument("--x1", required=True)
    p.add_argument("--x2", required=True)
    p.add_argument("--family1", required=True)
    p.add_argument("--family2", required=True)
    p.add_argument("--ranks", default=None, help="r0,r1,r2")
    p.add_argument("--rank-json", default=None)
    p.add_argument("--out", required=True)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rank", help="estimate ranks by CV and principal angles")
    p.add_argument("--x1", required=True)
    p.add_argument("--x2", required=True)
    p.add_argument("--family1", required=True)
    p.add_argument("--family2", required=True)
    p.add_argument("--grid", default="1:10", help="'a:b' or comma list")
    p.add_argument("--grid1", default=None)
    p.add_argument("--grid2", default=None)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", help="metrics of a fitted model vs truth")
    p.add_argument("--model", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--setting", default="")
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="simulate -> fit -> evaluate over reps")
    p.add_argument("--setting", dest="settings", default="1",
                   help="setting or comma list from {1,2,3}")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr", type=float, default=5.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock seconds (breaks byte-identical "
                        "reruns; the default writes 0.0)")
    p.add_argument("--out", required=True)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
