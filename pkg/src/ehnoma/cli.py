"""Command-line experiment runner.

`ehnoma run --preset fig5` reproduces a figure's curves as CSV + JSON report
+ manifest (+ PNG) in the output directory; `--config file.toml` runs a
custom sweep.  Exit status: 0 when every cross-evaluator agreement flag
passes, 2 on numerical disagreement, 1 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .model import SystemParams, db_to_lin
from .montecarlo import McConfig
from .presets import PRESET_NAMES, build_preset
from .sweep import SweepSpec, compare_report, emit_outputs, run_sweep

DEFAULT_OUT = os.environ.get("EHNOMA_OUT", "out")


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; status 2 is reserved for numerical disagreement
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _spec_from_config(path, mc_override=None, evaluators=None,
                      series_rel_tol=1e-10, variant="repaired"):
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    pkw = dict(doc.get("params", {}))
    if "snr_db" in pkw:
        pkw["p_s"] = float(pkw.get("sigma2", 1.0) * db_to_lin(pkw.pop("snr_db")))
    if "sigma_si_db" in pkw:
        pkw["sigma_si2"] = float(db_to_lin(pkw.pop("sigma_si_db")))
    pkw.setdefault("p_s", 1.0)
    base = SystemParams(**pkw)
    sw = doc.get("sweep", {})
    if "values" in sw:
        values = tuple(float(v) for v in sw["values"])
    elif {"start", "stop", "step"} <= set(sw):
        values = []
        v = float(sw["start"])
        while v <= float(sw["stop"]) + 1e-12:
            values.append(round(v, 12))
            v += float(sw["step"])
        values = tuple(values)
    else:
        raise ValueError("config [sweep] needs either 'values' or start/stop/step")
    mckw = doc.get("mc", {})
    mc = mc_override or McConfig(
        n_trials=int(mckw.get("trials", 1_000_000)),
        seed=int(mckw.get("seed", 2024)),
        batch_size=int(mckw.get("batch_size", 1_000_000)))
    return SweepSpec(
        axis=sw.get("axis", "snr_db"), values=values, base=base,
        evaluators=tuple(evaluators or sw.get("evaluators", ("exact", "asymptotic", "mc"))),
        mc=mc, label=sw.get("label", os.path.splitext(os.path.basename(path))[0]),
        series_rel_tol=series_rel_tol, variant=variant)


def main(argv=None) -> int:
    parser = _Parser(prog="ehnoma", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a preset or configured sweep")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESET_NAMES)
    src.add_argument("--config", help="TOML sweep configuration")
    run.add_argument("--evaluators", default=None,
                     help="comma list from exact,asymptotic,mc,quadrature")
    run.add_argument("--trials", type=int, default=1_000_000)
    run.add_argument("--seed", type=int, default=2024)
    run.add_argument("--batch-size", type=int, default=1_000_000)
    run.add_argument("--out", default=DEFAULT_OUT,
                     help=f"output directory (default {DEFAULT_OUT!r}; env EHNOMA_OUT)")
    run.add_argument("--series-tol", type=float, default=1e-10)
    run.add_argument("--fit-points", type=int, default=3,
                     help="highest-SNR points used by the diversity-order fit")
    run.add_argument("--variant", choices=("repaired", "printed"), default="repaired",
                     help="series form: event-consistent or as printed in the journal")
    run.add_argument("--p-th", type=float, default=None,
                     help="override the EH saturation threshold (linear)")
    run.add_argument("--workers", type=int, default=4)
    run.add_argument("--no-figures", action="store_true")

    args = parser.parse_args(argv)
    evaluators = tuple(args.evaluators.split(",")) if args.evaluators else None
    mc = McConfig(n_trials=args.trials, seed=args.seed, batch_size=args.batch_size)
    try:
        if args.preset:
            name = args.preset
            specs = build_preset(name, mc=mc,
                                 evaluators=evaluators or ("exact", "asymptotic", "mc"),
                                 series_rel_tol=args.series_tol, variant=args.variant,
                                 p_th=args.p_th)
        else:
            name = os.path.splitext(os.path.basename(args.config))[0]
            spec = _spec_from_config(args.config, mc_override=mc, evaluators=evaluators,
                                     series_rel_tol=args.series_tol, variant=args.variant)
            if args.p_th is not None:
                spec = SweepSpec(**{**spec.__dict__, "base": spec.base.replace(p_th=args.p_th)})
            specs = [spec]
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    results = [run_sweep(s, workers=args.workers) for s in specs]
    report = compare_report(results, fit_points=args.fit_points)
    try:
        paths = emit_outputs(name, results, report, args.out,
                             figures=not args.no_figures)
    except OSError as exc:
        print(f"error writing outputs: {exc}", file=sys.stderr)
        return 1

    print(f"{name}: {report.n_compared} exact/MC comparisons, "
          f"max |z| = {report.max_abs_z:.2f}, "
          f"max series-vs-quadrature gap = {report.max_series_quadrature_gap:.2e}")
    for label, user, do in report.diversity_orders:
        print(f"  fitted diversity order [{label} {user}]: {do:.2f}")
    for kind, p in paths.items():
        print(f"  {kind}: {p}")
    if report.n_compared and not report.all_agree:
        print("numerical disagreement between evaluators", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
