"""Parameter sweeps across the evaluators, agreement reporting, and file
emission (CSV + JSON report + manifest + figures)."""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import analytic, asymptotic
from .model import SystemParams, db_to_lin, lin_to_db
from .montecarlo import McConfig, estimate_op

SCHEMA_VERSION = 1
NULL = "NA"  # explicit null token in CSV cells

CSV_COLUMNS = (
    "axis", "axis_value", "snr_db", "user", "duplex", "sigma_si_db", "rho",
    "d_s2", "n_antennas", "label", "op_exact", "op_asym", "op_mc",
    "mc_stderr", "mc_low_count", "op_quadrature", "series_terms",
    "series_converged",
)

EVALUATORS = ("exact", "asymptotic", "mc", "quadrature")

_AXES = {
    "snr_db": lambda b, v: b.replace(p_s=float(b.sigma2 * db_to_lin(v))),
    "sigma_si_db": lambda b, v: b.replace(sigma_si2=float(db_to_lin(v))),
    "rho": lambda b, v: b.replace(rho=float(v)),
    # the near user sits on the BS -> far-user line, so moving it changes
    # both hops: d_21 = d_s1 - d_s2
    "d_s2": lambda b, v: b.replace(d_s2=float(v), d_21=b.d_s1 - float(v)),
    "n_antennas": lambda b, v: b.replace(n_rx=int(v)),
}


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    base: SystemParams
    evaluators: tuple = ("exact", "asymptotic", "mc")
    mc: McConfig = field(default_factory=McConfig)
    label: str = ""
    series_rel_tol: float = analytic.DEFAULT_REL_TOL
    variant: str = analytic.REPAIRED

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ValueError("sweep needs at least one axis value")
        vals = [float(v) for v in self.values]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("axis values must be strictly increasing")
        unknown = set(self.evaluators) - set(EVALUATORS)
        if unknown:
            raise ValueError(f"unknown evaluators: {sorted(unknown)}")

    def points(self):
        """Materialize SystemParams along the axis; report the bad index."""
        out = []
        for i, v in enumerate(self.values):
            try:
                out.append(_AXES[self.axis](self.base, v))
            except ValueError as exc:
                raise ValueError(f"axis point {i} ({self.axis}={v!r}) is invalid: {exc}") from exc
        return out


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple  # one dict per (axis point, user)


def _evaluate_point(spec: SweepSpec, value, params: SystemParams):
    rec = {
        "axis": spec.axis,
        "axis_value": float(value),
        "snr_db": params.snr_db,
        "duplex": params.duplex,
        "sigma_si_db": float(lin_to_db(params.sigma_si2)) if params.sigma_si2 > 0 else -math.inf,
        "rho": params.rho,
        "d_s2": params.d_s2,
        "n_antennas": params.n_rx,
        "label": spec.label,
    }
    per_user = {"u1": dict(rec, user="u1"), "u2": dict(rec, user="u2")}
    if "exact" in spec.evaluators:
        rep = analytic.op_u1_exact(params, rel_tol=spec.series_rel_tol, variant=spec.variant)
        per_user["u1"].update(op_exact=rep.value, series_terms=rep.terms_used,
                              series_converged=rep.converged)
        per_user["u2"].update(op_exact=analytic.op_u2_exact(params))
    if "asymptotic" in spec.evaluators:
        per_user["u1"].update(op_asym=asymptotic.op_u1_asymptotic(params))
        per_user["u2"].update(op_asym=asymptotic.op_u2_asymptotic(params))
    if "quadrature" in spec.evaluators:
        per_user["u1"].update(op_quadrature=analytic.op_u1_quadrature_oracle(
            params, variant=spec.variant))
    if "mc" in spec.evaluators:
        mc = estimate_op(params, spec.mc)
        per_user["u1"].update(op_mc=mc.p_u1, mc_stderr=mc.stderr_u1,
                              mc_low_count=mc.low_count_u1, mc_n_trials=mc.n_trials)
        per_user["u2"].update(op_mc=mc.p_u2, mc_stderr=mc.stderr_u2,
                              mc_low_count=mc.low_count_u2, mc_n_trials=mc.n_trials)
    return [per_user["u1"], per_user["u2"]]


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every requested evaluator at every axis point.

    Points are independent; the MC batching inside a point is deterministic,
    so the result is identical for any worker count.  Evaluator errors are
    recorded per point rather than aborting the sweep.
    """
    params = spec.points()

    def one(iv):
        i, v = iv
        try:
            return _evaluate_point(spec, v, params[i])
        except (ArithmeticError, ValueError) as exc:
            rec = {"axis": spec.axis, "axis_value": float(v), "label": spec.label,
                   "snr_db": params[i].snr_db, "duplex": params[i].duplex,
                   "sigma_si_db": float(lin_to_db(params[i].sigma_si2)) if params[i].sigma_si2 > 0 else -math.inf,
                   "rho": params[i].rho, "d_s2": params[i].d_s2,
                   "n_antennas": params[i].n_rx, "error": str(exc)}
            return [dict(rec, user="u1"), dict(rec, user="u2")]

    items = list(enumerate(spec.values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(one, items))
    else:
        nested = [one(iv) for iv in items]
    rows = tuple(r for pair in nested for r in pair)
    return SweepResult(spec=spec, rows=rows)


# ---------------------------------------------------------------------------
# agreement report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    points: tuple
    max_abs_z: float
    max_series_quadrature_gap: float
    diversity_orders: tuple        # ((label, user, fitted_do), ...)
    all_agree: bool
    n_compared: int


def _agreement(exact, mc, stderr, n_trials=0):
    if abs(exact - mc) <= 3.0 * stderr:
        return True
    if exact < 1e-7 and mc < 1e-7:
        return True
    # The 3-sigma rule presumes the normal approximation, which breaks down
    # when either hit count is small (the estimates the spec itself flags
    # "low-count").  There, apply the equivalent exact binomial test: accept
    # unless the observed count is outside the central 99.73% of
    # Binomial(n, exact).
    if n_trials > 0:
        k = round(mc * n_trials)
        if min(k, n_trials - k) < 100:
            from scipy import stats as _stats
            lo = _stats.binom.cdf(k, n_trials, min(max(exact, 0.0), 1.0))
            hi = _stats.binom.sf(k - 1, n_trials, min(max(exact, 0.0), 1.0))
            return bool(min(lo, hi) >= 0.00135)
    return False


def compare_report(results, fit_points: int = 3) -> ComparisonReport:
    """Cross-evaluator consistency: z-scores of exact vs MC, series vs
    quadrature relative gaps, and diversity-order fits on the exact curves."""
    if isinstance(results, SweepResult):
        results = [results]
    pts = []
    max_z = 0.0
    max_gap = 0.0
    all_agree = True
    n_compared = 0
    for res in results:
        for row in res.rows:
            entry = {k: row.get(k) for k in ("label", "user", "axis", "axis_value")}
            exact = row.get("op_exact")
            mc = row.get("op_mc")
            stderr = row.get("mc_stderr")
            quad = row.get("op_quadrature")
            if exact is not None and mc is not None:
                n_compared += 1
                z = (exact - mc) / stderr if stderr and stderr > 0 else 0.0
                agree = _agreement(exact, mc, stderr if stderr else 0.0,
                                   row.get("mc_n_trials", 0))
                entry.update(z=z, agree=agree)
                max_z = max(max_z, abs(z))
                all_agree = all_agree and agree
            if exact is not None and quad is not None and exact > 1e-12:
                gap = abs(exact - quad) / quad if quad > 0 else 0.0
                entry.update(series_quadrature_gap=gap)
                max_gap = max(max_gap, gap)
            pts.append(entry)
    dos = []
    for res in results:
        if res.spec.axis != "snr_db":
            continue
        for user in ("u1", "u2"):
            curve = [(r["axis_value"], r["op_exact"]) for r in res.rows
                     if r["user"] == user and r.get("op_exact")]
            window = curve[-max(3, fit_points):]
            if len(window) >= 3 and all(v > 0 for _, v in window):
                dos.append((res.spec.label, user,
                            asymptotic.diversity_order_fit(curve, fit_points)))
    return ComparisonReport(points=tuple(pts), max_abs_z=max_z,
                            max_series_quadrature_gap=max_gap,
                            diversity_orders=tuple(dos),
                            all_agree=all_agree, n_compared=n_compared)


# ---------------------------------------------------------------------------
# file emission
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return NULL
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, results):
    if isinstance(results, SweepResult):
        results = [results]
    lines = [",".join(CSV_COLUMNS)]
    for res in results:
        for row in res.rows:
            lines.append(",".join(_fmt(row.get(c)) for c in CSV_COLUMNS))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {o!r}")


def write_report(path, report: ComparisonReport):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "summary": {
            "max_abs_z": report.max_abs_z,
            "max_series_quadrature_gap": report.max_series_quadrature_gap,
            "diversity_orders": [
                {"label": l, "user": u, "fitted_do": d}
                for l, u, d in report.diversity_orders
            ],
            "all_agree": report.all_agree,
            "points_compared": report.n_compared,
        },
        "points": list(report.points),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def write_manifest(path, name, results):
    if isinstance(results, SweepResult):
        results = [results]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "package_version": __version__,
        "null_token": NULL,
        "sweeps": [
            {
                "label": r.spec.label,
                "axis": r.spec.axis,
                "values": [float(v) for v in r.spec.values],
                "evaluators": list(r.spec.evaluators),
                "series_rel_tol": r.spec.series_rel_tol,
                "series_variant": r.spec.variant,
                "mc": dataclasses.asdict(r.spec.mc),
                "params": dataclasses.asdict(r.spec.base),
            }
            for r in results
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def write_figure(path, name, results):
    """Render the swept OP curves (exact solid, asymptotic dashed, MC marks)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 5.2), dpi=150)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    ci = 0
    axis = results[0].spec.axis
    for res in results:
        for user in ("u1", "u2"):
            rows = [r for r in res.rows if r["user"] == user and "error" not in r]
            if not rows:
                continue
            x = [r["axis_value"] for r in rows]
            color = colors[ci % len(colors)]
            ci += 1
            lbl = f"{res.spec.label} {user}".strip()
            ex = [r.get("op_exact") for r in rows]
            if any(v is not None for v in ex):
                ax.semilogy(x, [v if v and v > 0 else float("nan") for v in ex],
                            "-", color=color, label=lbl)
            asym = [r.get("op_asym") for r in rows]
            if any(v is not None for v in asym):
                ax.semilogy(x, [v if v and v > 0 else float("nan") for v in asym],
                            "--", color=color, alpha=0.6)
            mc = [r.get("op_mc") for r in rows]
            if any(v is not None for v in mc):
                ax.semilogy(x, [v if v and v > 0 else float("nan") for v in mc],
                            "o", color=color, markersize=3.5, mfc="none")
    ax.set_xlabel(axis)
    ax.set_ylabel("outage probability")
    ax.set_title(name)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    # strip the version-carrying Software chunk so bytes are reproducible
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def emit_outputs(name, results, report, out_dir, figures: bool = True):
    """Write {name}.csv, {name}_report.json, {name}_manifest.json and, when
    figures are enabled, {name}.png into out_dir.  Returns the paths."""
    if isinstance(results, SweepResult):
        results = [results]
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    paths["csv"] = os.path.join(out_dir, f"{name}.csv")
    write_csv(paths["csv"], results)
    paths["report"] = os.path.join(out_dir, f"{name}_report.json")
    write_report(paths["report"], report)
    paths["manifest"] = os.path.join(out_dir, f"{name}_manifest.json")
    write_manifest(paths["manifest"], name, results)
    if figures:
        paths["figure"] = os.path.join(out_dir, f"{name}.png")
        write_figure(paths["figure"], name, results)
    return paths
