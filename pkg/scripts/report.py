"""
Report assembly and rendering.

A report is a plain dict (the JSON contract, documented in
docs/report_schema.md) with up to four sections: metadata, classical, hybrid
and comparison. It renders three ways:

  - JSON:  json.dumps, floats at full round-trip precision, keys in insertion order
  - text:  markdown tables one per result table
  - CSV:   one pandas table per file (coefficients, fitted, predictions, summary)
"""

import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from classical_glm import (
    ClassicalFit,
    DispersionTest,
    FitMethod,
    ResidualSet,
    classical_r_squared,
    classical_reserve,
    predict_crisp,
)
from errors import DegenerateVariance
from hybrid_fls import FuzzyReserve, FuzzyTriangle, HybridFit
from triangle import RunOffTriangle, cell_order, column_labels

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-8
CSV_FLOAT_FORMAT = "%.17g"


# ---------------------------------------------------------------------------
# Section builders
# ---------------------------------------------------------------------------
def build_metadata(input_path: Path, input_bytes: bytes, version: str, config: dict) -> dict:
    mtime = datetime.fromtimestamp(input_path.stat().st_mtime, tz=timezone.utc)
    return {
        "tool": "hybrid-reserve",
        "version": version,
        "input": {
            "path": str(input_path),
            "sha256": hashlib.sha256(input_bytes).hexdigest(),
            "modified": mtime.isoformat(),
        },
        "config": config,
    }


def _cell_key(t: RunOffTriangle, i: int, j: int) -> dict:
    return {"origin": i, "origin_label": t.origin_label(i), "dev": j}


def _opt(values: np.ndarray | None, idx: int) -> float | None:
    return None if values is None else float(values[idx])


def classical_section(
    t: RunOffTriangle, fit: ClassicalFit, dispersion: DispersionTest | None
) -> dict:
    flags = fit.significant()
    coefficients = [
        {
            "name": name,
            "estimate": float(fit.beta_hat[idx]),
            "std_error": _opt(fit.std_errors, idx),
            "z": _opt(fit.z_stats, idx),
            "p_value": _opt(fit.p_values, idx),
            "significant": None if flags is None else bool(flags[idx]),
        }
        for idx, name in enumerate(fit.columns)
    ]
    y = t.payments()
    fitted = [
        {**_cell_key(t, c.i, c.j), "observed": float(obs), "fitted_mean": float(mu)}
        for c, obs, mu in zip(cell_order(t), y, fit.fitted_means)
    ]
    predictions = [
        {**_cell_key(t, c.i, c.j), "value": value} for c, value in predict_crisp(t, fit)
    ]
    section = {
        "method": str(fit.method),
        "converged": fit.converged,
        "iterations": fit.iterations,
        "coefficients": coefficients,
        "r_squared": fit.r_squared,
        "r_squared_sse": classical_r_squared(t, fit),
        "deviance": fit.deviance,
        "fitted": fitted,
        "predictions": predictions,
        "total_reserve": classical_reserve(t, fit),
        "dispersion": None,
    }
    if dispersion is not None:
        section["dispersion"] = {
            "z_stat": dispersion.z_stat,
            "p_value": dispersion.p_value,
            "alternative": dispersion.alternative,
            "reject_null": dispersion.reject_null,
        }
    return section


def hybrid_section(t: RunOffTriangle, fit: HybridFit, reserve: FuzzyReserve) -> dict:
    p = fit.params
    g = fit.goodness
    if g is None:
        raise DegenerateVariance("fuzzy goodness of fit is undefined on constant channels")
    return {
        "params": {
            "beta": {name: float(b) for name, b in zip(column_labels(t.k), p.beta)},
            "theta": p.theta,
            "lambda": p.lambda_,
            "delta": p.delta,
            "mu": p.mu,
        },
        "converged": fit.converged,
        "iterations": fit.iterations,
        "objective": float(fit.objective_trace[-1]),
        "goodness": {"fsst": g.fsst, "fssr": g.fssr, "fsse": g.fsse, "r2_fuzzy": g.r2_fuzzy},
        "fitted_log": [
            {**_cell_key(t, c.i, c.j), **tfn.as_dict()} for c, tfn in fit.fitted_tfns()
        ],
        "predictions": [
            {**_cell_key(t, c.i, c.j), **tfn.as_dict()}
            for c, tfn in zip(reserve.cells, reserve.predictions)
        ],
        "total_reserve": reserve.total.as_dict() if reserve.total else None,
        "crisp_reserve": reserve.crisp_value,
        "pi": reserve.pi,
    }


def intermediates_section(res: ResidualSet, ft: FuzzyTriangle, fit: HybridFit) -> dict:
    return {
        "pearson_residuals": [float(v) for v in res.pearson],
        "adjusted_residuals": [float(v) for v in res.adjusted],
        "residual_scale": res.scale,
        "fuzzy_triangle": [
            {"origin": c.i, "dev": c.j, **tfn.as_dict()} for c, tfn in zip(ft.cells, ft.tfns())
        ],
        "objective_trace": {
            "initial": float(fit.objective_trace[0]),
            "final": float(fit.objective_trace[-1]),
            "sweeps": int(fit.objective_trace.size - 1),
        },
    }


def verdict(r2_fuzzy: float, r2_classical: float, tol: float = TIE_TOLERANCE) -> str:
    if abs(r2_fuzzy - r2_classical) <= tol:
        return "tie"
    return "hybrid preferred" if r2_fuzzy > r2_classical else "classical preferred"


def comparison_section(classical: dict, hybrid: dict) -> dict:
    r2c = classical["r_squared"]
    r2f = hybrid["goodness"]["r2_fuzzy"]
    return {
        "classical_r_squared": r2c,
        "classical_r_squared_sse": classical["r_squared_sse"],
        "classical_reserve": classical["total_reserve"],
        "fuzzy_r_squared": r2f,
        "crisp_reserve": hybrid["crisp_reserve"],
        "fuzzy_total_reserve": hybrid["total_reserve"],
        "verdict": verdict(r2f, r2c),
    }


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------
def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# Text (markdown)
# ---------------------------------------------------------------------------
def _fmt(value: float | None, spec: str = ".7f") -> str:
    return "n/a" if value is None else format(value, spec)


_R2_LABELS = {
    FitMethod.MLE.value: "log-likelihood ratio",
    FitMethod.LEAST_SQUARES.value: "log scale",
}


def _classical_lines(c: dict) -> list[str]:
    lines = [
        f"## Classical log-Poisson fit ({c['method']})",
        "",
        "| Coefficient | Estimate | Std. error | z | p-value | Sig. 1% |",
        "|-------------|---------:|-----------:|--:|--------:|:-------:|",
    ]
    for row in c["coefficients"]:
        sig = "" if row["significant"] is None else ("yes" if row["significant"] else "no")
        lines.append(
            f"| {row['name']} | {row['estimate']:.5f} | {_fmt(row['std_error'], '.5f')} "
            f"| {_fmt(row['z'], '.3f')} | {_fmt(row['p_value'], '.4f')} | {sig} |"
        )
    lines += [
        "",
        f"**R² ({_R2_LABELS[c['method']]}):** {c['r_squared']:.7f}  ",
        f"**R² (payment scale):** {c['r_squared_sse']:.7f}  ",
        f"**Total reserve:** {c['total_reserve']:.2f}",
        "",
    ]
    d = c["dispersion"]
    if d is not None:
        outcome = "rejected" if d["reject_null"] else "not rejected"
        lines += [
            "### Overdispersion test",
            "",
            "| Z | p-value | Alternative | Equidispersion |",
            "|--:|--------:|-------------|----------------|",
            f"| {d['z_stat']:.4f} | {d['p_value']:.4f} | {d['alternative']} | {outcome} |",
            "",
        ]
    return lines


def _tfn_table(title: str, rows: list[dict], spec: str) -> list[str]:
    lines = [
        f"### {title}",
        "",
        "| Cell | Left | Center | Right |",
        "|------|-----:|-------:|------:|",
    ]
    for r in rows:
        lines.append(
            f"| {r['origin']}{r['dev']} | {r['left']:{spec}} | {r['center']:{spec}} "
            f"| {r['right']:{spec}} |"
        )
    lines.append("")
    return lines


def _hybrid_lines(h: dict) -> list[str]:
    p = h["params"]
    g = h["goodness"]
    status = f"converged after {h['iterations']} sweeps" if h["converged"] else (
        f"NOT converged ({h['iterations']} sweeps)"
    )
    lines = [
        "## Hybrid fuzzy least-squares fit",
        "",
        f"_{status}_",
        "",
        "| Parameter | Estimate |",
        "|-----------|---------:|",
    ]
    lines += [f"| {name} | {value:.10f} |" for name, value in p["beta"].items()]
    lines += [
        f"| theta | {p['theta']:.10f} |",
        f"| lambda | {p['lambda']:.10f} |",
        f"| delta | {p['delta']:.10f} |",
        f"| mu | {p['mu']:.10f} |",
        "",
        f"**FSST / FSSR / FSSE:** {g['fsst']:.8f} / {g['fssr']:.8f} / {g['fsse']:.8f}  ",
        f"**Fuzzy R²:** {g['r2_fuzzy']:.7f}",
        "",
    ]
    lines += _tfn_table("Fitted values (log scale)", h["fitted_log"], ".6f")
    lines += _tfn_table("Predicted payments", h["predictions"], ".3f")
    total = h["total_reserve"]
    if total is not None:
        lines += [
            f"**Fuzzy total reserve:** ({total['left']:.3f}, {total['center']:.3f}, "
            f"{total['right']:.3f})  ",
            f"**Crisp reserve (pi = {h['pi']}):** {h['crisp_reserve']:.4f}",
            "",
        ]
    return lines


def _comparison_lines(cmp: dict) -> list[str]:
    return [
        "## Model comparison",
        "",
        "| Model | Fit index | Reserve |",
        "|-------|----------:|--------:|",
        f"| Classical | R² = {cmp['classical_r_squared']:.7f} | {cmp['classical_reserve']:.2f} |",
        f"| Hybrid | R²_F = {cmp['fuzzy_r_squared']:.7f} | {cmp['crisp_reserve']:.4f} |",
        "",
        f"**Verdict:** {cmp['verdict']}",
        "",
    ]


def render_text(report: dict) -> str:
    meta = report["metadata"]
    lines = [
        f"# Reserve report: {Path(meta['input']['path']).name}",
        "",
        f"sha256 `{meta['input']['sha256']}` · {meta['tool']} {meta['version']}",
        "",
    ]
    if "classical" in report:
        lines += _classical_lines(report["classical"])
    if "hybrid" in report:
        lines += _hybrid_lines(report["hybrid"])
    if "comparison" in report:
        lines += _comparison_lines(report["comparison"])
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------
def build_tables(report: dict) -> dict[str, pd.DataFrame]:
    """Flatten a report into the CSV tables it supports; absent sections yield no table."""
    coef, fitted, preds, summary = [], [], [], []

    if (c := report.get("classical")) is not None:
        coef += [{"model": "classical", **row} for row in c["coefficients"]]
        fitted += [{"model": "classical", **row} for row in c["fitted"]]
        preds += [{"model": "classical", **row} for row in c["predictions"]]
        summary += [
            {"model": "classical", "metric": "r_squared", "value": c["r_squared"]},
            {"model": "classical", "metric": "r_squared_sse", "value": c["r_squared_sse"]},
            {"model": "classical", "metric": "total_reserve", "value": c["total_reserve"]},
        ]
        if c["dispersion"] is not None:
            summary += [
                {"model": "classical", "metric": "dispersion_z", "value": c["dispersion"]["z_stat"]},
                {"model": "classical", "metric": "dispersion_p", "value": c["dispersion"]["p_value"]},
            ]

    if (h := report.get("hybrid")) is not None:
        p = h["params"]
        coef += [{"model": "hybrid", "name": n, "estimate": v} for n, v in p["beta"].items()]
        coef += [
            {"model": "hybrid", "name": n, "estimate": p[n]}
            for n in ("theta", "lambda", "delta", "mu")
        ]
        fitted += [{"model": "hybrid", **row} for row in h["fitted_log"]]
        preds += [{"model": "hybrid", **row} for row in h["predictions"]]
        summary += [
            {"model": "hybrid", "metric": name, "value": value}
            for name, value in h["goodness"].items()
        ]
        if h["total_reserve"] is not None:
            summary += [
                {"model": "hybrid", "metric": f"total_reserve_{side}", "value": value}
                for side, value in h["total_reserve"].items()
            ]
            summary.append({"model": "hybrid", "metric": "crisp_reserve", "value": h["crisp_reserve"]})
        summary.append({"model": "hybrid", "metric": "iterations", "value": h["iterations"]})

    if (cmp := report.get("comparison")) is not None:
        summary.append({"model": "comparison", "metric": "verdict", "value": cmp["verdict"]})

    tables = {"coefficients": coef, "fitted": fitted, "predictions": preds, "summary": summary}
    return {name: pd.DataFrame(rows) for name, rows in tables.items() if rows}


def write_csv(report: dict, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, frame in build_tables(report).items():
        path = out_dir / f"{name}.csv"
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        written.append(path)
        logger.info("wrote %s (%d rows)", path, len(frame))
    return written
