"""Figures from zkdamp suite outputs.

Strictly a consumer: every number comes from the timeseries CSVs (exact
header contract) and the line-delimited JSON summaries; no physics is
recomputed here. Rendering is deterministic for fixed inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CSV_HEADER = "t,E,H,grad_sq,h1_sq,dissipation,local_E,local_grad_sq_weighted"
FIGURE_KINDS = ("decay", "drift", "kato", "observability")

_SAVEFIG = dict(dpi=120, metadata={"Software": "zkplots"})


class FigureError(ValueError):
    pass


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str] = field(default_factory=list)
    output: str = "figure.png"
    summary: str | None = None
    suite: str | None = None  # summary record to pull fits from

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}")


def read_timeseries(path: str) -> dict[str, np.ndarray]:
    """Parse a contract CSV; malformed content names the first bad line."""
    fields = CSV_HEADER.split(",")
    lines = Path(path).read_text().split("\n")
    if not lines or lines[0] != CSV_HEADER:
        raise FigureError(f"{path}:1: bad or missing header")
    cols: dict[str, list[float]] = {name: [] for name in fields}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(fields):
            raise FigureError(f"{path}:{lineno}: expected {len(fields)} columns")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise FigureError(f"{path}:{lineno}: non-numeric entry") from None
        for name, v in zip(fields, values):
            cols[name].append(v)
    return {name: np.asarray(v) for name, v in cols.items()}


def read_summary(path: str, suite: str | None = None) -> dict:
    """Load one suite record from a JSONL summary (the first, or by name)."""
    records = []
    for lineno, line in enumerate(Path(path).read_text().split("\n"), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError:
            raise FigureError(f"{path}:{lineno}: invalid JSON") from None
    if not records:
        raise FigureError(f"{path}: empty summary")
    if suite is None:
        return records[0]
    for rec in records:
        if rec.get("suite") == suite:
            return rec
    raise FigureError(f"{path}: no record for suite {suite!r}")


def _fit_line(ax, t, fit, q0, label):
    delta, lnc = fit["delta_hat"], fit["lnC_hat"]
    ax.plot(
        t,
        q0 * np.exp(lnc - delta * t),
        "--",
        linewidth=1.0,
        label=f"{label} fit: rate {delta:.6g}",
    )


def fit_log_residual(t, q, fit) -> float:
    """Max deviation of ln q from the fitted envelope (what decay annotates)."""
    t = np.asarray(t)
    q = np.asarray(q)
    model = np.log(q[0]) + fit["lnC_hat"] - fit["delta_hat"] * t
    return float(np.max(np.abs(np.log(q) - model)))


def render_decay(spec: FigureSpec) -> None:
    cols = read_timeseries(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(7, 5))
    t = cols["t"]
    fits = {}
    if spec.summary:
        fits = read_summary(spec.summary, spec.suite).get("fits", {})
    for key, label in (("E", "E"), ("h1_sq", "H1 norm squared")):
        q = cols[key]
        if len(t) and np.all(q > 0):
            ax.semilogy(t, q, label=label)
            if key in fits and len(t):
                _fit_line(ax, t, fits[key], q[0], label)
                resid = fit_log_residual(t, q, fits[key])
                ax.annotate(
                    f"{label}: slope {fits[key]['delta_hat']:.6g}, "
                    f"max log-residual {resid:.2e}",
                    xy=(0.02, 0.06 if key == "E" else 0.12),
                    xycoords="axes fraction",
                    fontsize=8,
                )
    ax.set_xlabel("t")
    ax.set_ylabel("quantity")
    ax.set_title("exponential decay")
    if ax.lines:
        ax.legend(loc="upper right", fontsize=8)
    fig.savefig(spec.output, **_SAVEFIG)
    plt.close(fig)


def render_drift(spec: FigureSpec) -> None:
    cols = read_timeseries(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(7, 5))
    t = cols["t"]
    if len(t):
        e0, h0 = cols["E"][0], cols["H"][0]
        ax.semilogy(t, np.abs(cols["E"] / e0 - 1.0) + 1e-18, label="|E/E0 - 1|")
        if h0 != 0:
            ax.semilogy(t, np.abs(cols["H"] / h0 - 1.0) + 1e-18, label="|H/H0 - 1|")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.set_title("conservation drift")
    fig.savefig(spec.output, **_SAVEFIG)
    plt.close(fig)


def render_kato(spec: FigureSpec) -> None:
    if not spec.summary:
        raise FigureError("kato figure needs --summary")
    rec = read_summary(spec.summary, spec.suite or "smoothing")
    details = rec.get("details", {})
    labels = sorted(
        key[len("kato_lhs_"):] for key in details if key.startswith("kato_lhs_")
    )
    if not labels:
        raise FigureError("summary has no kato_lhs_* entries")
    fig, ax = plt.subplots(figsize=(7, 5))
    x = np.arange(len(labels))
    lhs = [details[f"kato_lhs_{lb}"] for lb in labels]
    rhs = [details[f"kato_rhs_{lb}"] for lb in labels]
    ax.bar(x - 0.2, lhs, width=0.4, label="time-integrated local gradient (LHS)")
    ax.bar(x + 0.2, rhs, width=0.4, label="weighted bound (RHS)")
    ax.set_xticks(x, labels)
    ax.set_ylabel("value")
    ax.set_title("local smoothing: two-sided check")
    ax.legend(fontsize=8)
    fig.savefig(spec.output, **_SAVEFIG)
    plt.close(fig)


def render_observability(spec: FigureSpec) -> None:
    if not spec.summary:
        raise FigureError("observability figure needs --summary")
    rec = read_summary(spec.summary, spec.suite or "observability")
    table = rec.get("reports", {}).get("max_ratio_table")
    if not table:
        raise FigureError("summary has no max_ratio_table report")
    cells = {}
    for key, v in table.items():
        t_part, l_part = key.split(",")
        cells[(float(t_part.split("=")[1]), float(l_part.split("=")[1]))] = v
    ts = sorted({k[0] for k in cells})
    ls = sorted({k[1] for k in cells})
    data = np.array([[cells[(t, l)] for l in ls] for t in ts])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.axis("off")
    tab = ax.table(
        cellText=[[f"{v:.3f}" for v in row] for row in data],
        rowLabels=[f"T={t:g}" for t in ts],
        colLabels=[f"L={l:g}" for l in ls],
        loc="center",
    )
    tab.scale(1.0, 1.5)
    ax.set_title("max observability ratio")
    fig.savefig(spec.output, **_SAVEFIG)
    plt.close(fig)


_RENDERERS = {
    "decay": render_decay,
    "drift": render_drift,
    "kato": render_kato,
    "observability": render_observability,
}


def render(spec: FigureSpec) -> None:
    """Render one figure to spec.output."""
    if spec.kind in ("decay", "drift") and not spec.inputs:
        raise FigureError(f"{spec.kind} figure needs an input CSV")
    _RENDERERS[spec.kind](spec)
