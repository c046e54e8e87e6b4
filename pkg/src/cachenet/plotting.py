"""Vector-graphic renderings of sweep tables (no display required)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .config import ParameterError
from .sweep import read_rows

PLOT_KINDS = ("gamma_vs_n", "gamma_vs_ratio", "traffic_vs_ratio")

_NEEDED = {
    "gamma_vs_n": ["scenario", "n", "gamma_analytic", "gamma_sim", "gamma_baseline"],
    "gamma_vs_ratio": ["scenario", "lambda", "mu", "gamma_analytic", "gamma_sim"],
    "traffic_vs_ratio": ["scenario", "lambda", "mu", "total_traffic", "n", "b_content"],
}


def _column(rows, name):
    try:
        return [float(r[name]) for r in rows]
    except (KeyError, TypeError, ValueError):
        raise ParameterError(f"sweep table lacks a usable '{name}' column") from None


def _maybe_log(ax, axis: str, values):
    positive = [v for v in values if v > 0]
    if positive and max(positive) / min(positive) >= 100.0:
        getattr(ax, f"set_{axis}scale")("log")


def emit_plot(csv_path, kind: str, out_path) -> None:
    """Render one figure kind from a sweep CSV into a standalone vector file.

    Axes switch to log scale whenever the plotted quantity spans at least two
    decades.  The traffic plot draws the n*mu*B saturation level per scenario.
    """
    if kind not in PLOT_KINDS:
        raise ParameterError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    rows = read_rows(csv_path)
    for col in _NEEDED[kind]:
        if col not in rows[0]:
            raise ParameterError(f"sweep table lacks column '{col}'")

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    scenarios = sorted({r["scenario"] for r in rows})
    all_x: list[float] = []
    all_y: list[float] = []
    for scenario in scenarios:
        sub = [r for r in rows if r["scenario"] == scenario]
        if kind == "gamma_vs_n":
            x = _column(sub, "n")
            ax.plot(x, _column(sub, "gamma_analytic"), "o-", label=f"{scenario} analytic")
            ax.plot(x, _column(sub, "gamma_sim"), "s--", label=f"{scenario} simulated")
            ax.plot(x, _column(sub, "gamma_baseline"), ":", label=f"{scenario} no-cache")
            all_y += _column(sub, "gamma_analytic") + _column(sub, "gamma_sim")
            ax.set_xlabel("nodes n")
            ax.set_ylabel("download rate")
        else:
            lam = _column(sub, "lambda")
            mu = _column(sub, "mu")
            x = [a / b for a, b in zip(lam, mu)]
            if kind == "gamma_vs_ratio":
                ax.plot(x, _column(sub, "gamma_analytic"), "o-", label=f"{scenario} analytic")
                ax.plot(x, _column(sub, "gamma_sim"), "s--", label=f"{scenario} simulated")
                all_y += _column(sub, "gamma_analytic") + _column(sub, "gamma_sim")
                ax.set_ylabel("download rate")
            else:
                traffic = _column(sub, "total_traffic")
                ax.plot(x, traffic, "o-", label=f"{scenario} traffic")
                saturation = (float(sub[-1]["n"]) * float(sub[-1]["mu"])
                              * float(sub[-1]["b_content"]))
                ax.axhline(saturation, linestyle="--", alpha=0.6,
                           label=f"{scenario} n*mu*B")
                all_y += traffic + [saturation]
                ax.set_ylabel("total traffic")
            ax.set_xlabel("request / drop rate ratio")
        all_x += x
    _maybe_log(ax, "x", all_x)
    _maybe_log(ax, "y", all_y)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
