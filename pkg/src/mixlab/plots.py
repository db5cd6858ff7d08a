"""Figure rendering for convergence reports.

The converge report path writes these PNGs next to the CSV: the two-level
distance decay, the per-set evaluation gaps, and the d_mixed-vs-d_meta
response with the nonexpansive diagonal.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import Certificate, ConvergenceReport  # noqa: E402

__all__ = ["render_report"]

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_report(
    report: ConvergenceReport,
    prefix,
    certificate: Certificate | None = None,
) -> list[Path]:
    """Render the report figures to <prefix>_distances.png etc.

    Returns the list of written paths.
    """
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    ks = [s.k for s in report.steps]
    written: list[Path] = []

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(ks, report.d_meta_series, "o-", label="d_meta (second level)")
        ax.semilogy(ks, report.d_mixed_series, "s-", label="d_mixed (mixtures)")
        if report.schedule is not None:
            ax.semilogy(ks, report.schedule, "--", color="gray", label="schedule")
        ax.set_xlabel("step k")
        ax.set_ylabel("distance")
        ax.set_title(f"Two-level convergence ({report.metric} metric)")
        ax.legend()
        written.append(_finish(fig, prefix.with_name(prefix.name + "_distances.png")))

        fig, ax = plt.subplots()
        for i, sid in enumerate(report.set_ids):
            marker = "x" if report.verdicts[i] == "violates_bcond" else "."
            ax.plot(ks, report.gap_series(i), marker + "-", label=f"{sid} [{report.verdicts[i]}]")
        ax.axhline(report.gap_tol, color="gray", linestyle="--", linewidth=1, label="gap_tol")
        ax.set_xlabel("step k")
        ax.set_ylabel("|mix(nu_k)(A) - mix(nu_0)(A)|")
        ax.set_title("Set-evaluation gaps")
        if report.set_ids:
            ax.legend()
        written.append(_finish(fig, prefix.with_name(prefix.name + "_gaps.png")))

        fig, ax = plt.subplots()
        x = report.d_meta_series
        y = report.d_mixed_series
        ax.plot(x, y, "o", label="(d_meta, d_mixed)")
        lim = max(float(x.max()), float(y.max()), 1e-12)
        ax.plot([0, lim], [0, lim], "--", color="gray", label="d_mixed = d_meta")
        if certificate is not None:
            ax.plot(
                [0, lim],
                [certificate.fit_intercept, certificate.fit_intercept + certificate.fit_slope * lim],
                "-",
                color="tab:red",
                linewidth=1,
                label=f"fit: slope={certificate.fit_slope:.3g}, icpt={certificate.fit_intercept:.2g}",
            )
        ax.set_xlabel("d_meta")
        ax.set_ylabel("d_mixed")
        ax.set_title("Mixed-level response")
        ax.legend()
        written.append(_finish(fig, prefix.with_name(prefix.name + "_certificate.png")))

    return written
