"""Figure rendering for experiment outputs.

The CSV traces are the canonical experiment record; these helpers render the
matching convergence and sweep figures next to them.  Matplotlib is imported
lazily with the Agg backend so the library stays importable on headless
machines and the solvers never pay the import cost.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def render_convergence_figure(runs: Sequence, path: Path, title: str = "") -> Path:
    """Residual norms versus iteration, one curve per method, log scale.

    Solid lines show the tracked (control) residual stream; dotted lines add
    the real residuals where the trace recorded them separately.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    for run in runs:
        ks = [k for k, _, _ in run.rows]
        control = [c for _, c, _ in run.rows]
        (line,) = ax.semilogy(ks, control, marker=".", markersize=3, label=run.spec.label)
        real = [(k, r) for k, _, r in run.rows if r is not None]
        if real and any(abs(r - c) > 1e-30 for (_, r), c in zip(real, control)):
            ax.semilogy(
                [k for k, _ in real],
                [r for _, r in real],
                linestyle=":",
                color=line.get_color(),
                alpha=0.7,
            )
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual norm")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_rfactor_figure(
    rows: Sequence,
    gamma_rows: Sequence,
    path: Path,
    title: str = "",
) -> Path:
    """Convergence factor versus start angle, plus the mixing-weight traces."""
    plt = _pyplot()
    have_gamma = bool(gamma_rows)
    fig, axes = plt.subplots(1, 2 if have_gamma else 1, figsize=(10.5 if have_gamma else 6.5, 4.2))
    ax0 = axes[0] if have_gamma else axes

    by_label: dict[str, list[tuple[float, float]]] = {}
    for angle, spec, r_factor in rows:
        by_label.setdefault(spec.label, []).append((angle, r_factor))
    for label, pts in by_label.items():
        pts.sort()
        ax0.plot([a for a, _ in pts], [r for _, r in pts], marker=".", markersize=3, label=label)
    ax0.set_xlabel("start angle (rad)")
    ax0.set_ylabel("r-factor")
    ax0.grid(True, alpha=0.3)
    ax0.legend(fontsize=8)
    if title:
        ax0.set_title(title)

    if have_gamma:
        ax1 = axes[1]
        first_angle = gamma_rows[0][0]
        by_method: dict[str, list[tuple[int, float]]] = {}
        for angle, spec, k, gamma in gamma_rows:
            if angle == first_angle:
                by_method.setdefault(spec.label, []).append((k, gamma))
        for label, pts in by_method.items():
            pts.sort()
            ax1.plot([k for k, _ in pts], [g for _, g in pts], marker=".", label=label)
        ax1.set_xlabel("iteration")
        ax1.set_ylabel("mixing weight")
        ax1.grid(True, alpha=0.3)
        ax1.legend(fontsize=8)
        ax1.set_title(f"weight oscillation at angle {first_angle:.3f}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
