"""Figure rendering for report artifacts.

Every report path of the CLI drops a PNG next to its JSON/CSV output unless
plotting is disabled.  The Agg backend keeps this headless-safe; a fixed
Software tag keeps PNG metadata stable between runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=130, metadata={"Software": "weakgadgets"})


def render_sweep_plot(result, path: str, vary: str) -> None:
    rows = [r for r in result.rows if np.isfinite(r.max_abs_error)]
    fig, ax = plt.subplots(figsize=(6, 4.2))
    if rows:
        xs = [r.value for r in rows]
        ys = [r.max_abs_error for r in rows]
        ax.loglog(xs, ys, "o-", color="tab:blue", label="measured max error")
        if result.slope is not None and len(rows) >= 2:
            ref = ys[0] * (np.array(xs) / xs[0]) ** result.slope
            ax.loglog(xs, ref, "--", color="tab:gray",
                      label=f"fit slope {result.slope:.2f}")
    ax.set_xlabel(vary)
    ax.set_ylabel("max |eigenvalue error|")
    ax.set_title(f"spectral error vs {vary}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_spectrum_plot(report: dict, path: str) -> None:
    target = report["target_eigs"]
    gadget = report["gadget_eigs_shifted"]
    idx = np.arange(len(target))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(idx, target, "s", color="tab:orange", label="target", ms=9, mfc="none")
    ax1.plot(idx, gadget, "o", color="tab:blue", label="gadget (shift removed)", ms=5)
    ax1.set_xlabel("level")
    ax1.set_ylabel("energy")
    ax1.set_title("low spectrum")
    ax1.legend()
    ax1.grid(alpha=0.3)
    errs = np.abs(np.array(gadget) - np.array(target))
    ax2.semilogy(idx, np.maximum(errs, 1e-18), "o-", color="tab:red")
    ax2.axhline(report["eps"], color="tab:gray", ls="--", label="eps")
    ax2.set_xlabel("level")
    ax2.set_ylabel("|error|")
    ax2.set_title(f"per-level error (max {report['max_abs_error']:.3g})")
    ax2.legend()
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_selfenergy_plot(report: dict, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(report["z_values"], report["deviation_per_z"], "o-", color="tab:blue")
    ax1.set_xlabel("z")
    ax1.set_ylabel("|Sigma_-(z) - H_eff|")
    ax1.set_title("self-energy deviation over the z grid")
    ax1.grid(alpha=0.3)
    orders = report["orders"]
    norms = np.maximum(np.array(report["term_norms"], dtype=float), 1e-18)
    ax2.semilogy(orders, norms, "o", color="tab:blue", label="measured |T_k|")
    bounds = [
        (k, b)
        for k, b, ok in zip(orders, report["term_bounds"], report["bounds_applicable"])
        if ok and b is not None and b > 0
    ]
    if bounds:
        ax2.semilogy(
            [b[0] for b in bounds],
            [b[1] for b in bounds],
            "_",
            color="tab:red",
            markersize=16,
            label="analytic bound",
        )
    ax2.set_xlabel("order k")
    ax2.set_ylabel("norm")
    ax2.set_title("series terms vs bounds (z = 0)")
    ax2.legend()
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_direct3_plot(report: dict, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    deltas = report["delta_sweep"]["deltas"]
    ax1.loglog(deltas, report["delta_sweep"]["exact_residuals"], "o-",
               color="tab:blue", label="|Sigma_exact(0) - H_eff|")
    ax1.loglog(deltas, np.maximum(report["delta_sweep"]["order3_residuals"], 1e-18),
               "s--", color="tab:green", label="through 3rd order")
    ax1.set_xlabel("Delta")
    ax1.set_ylabel("residual")
    ax1.set_title("cancellation residuals")
    ax1.legend()
    ax1.grid(True, which="both", alpha=0.3)
    rows = report["pathology"]
    ax2.plot([r["R"] for r in rows], [r["beta"] for r in rows], "o-", color="tab:red")
    ax2.set_xlabel("R   (Delta = M^3 R^2)")
    ax2.set_ylabel("beta")
    ax2.set_title("coupling growth pathology (beta ~ R)")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
