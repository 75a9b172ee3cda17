"""Figures written next to the CSV/JSON reports."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..stats import normal_cdf  # noqa: E402

_RC = {
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _figure(ncols=1, width=4.2, height=None):
    golden = (math.sqrt(5) - 1.0) / 2.0
    height = height or width * golden
    return plt.subplots(1, ncols, figsize=(width * ncols, height), squeeze=False)


def plot_ladder(result, path) -> None:
    """Kolmogorov distance against n (log-log) and normalized second-largest sizes."""
    with plt.rc_context(_RC):
        fig, axes = _figure(2)
        ax = axes[0, 0]
        ns = np.array([s.n for s in result.summaries])
        for attr, fit, marker, label in (("dk_global", result.fit_global, "o", "largest cluster"),
                                         ("dk_local", result.fit_local, "s", "localized")):
            vals = [getattr(s, attr) for s in result.summaries]
            if any(v is None for v in vals):
                continue
            ax.loglog(ns, vals, marker, label=label)
            if fit is not None:
                grid = np.geomspace(ns.min(), ns.max(), 50)
                ax.loglog(grid, fit.predict(grid), "-", lw=1, color=ax.lines[-1].get_color(),
                          label=f"slope {fit.slope:.2f}")
        m = result.summaries[0].m
        ref = result.summaries[0].dk_global
        if ref:
            grid = np.geomspace(ns.min(), ns.max(), 50)
            ax.loglog(grid, ref * (grid / ns.min()) ** (-m / 2), ":", color="0.5", label=f"slope {-m / 2:g}")
        ax.set_xlabel("box side n")
        ax.set_ylabel("Kolmogorov distance")
        ax.legend()

        ax = axes[0, 1]
        n2, ratio = zip(*result.scaling.ratios)
        ax.semilogx(n2, ratio, "o-")
        ax.set_ylim(0, max(ratio) * 1.3)
        ax.set_xlabel("box side n")
        ax.set_ylabel(rf"mean second largest / $(\ln n)^{{{m}/{m - 1}}}$")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_calibration(rows, path) -> None:
    with plt.rc_context(_RC):
        fig, axes = _figure(1)
        ax = axes[0, 0]
        th = [r.theta for r in rows]
        ax.semilogx(th, [r.mismatch_frac for r in rows], "o-", label=r"$N' \neq N$")
        ax.semilogx(th, [r.e0_frac for r in rows], "s--", label="local tie (E0)")
        ax.set_xlabel(r"$\theta$")
        ax.set_ylabel("fraction of replications")
        ax.set_ylim(-0.02, 1.02)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_normality(values, path, label="N") -> None:
    """Histogram and empirical CDF of the standardized statistic against the normal."""
    x = np.asarray(values, dtype=float)
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    with plt.rc_context(_RC):
        fig, axes = _figure(2)
        if sd > 0:
            z = np.sort((x - x.mean()) / sd)
            grid = np.linspace(min(z.min(), -4), max(z.max(), 4), 200)
            axes[0, 0].hist(z, bins="auto", density=True, alpha=0.6)
            axes[0, 0].plot(grid, np.exp(-grid**2 / 2) / math.sqrt(2 * math.pi), "k-", lw=1)
            axes[0, 1].step(z, np.arange(1, z.size + 1) / z.size, where="post", label="empirical")
            axes[0, 1].plot(grid, normal_cdf(grid), "k-", lw=1, label="normal")
            axes[0, 1].legend()
        axes[0, 0].set_xlabel(f"standardized {label}")
        axes[0, 1].set_xlabel(f"standardized {label}")
        axes[0, 1].set_ylabel("CDF")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
