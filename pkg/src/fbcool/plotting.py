"""Figure rendering for the report path; writes image files, never opens windows."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.labelsize": 10,
    "legend.frameon": False,
    "savefig.dpi": 150,
}


def plot_force_curves(curves, path, title=None):
    """Normalized force versus v/u for one or more ForceCurve objects."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for c in curves:
            ax.plot(c.velocities, c.forces, label=c.loop)
        ax.axhline(0.0, color="0.6", lw=0.6)
        ax.set_xlabel("v / u" if curves and curves[0].normalized else "v (m/s)")
        ax.set_ylabel(r"$f/\hbar k\eta\Gamma_{sc}$" if curves and curves[0].normalized else "f (N)")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_spectra(spectra, path, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for s in spectra:
            mask = (s.omegas > 0) & (s.density > 0)
            ax.loglog(s.omegas[mask], s.density[mask], label=s.source)
        ax.set_xlabel(r"$\omega$ (rad/s)")
        ax.set_ylabel(r"$S(\omega)$ (1/(rad/s))")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_traces(result, path, max_traj=8):
    """Velocity traces (in recoil velocities) of the first few trajectories."""
    sysp = result.config.system
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        n = min(max_traj, result.v.shape[1])
        ax.plot(result.t * 1e3, result.v[:, :n] / sysp.recoil_velocity, lw=0.6)
        ax.plot(result.t * 1e3, np.sqrt(np.mean(result.v**2, axis=1)) / sysp.recoil_velocity,
                color="k", lw=1.2, label="rms")
        ax.set_xlabel("t (ms)")
        ax.set_ylabel(r"$v / v_r$")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
