"""Figure recipes over nhrelax CSV artifacts.

Each recipe maps named input CSVs (plus their JSON sidecars where noted) to
one vector image.  Rendering is a pure function of the file contents: no
model computation happens here beyond plotting transforms (log axes,
normalization by a column maximum, evaluating overlay curves from parameters
already present in the artifacts).  Log-magnitude columns are plotted as
logs; nothing that overflowed upstream is ever exponentiated.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "nhrelax-figs"

LOG10E = math.log10(math.e)

FIGURE_IDS = ("fig1b", "fig1c", "fig1d", "fig2", "fig_interference",
              "fig_P_curves", "fig_heights", "fig_sat_fit", "fig_relax_curves")


class SchemaMismatch(Exception):
    """An input CSV is empty or lacks a required column."""


@dataclasses.dataclass
class FigureRecipe:
    figure_id: str
    inputs: list
    output: str

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}")


def read_table(path, required=()):
    """Parse one artifact CSV into a dict of string-column lists."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if len(lines) < 2:
        raise SchemaMismatch(f"{path}: no data rows")
    header = lines[0].split(",")
    missing = set(required) - set(header)
    if missing:
        raise SchemaMismatch(f"{path}: missing columns {sorted(missing)}")
    cols = {name: [] for name in header}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise SchemaMismatch(f"{path}: ragged row {ln!r}")
        for name, val in zip(header, parts):
            cols[name].append(val)
    return cols


def floats(table, name):
    return np.array([float(v) for v in table[name]])


def read_sidecar(path):
    side = path + ".json"
    if not os.path.exists(side):
        raise SchemaMismatch(f"missing sidecar {side}")
    with open(side) as fh:
        return json.load(fh)


def _new_axes():
    fig, ax = plt.subplots(figsize=(4.6, 3.4), constrained_layout=True)
    return fig, ax


def _save(fig, output):
    fig.savefig(output, metadata={"Date": None})
    plt.close(fig)
    return output


# ---------------------------------------------------------------------------
# recipe renderers
# ---------------------------------------------------------------------------

def _render_tau_vs_length(recipe, ylabel):
    sweep = read_table(recipe.inputs[0], required=("L", "tau_times_Delta", "stat"))
    L = floats(sweep, "L")
    tauD = floats(sweep, "tau_times_Delta")
    fig, ax = _new_axes()
    ax.plot(L, tauD, "o-", label=f"measured ({sweep['stat'][0]})")
    if len(recipe.inputs) > 1:
        evec = read_table(recipe.inputs[1], required=("L", "tau_evec_times_Delta"))
        ax.plot(floats(evec, "L"), floats(evec, "tau_evec_times_Delta"),
                "--", label="eigenvector prediction")
    ax.set_xlabel("chain length L")
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, recipe.output)


def render_fig1b(recipe):
    return _render_tau_vs_length(recipe, r"$\tau_L \Delta_b$")


def render_fig1c(recipe):
    return _render_tau_vs_length(recipe, r"$\tau_L \Delta_f$")


def render_fig1d(recipe):
    fig, ax = _new_axes()
    for path in recipe.inputs:
        sweep = read_table(path, required=("lambda", "tau_times_Delta", "stat"))
        ax.plot(floats(sweep, "lambda"), floats(sweep, "tau_times_Delta"),
                "o-", label=sweep["stat"][0])
    ax.set_xscale("symlog", linthresh=0.1)
    ax.set_xlabel(r"extra local loss $\lambda$")
    ax.set_ylabel(r"$\tau_L \Delta$")
    ax.legend()
    return _save(fig, recipe.output)


def render_fig2(recipe):
    sweep = read_table(recipe.inputs[0], required=("kappa", "tau_times_Delta"))
    evec = read_table(recipe.inputs[1],
                      required=("kappa", "inv_xi_loc", "tau_evec_times_Delta"))
    order_m = np.argsort(floats(sweep, "kappa"))
    order_e = np.argsort(floats(evec, "kappa"))
    inv_xi = floats(evec, "inv_xi_loc")[order_e]
    fig, ax = _new_axes()
    ax.plot(inv_xi, floats(sweep, "tau_times_Delta")[order_m], "o-",
            label="measured")
    ax.plot(inv_xi, floats(evec, "tau_evec_times_Delta")[order_e], "--",
            label="eigenvector prediction")
    ax.set_xlabel(r"$1/\xi_{\rm loc}$")
    ax.set_ylabel(r"$\tau_L \Delta$")
    ax.legend()
    return _save(fig, recipe.output)


def render_fig_interference(recipe):
    table = read_table(recipe.inputs[0], required=("kind", "log10_mag", "phase"))
    kinds = table["kind"]
    mags = floats(table, "log10_mag")
    phases = floats(table, "phase")
    term = np.array([k == "term" for k in kinds])
    if not term.any():
        raise SchemaMismatch("no term rows in the interference artifact")
    top = mags[term].max()
    scale = np.power(10.0, mags[term] - top)
    fig, ax = _new_axes()
    ax.scatter(scale * np.cos(phases[term]), scale * np.sin(phases[term]),
               s=12, label="eigenvector terms")
    ax.axhline(0.0, lw=0.5, color="0.6")
    ax.axvline(0.0, lw=0.5, color="0.6")
    ax.set_xlabel(rf"Re / $10^{{{top:.0f}}}$")
    ax.set_ylabel(rf"Im / $10^{{{top:.0f}}}$")
    ax.set_aspect("equal")
    ax.legend(loc="upper right")
    return _save(fig, recipe.output)


def render_fig_p_curves(recipe):
    curves = read_table(recipe.inputs[0], required=("j", "t", "logP"))
    js = floats(curves, "j").astype(int)
    t = floats(curves, "t")
    logp = floats(curves, "logP")
    fig, ax = _new_axes()
    for j in sorted(set(js.tolist())):
        sel = js == j
        ax.plot(t[sel], logp[sel] * LOG10E, label=f"j = {j}")
    if len(recipe.inputs) > 1:
        peaks = read_table(recipe.inputs[1],
                           required=("j", "t_max", "log_height", "sigma"))
        for j, tm, lh, sg in zip(floats(peaks, "j").astype(int),
                                 floats(peaks, "t_max"),
                                 floats(peaks, "log_height"),
                                 floats(peaks, "sigma")):
            tt = np.linspace(tm - 3 * sg, tm + 3 * sg, 200)
            gauss = lh - ((tt - tm) / sg) ** 2
            ax.plot(tt, gauss * LOG10E, "--", lw=1.0)
    lo = max(logp.min() * LOG10E, (logp.max() * LOG10E) - 30)
    ax.set_ylim(lo, logp.max() * LOG10E + 1)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\log_{10} P(L, j; t)$")
    ax.legend()
    return _save(fig, recipe.output)


def render_fig_heights(recipe):
    peaks = read_table(recipe.inputs[0], required=("j", "log_height", "xi_prop", "L"))
    j = floats(peaks, "j")
    lh = floats(peaks, "log_height")
    top = lh.max()
    fig, ax = _new_axes()
    ax.plot(j, (lh - top) * LOG10E, "o-", label="normalized peak heights")
    xi = floats(peaks, "xi_prop")[0]
    L = floats(peaks, "L")[0]
    if np.isfinite(xi) and 0.0 < xi < L:
        ax.axvline(L - xi, ls=":", color="0.4", label=r"$L - \xi_{\rm prop}$")
    ax.set_xlabel("source site j")
    ax.set_ylabel(r"$\log_{10} [h_j / \max_j h_j]$")
    ax.legend()
    return _save(fig, recipe.output)


def render_fig_sat_fit(recipe):
    table = read_table(recipe.inputs[0],
                       required=("eta", "xi_prop", "tau_sat_times_Delta"))
    side = read_sidecar(recipe.inputs[0])
    fits = side.get("fits", {})
    etas = floats(table, "eta")
    xi = floats(table, "xi_prop")
    y = floats(table, "tau_sat_times_Delta")
    fig, ax = _new_axes()
    for eta in sorted(set(etas.tolist())):
        sel = etas == eta
        ax.plot(xi[sel], y[sel], "o", label=rf"$\eta$ = {eta:g}")
        for key, fit in fits.items():
            if abs(float(key) - eta) < 1e-12:
                xx = np.linspace(xi[sel].min(), xi[sel].max(), 50)
                ax.plot(xx, fit["slope"] * xx + fit["intercept"], "-", lw=1.0)
    ax.set_xlabel(r"$\xi_{\rm prop}^{f}$")
    ax.set_ylabel(r"$\tau_{\rm sat} \Delta_f$")
    ax.legend()
    return _save(fig, recipe.output)


def render_fig_relax_curves(recipe):
    table = read_table(recipe.inputs[0], required=("t", "site", "n", "delta_n"))
    side = read_sidecar(recipe.inputs[0])
    Delta = float(side["Delta"])
    n_sites = int(side["n_sites"])
    t = floats(table, "t")
    site = floats(table, "site").astype(int)
    dn = floats(table, "delta_n")
    fig, ax = _new_axes()
    shown = sorted(set(site.tolist()))
    for s in shown[-3:]:  # the rightmost few sites carry the story
        sel = site == s
        with np.errstate(divide="ignore"):
            ax.plot(t[sel], np.log10(np.maximum(dn[sel], 1e-300)), label=f"site {s}")
    tt = np.linspace(0.0, t.max(), 300)
    est = np.clip(1.0 - np.sqrt(np.clip(Delta * tt / n_sites, 0.0, None)), 1e-12, None)
    ax.plot(tt, np.log10(est), "k--", lw=1.0, label=r"$1 - \sqrt{\Delta t / L}$")
    ax.axhline(math.log10(math.exp(-1.0)), color="r", ls=":", lw=1.0)
    ax.set_ylim(-4, 0.3)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\log_{10}\, \delta n$")
    ax.legend()
    return _save(fig, recipe.output)


_RENDERERS = {
    "fig1b": render_fig1b,
    "fig1c": render_fig1c,
    "fig1d": render_fig1d,
    "fig2": render_fig2,
    "fig_interference": render_fig_interference,
    "fig_P_curves": render_fig_p_curves,
    "fig_heights": render_fig_heights,
    "fig_sat_fit": render_fig_sat_fit,
    "fig_relax_curves": render_fig_relax_curves,
}


def render(recipe):
    """Render one recipe to its output path; raises SchemaMismatch loudly."""
    for path in recipe.inputs:
        if not os.path.exists(path):
            raise SchemaMismatch(f"missing input {path}")
    return _RENDERERS[recipe.figure_id](recipe)
