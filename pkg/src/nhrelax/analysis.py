"""Scaling fits, eigenvector-prediction comparisons and length-scale extraction.

Consumes relaxation sweeps and propagator peak profiles; produces the
quantitative statements the package exists to test: how the relaxation time
actually scales with chain length, pump and loss, versus what the
localization length of the skin modes would predict.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from . import dynamics
from .errors import (
    InsufficientPoints,
    MissingXi,
    NoPlateau,
    NotAnEigenvalue,
    WrongSignSlope,
)
from .models import (
    Kind,
    ModelSpec,
    Statistics,
    derived_scales,
    effective_hamiltonian,
    hn_spectral_analytic,
    reference_eigenvalues,
)
from .ndlinalg import poly_roots
from .propagator import _spectral_terms_log, direct_column, p_no_bounce_log

EIGENVALUE_MATCH_TOL = 1e-6


@dataclasses.dataclass
class SweepPoint:
    value: float
    tau: float
    tau_times_delta: float
    result: dynamics.RelaxationResult
    spec: ModelSpec


@dataclasses.dataclass
class SweepResult:
    """Relaxation times along one swept parameter, sorted by value."""

    axis: str
    points: list
    spec_base: ModelSpec

    def values(self):
        return np.array([p.value for p in self.points])

    def taus(self):
        return np.array([p.tau for p in self.points])


@dataclasses.dataclass
class FitReport:
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    residuals: list


@dataclasses.dataclass
class XiPropFit:
    fit: FitReport
    xi_est: float


@dataclasses.dataclass
class LocalizationReport:
    """Decay exponents of the plane-wave components at one eigenvalue.

    ``roots`` are the characteristic-polynomial solutions (the per-site Bloch
    factors; for SSH the per-cell factor is root**2 and the exponents are
    reported per unit cell).  ``xi_extracted = 1/max(exponents)``."""

    eigenvalue: complex
    roots: np.ndarray
    exponents: np.ndarray
    phases: np.ndarray
    xi_extracted: float


@dataclasses.dataclass
class InterferenceTerms:
    """Spectral-sum terms of G(m, j; t) next to the stably computed sum."""

    m: int
    j: int
    t: float
    log_magnitudes: np.ndarray
    phases: np.ndarray
    stable_log_abs_g: float
    stable_route: str

    @property
    def max_term_log10(self):
        return float(np.max(self.log_magnitudes)) / math.log(10.0)

    @property
    def stable_log10(self):
        return self.stable_log_abs_g / math.log(10.0)


def run_sweep(spec_base, axis, values, eta=math.exp(-1), sustain_factor=3.0):
    """Relaxation time at each value of one ModelSpec parameter (serial)."""
    points = []
    for val in values:
        kwargs = {axis: int(val) if axis == "L" else float(val)}
        spec = dataclasses.replace(spec_base, **kwargs)
        result, _, _ = dynamics.run_relaxation(spec, eta=eta, sustain_factor=sustain_factor)
        points.append(SweepPoint(float(val), result.tau, result.tau * spec.delta(),
                                 result, spec))
    points.sort(key=lambda p: p.value)
    return SweepResult(axis, points, spec_base)


def evec_prediction(spec, xi=None, length_convention="cells"):
    """Relaxation-time estimate L/(xi_loc * Delta) from the skin-mode localization.

    For SSH, ``length_convention`` picks whether L counts unit cells (the
    default) or sites.  NNN has no analytic xi_loc: pass the
    numerically extracted one.
    """
    sc = derived_scales(spec)
    if spec.kind is Kind.NNN:
        if xi is None:
            raise MissingXi("NNN needs a numerically extracted localization length")
        return spec.L / (xi * sc.Delta)
    xi_loc = sc.require("xi_loc") if xi is None else xi
    if spec.kind is Kind.SSH:
        length = spec.L if length_convention == "cells" else 2 * spec.L
        return length / (xi_loc * sc.Delta)
    return spec.L / (xi_loc * sc.Delta)


def _least_squares(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2, (y - pred).tolist()


def scaling_fit(sweep, window_fraction=0.3):
    """Least squares of tau against the swept parameter over the trailing window."""
    vals = sweep.values()
    taus = sweep.taus()
    n = len(vals)
    if n < 5:
        raise InsufficientPoints(f"{n} points, need >= 5 in the fit window")
    n_window = min(n, max(5, int(math.ceil(window_fraction * n))))
    lo = n - n_window
    slope, intercept, r2, res = _least_squares(vals[lo:], taus[lo:])
    return FitReport(slope, intercept, r2, (lo, n), res)


def saturation_study(gammas, spec_base, eta, L_start=60, L_step=20, L_max=180,
                     plateau_rtol=0.01, sustain_factor=3.0):
    """Fermion saturation times tau_sat(Gamma) against the propagation length.

    For each pump rate the chain length is grown in >= 20-site increments until
    the last three relaxation times agree to 1%; pump rates that fail to
    saturate by ``L_max`` are dropped with a warning.  Returns
    ``(FitReport of tau_sat*Delta_f vs xi_prop^f, table rows)``.
    """
    if Statistics(spec_base.statistics) is not Statistics.FERMION:
        raise ValueError("saturation is a fermionic phenomenon here")
    rows = []
    for G in gammas:
        spec_g = dataclasses.replace(spec_base, Gamma=float(G))
        taus = []
        plateau = None
        for L in range(L_start, L_max + 1, L_step):
            spec = dataclasses.replace(spec_g, L=L)
            result, _, _ = dynamics.run_relaxation(spec, eta=eta,
                                                   sustain_factor=sustain_factor)
            taus.append(result.tau)
            if len(taus) >= 3:
                last = taus[-3:]
                if (max(last) - min(last)) / max(last) < plateau_rtol:
                    plateau = taus[-1]
                    break
        if plateau is None:
            warnings.warn(f"Gamma={G}: no plateau by L={L_max}; point dropped",
                          stacklevel=2)
            continue
        sc = derived_scales(spec)
        rows.append({"Gamma": float(G), "xi_prop": sc.xi_prop,
                     "tau_sat": plateau, "tau_sat_times_delta": plateau * sc.Delta,
                     "L_at_saturation": L, "eta": float(eta)})
    if not rows:
        raise NoPlateau("no pump rate reached saturation")
    if len(rows) < 2:
        raise InsufficientPoints("need at least two saturated pump rates to fit")
    x = np.array([r["xi_prop"] for r in rows])
    y = np.array([r["tau_sat_times_delta"] for r in rows])
    slope, intercept, r2, res = _least_squares(x, y)
    return FitReport(slope, intercept, r2, (0, len(rows)), res), rows


def xi_prop_fit(j_values, heights, L, half="left", statistics=Statistics.BOSON):
    """Exponential length of a peak-height profile h_j over one half of the chain.

    Fits ln h against the distance d = L - j.  Bosons amplify with distance
    (positive slope) and fermions attenuate; data with the wrong trend raises
    WrongSignSlope.  ``xi_est`` is the positive e-folding length per site.
    """
    j_values = np.asarray(j_values)
    heights = np.asarray(heights, dtype=float)
    if half == "left":
        mask = j_values <= L / 2
    elif half == "right":
        mask = j_values > L / 2
    else:
        raise ValueError("half must be 'left' or 'right'")
    if np.count_nonzero(mask) < 5:
        raise InsufficientPoints(f"{np.count_nonzero(mask)} heights in the {half} half")
    d = (L - j_values[mask]).astype(float)
    lh = np.log(heights[mask])
    slope, intercept, r2, res = _least_squares(d, lh)
    stats = Statistics(statistics)
    if stats is Statistics.BOSON and slope <= 0:
        raise WrongSignSlope("boson fit expects amplification with distance")
    if stats is Statistics.FERMION and slope >= 0:
        raise WrongSignSlope("fermion fit expects attenuation with distance")
    return XiPropFit(FitReport(slope, intercept, r2, (0, len(d)), res), 1.0 / abs(slope))


def small_gamma_curve(L, Delta, t_grid):
    """Weak-pump relaxation estimate 1 - sqrt(Delta t / L), clipped at zero.

    Valid up to t = L/Delta (full traversal); virtually exact as Gamma -> 0."""
    t = np.asarray(t_grid, dtype=float)
    return np.clip(1.0 - np.sqrt(np.clip(Delta * t / L, 0.0, None)), 0.0, None)


def interference_terms(spec, m, j, t):
    """Each eigenvector term of the spectral sum for G(m, j; t), in log form.

    Works at any chain length because the terms are assembled in
    (log-magnitude, phase) space from the closed-form spectral data.  The
    stable value of the full sum comes from the direct route (or the no-bounce
    estimate when the direct value underflows doubles)."""
    if spec.kind is not Kind.HN:
        raise ValueError("interference dump uses the closed-form chain spectrum")
    spectrum = hn_spectral_analytic(spec)
    logmag, phase = _spectral_terms_log(spectrum, m, j, t)

    if t == 0.0 and m == j:
        return InterferenceTerms(m, j, t, logmag, phase, 0.0, "exact")
    H = effective_hamiltonian(spec)
    cols = direct_column(H, j, [0.0, t])
    g = cols[-1][m - 1]
    if abs(g) > 0.0:
        return InterferenceTerms(m, j, t, logmag, phase, math.log(abs(g)), "direct")
    logp = p_no_bounce_log(spec, m, j, t) if m >= j else None
    if logp is None:
        raise ValueError("stable comparison unavailable for m < j underflow")
    return InterferenceTerms(m, j, t, logmag, phase, 0.5 * float(logp), "no_bounce")


def _characteristic_coeffs(spec, E):
    """Ascending coefficients of the plane-wave characteristic polynomial."""
    Ep = E + 1j * spec.delta()  # energy with the uniform decay removed
    w, kappa = spec.w, spec.kappa
    if spec.kind is Kind.HN:
        return np.array([(w + kappa) / 2.0, -Ep, (w - kappa) / 2.0], dtype=complex)
    if spec.kind is Kind.NNN:
        T, phi = spec.T_nnn, spec.phi
        return np.array([
            (T / 2.0) * np.exp(1j * phi),
            (w + kappa) / 2.0,
            -Ep,
            (w - kappa) / 2.0,
            (T / 2.0) * np.exp(-1j * phi),
        ], dtype=complex)
    u, gam = spec.u, spec.gamma_ssh
    # two-band transfer relation in the per-site variable mu (cell factor mu^2)
    return np.array([
        (u + gam) * (w + kappa),
        0.0,
        (w**2 - kappa**2) + (u**2 - gam**2) - 4.0 * Ep**2,
        0.0,
        (w - kappa) * (u - gam),
    ], dtype=complex)


def localization_extract(spec, E):
    """Decay exponents A_i = ln|root_i| of the plane-wave components at energy E.

    ``E`` must be an eigenvalue of the model (checked to 1e-6 * ||H|| against
    the reference spectrum).  Vanishing leading/trailing coefficients (e.g.
    the NNN model at T = 0) are trimmed: they correspond to roots at
    infinity/zero and reduce the polynomial degree.  For SSH the exponents are
    per unit cell.
    """
    H = effective_hamiltonian(spec)
    evals = reference_eigenvalues(spec)
    norm = np.linalg.norm(H, np.inf)
    if np.min(np.abs(evals - E)) > EIGENVALUE_MATCH_TOL * norm:
        raise NotAnEigenvalue(
            f"E = {E} is {np.min(np.abs(evals - E)):.3e} away from the spectrum"
        )
    coeffs = _characteristic_coeffs(spec, E)
    cmax = np.max(np.abs(coeffs))
    # trim numerically-zero leading (roots at infinity) and trailing (roots at 0)
    keep = np.abs(coeffs) > 1e-12 * cmax
    lo = int(np.argmax(keep))
    hi = len(coeffs) - int(np.argmax(keep[::-1]))
    trimmed = coeffs[lo:hi]
    if len(trimmed) - 1 not in (2, 4):
        raise ValueError(f"characteristic polynomial degenerated to degree {len(trimmed) - 1}")
    roots = poly_roots(trimmed).roots
    per_cell = 2.0 if spec.kind is Kind.SSH else 1.0
    exponents = per_cell * np.log(np.abs(roots))
    phases = per_cell * np.angle(roots)
    a_max = float(np.max(exponents))
    xi = math.inf if a_max <= 1e-12 else 1.0 / a_max
    return LocalizationReport(complex(E), roots, exponents, phases, xi)
