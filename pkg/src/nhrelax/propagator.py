"""Propagation amplitudes G(m, j; t) and probabilities P = |G|^2 by four routes.

Routes
------
direct      time-stepping of dG/dt = -i H G, the production route; stable at
            any non-reciprocity because it never forms the spectral sum.
spectral    biorthogonal eigenvector sum; exact but loses all precision to
            cancellation once the eigenvector prefactors dwarf the result,
            so it is guarded.
bounce_sum  open-chain solution as an image sum of infinite-chain terms.
no_bounce   the b = 0 image term alone: the translationally-invariant
            estimate, excellent once leftward reflection is negligible.
simplified  lowest order in the renormalized hopping; exact at kappa = w.

Site indices m, j are 1-based as in the standing-wave formulas.
Exponentially large/small magnitudes are carried as (log-magnitude, phase);
doubles only ever see the combined exponent, where the analytic cancellation
between exp(d/xi_loc) and the d-th Bessel coefficient has already happened.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import BounceNonConvergence, CancellationGuard, FlatPeak, Underflow
from .models import Kind, derived_scales
from .ndlinalg import Spectrum, integrate_linear_ode, require_matrix

ROUTES = ("direct", "spectral", "no_bounce", "bounce_sum", "simplified")
SPECTRAL_GUARD_LOG = 25.0
_RESCALE = 1e250


@dataclasses.dataclass
class PropagatorSample:
    """One G(m, j; t) value in (log-magnitude, phase) form.

    ``phase`` is None for routes that only determine P = |G|^2.
    """

    m: int
    j: int
    t: float
    route: str
    log_abs_g: float
    phase: float | None = None

    @property
    def logP(self):
        return 2.0 * self.log_abs_g

    @property
    def P(self):
        if self.logP > 709.0:
            return math.inf
        return math.exp(self.logP) if self.logP > -745.0 else 0.0

    @property
    def G(self):
        if self.phase is None:
            raise ValueError(f"route {self.route!r} carries no phase")
        return np.exp(self.log_abs_g + 1j * self.phase)

    @classmethod
    def from_complex(cls, m, j, t, g, route):
        mag = abs(g)
        log_abs = math.log(mag) if mag > 0.0 else -math.inf
        return cls(m, j, t, route, log_abs, float(np.angle(g)))


@dataclasses.dataclass
class PeakStats:
    """Peak time/height/width of P(L, j; t) at distance d = L - j.

    ``sigma`` is the closed-form width sqrt(d)/Delta; ``width_fitted`` is the
    measured half-width where the amplitude drops to exp(-1/2) of its peak
    (i.e. P drops to exp(-1) of its height), which is what the closed form
    describes.  ``xi_prop_implied`` removes the diffusive 1/(2 pi d) prefactor
    before taking the height ratio between d and d+1; without that the ratio
    carries a spurious -1/d term.
    """

    d: int
    t_max: float
    height_log: float
    sigma: float
    width_fitted: float
    xi_prop_implied: float

    @property
    def height(self):
        return math.exp(self.height_log) if self.height_log > -745.0 else 0.0


@dataclasses.dataclass
class LocalityOrder:
    """Short-time scaling of |G(m, j; t)| ~ t^d for a local Hamiltonian."""

    slope: float
    first_order_coeff: complex
    coeff_residual: float


# ---------------------------------------------------------------------------
# infinite-chain Green's function: quadrature and Bessel recurrence
# ---------------------------------------------------------------------------

def bessel_j_log(n, x):
    """(log|J_n(x)|, sign) for integer n >= 0, x >= 0, by Miller's backward
    recurrence with on-the-fly rescaling; never overflows or underflows."""
    if n < 0 or x < 0:
        raise ValueError("need n >= 0 and x >= 0")
    if x == 0.0:
        return (0.0, 1.0) if n == 0 else (-math.inf, 1.0)

    mm = max(n, int(x))
    m_start = mm + int(math.sqrt(160.0 * (mm + 1))) + 24
    m_start += m_start % 2  # even start

    bjp = 0.0
    bj = 1e-30
    norm = 0.0
    target = None
    for k in range(m_start, 0, -1):
        bjm = (2.0 * k / x) * bj - bjp
        bjp = bj
        bj = bjm
        if abs(bj) > _RESCALE:
            bj /= _RESCALE
            bjp /= _RESCALE
            norm /= _RESCALE
            if target is not None:
                target /= _RESCALE
        if (k - 1) % 2 == 0 and (k - 1) > 0:
            norm += 2.0 * bj
        if (k - 1) == n:
            target = bj
    norm += bj  # J_0 term
    if target is None:  # n >= m_start cannot happen, but keep the guard
        raise ValueError("recurrence did not reach the requested order")
    if target == 0.0:
        return (-math.inf, 1.0)
    return (math.log(abs(target)) - math.log(abs(norm)),
            math.copysign(1.0, target / norm))


def bessel_j(n, x):
    """J_n(x) from the same backward recurrence, materialized (0.0 on underflow)."""
    logmag, sign = bessel_j_log(n, x)
    return sign * math.exp(logmag) if logmag > -745.0 else 0.0


def g_infinity(d, J, t):
    """Infinite-chain amplitude for hopping J: the momentum integral of
    exp(i k d - i J t cos k), evaluated by the periodic trapezoid rule.

    Equals (-i)^|d| J_|d|(J t); the quadrature and the recurrence route must
    agree to 1e-12.
    """
    d = abs(int(d))
    if J < 0 or t < 0:
        raise ValueError("need J >= 0 and t >= 0")
    x = J * t
    n_k = max(64, 4 * int(math.ceil(x)) + 4 * d)
    k = -np.pi + 2.0 * np.pi * np.arange(n_k) / n_k
    vals = np.exp(1j * k * d - 1j * x * np.cos(k))
    return complex(np.mean(vals))


def _phase_of_minus_i_pow(d):
    # phase of (-i)^d, canonical in (-pi, pi]
    return float(np.angle((-1j) ** (d % 4)))


def g_infinity_log(d, J, t):
    """(log-magnitude, phase) of the infinite-chain amplitude, safe at any order."""
    d = abs(int(d))
    logmag, sign = bessel_j_log(d, J * t)
    phase = _phase_of_minus_i_pow(d) + (0.0 if sign > 0 else math.pi)
    phase = float(np.angle(np.exp(1j * phase)))
    return logmag, phase


# ---------------------------------------------------------------------------
# direct route
# ---------------------------------------------------------------------------

def direct_column(H_eff, j, t_grid):
    """G(:, j; t) on the grid as a (T, L) array by integrating the column ODE."""
    H = require_matrix(H_eff, square=True, name="H_eff")
    L = H.shape[0]
    if not 1 <= j <= L:
        raise ValueError(f"source site j={j} outside 1..{L}")
    e = np.zeros(L, dtype=complex)
    e[j - 1] = 1.0
    states = integrate_linear_ode(-1j * H, e, t_grid)
    return np.array([s[:, 0] for s in states])


def direct_row(H_eff, m, t_grid):
    """G(m, :; t) on the grid as a (T, L) array; one vector ODE via the transpose."""
    H = require_matrix(H_eff, square=True, name="H_eff")
    L = H.shape[0]
    if not 1 <= m <= L:
        raise ValueError(f"probe site m={m} outside 1..{L}")
    e = np.zeros(L, dtype=complex)
    e[m - 1] = 1.0
    states = integrate_linear_ode(-1j * H.T, e, t_grid)
    return np.array([s[:, 0] for s in states])


def propagate_direct(H_eff, j, t_grid):
    """Column j of the propagator at every grid time, flattened (t outer, m inner)."""
    t_grid = np.asarray(t_grid, dtype=float)
    cols = direct_column(H_eff, j, t_grid)
    samples = []
    for it, t in enumerate(t_grid):
        for m in range(1, cols.shape[1] + 1):
            samples.append(PropagatorSample.from_complex(m, j, t, cols[it, m - 1], "direct"))
    return samples


# ---------------------------------------------------------------------------
# spectral route
# ---------------------------------------------------------------------------

def _spectral_terms_log(spectrum, m, j, t):
    """Per-eigenvector terms of G(m, j; t) as (log-magnitude, phase) arrays."""
    i, k = m - 1, j - 1
    E = spectrum.eigenvalues
    r = spectrum.right[i, :]
    l = spectrum.left[k, :]
    coeff = r * l.conj()
    mag = np.abs(coeff)
    logmag = np.full(len(E), -np.inf)
    nz = mag > 0
    logmag[nz] = np.log(mag[nz])
    if spectrum.row_log_scale is not None:
        logmag = logmag + (spectrum.row_log_scale[i] - spectrum.row_log_scale[k])
    logmag = logmag + E.imag * t
    phase = np.angle(coeff) - E.real * t
    return logmag, phase


def propagate_spectral(spectrum, m, j, t):
    """Biorthogonal eigenvector sum for G(m, j; t).

    Guarded: when the summed term magnitudes exceed e^25 (so double precision
    cannot resolve the interference-cancelled result) or the spectrum fails
    the biorthonormality acceptance threshold, CancellationGuard is raised.
    For the non-reciprocal chain probed end-to-end this reduces to the
    (L-1)/xi_loc <= 25 rule.
    """
    if not isinstance(spectrum, Spectrum):
        raise TypeError("propagate_spectral needs a Spectrum")
    if spectrum.biorth_residual > 1e-8:
        raise CancellationGuard(
            f"biorthonormality residual {spectrum.biorth_residual:.3e} > 1e-8"
        )
    logmag, phase = _spectral_terms_log(spectrum, m, j, t)
    top = np.max(logmag)
    if top == -np.inf:
        return PropagatorSample(m, j, t, "spectral", -math.inf, 0.0)
    amp_log = top + math.log(np.sum(np.exp(logmag - top)))
    if amp_log > SPECTRAL_GUARD_LOG:
        raise CancellationGuard(
            f"summed term magnitude e^{amp_log:.1f} exceeds the e^25 cancellation guard"
        )
    g = np.sum(np.exp(logmag + 1j * phase))
    return PropagatorSample.from_complex(m, j, t, g, "spectral")


# ---------------------------------------------------------------------------
# bounce expansion and no-bounce approximation
# ---------------------------------------------------------------------------

def _hn_log_prefactor(spec, m, j, t):
    from .errors import PerfectNonreciprocity

    sc = derived_scales(spec)
    if sc.xi_loc == 0.0:
        raise PerfectNonreciprocity("kappa = w has no gauge factorization; use p_simplified")
    inv_xi = 0.0 if np.isinf(sc.xi_loc) else 1.0 / sc.xi_loc
    return (m - j) * inv_xi - sc.Delta * t, sc.J


def g_obc_bounce(m, j, t, spec, B=0):
    """Open-chain amplitude as an image ("bounce") sum over infinite-chain terms.

    B is raised automatically until the last added shell is below 1e-16 of
    the running sum, capped at 64.  Returns a PropagatorSample (bounce_sum).
    """
    if spec.kind is not Kind.HN:
        raise ValueError("bounce expansion applies to the nearest-neighbour chain")
    L = spec.L
    pref_log, J = _hn_log_prefactor(spec, m, j, t)
    period = 2 * (L + 1)

    def shell(b):
        terms = []
        for dd, sgn in ((m - j + period * b, 1.0), (m + j + period * b, -1.0)):
            lm, ph = g_infinity_log(dd, J, t)
            terms.append((lm, ph if sgn > 0 else ph + math.pi))
        return terms

    collected = list(shell(0))
    b = 0
    while True:
        tops = max(lm for lm, _ in collected)
        if tops == -math.inf:
            running = 0.0
            break
        running = abs(sum(math.exp(lm - tops) * np.exp(1j * ph) for lm, ph in collected))
        if b >= B:
            nxt = shell(b + 1) + shell(-(b + 1))
            top_next = max(lm for lm, _ in nxt)
            if top_next == -math.inf or top_next - tops < math.log(1e-16 * max(running, 1e-30)):
                break
            collected += nxt
            b += 1
            if b > 64:
                raise BounceNonConvergence("bounce shell cap 64 reached")
        else:
            collected += shell(b + 1) + shell(-(b + 1))
            b += 1

    if running == 0.0:
        return PropagatorSample(m, j, t, "bounce_sum", -math.inf, 0.0)
    tops = max(lm for lm, _ in collected)
    acc = sum(math.exp(lm - tops) * np.exp(1j * ph) for lm, ph in collected)
    log_abs = pref_log + tops + math.log(abs(acc))
    return PropagatorSample(m, j, t, "bounce_sum", log_abs, float(np.angle(acc)))


def p_no_bounce_log(spec, L, j, t):
    """log P(L, j; t) of the no-bounce (translationally invariant) estimate.

    Vectorized over t.  At kappa = w the generic branch is undefined and the
    simplified closed form (exact there) is used instead.
    """
    if spec.kind is not Kind.HN:
        raise ValueError("no-bounce estimate applies to the nearest-neighbour chain")
    if spec.kappa == spec.w:
        return p_simplified_log(spec, L, j, t)
    d = L - j
    sc = derived_scales(spec)
    inv_xi = 0.0 if np.isinf(sc.xi_loc) else 1.0 / sc.xi_loc
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    logs = np.empty_like(t_arr)
    for i, ti in enumerate(t_arr):
        lm, _ = bessel_j_log(abs(d), sc.J * ti)
        logs[i] = 2.0 * d * inv_xi - 2.0 * sc.Delta * ti + 2.0 * lm
    return logs if np.ndim(t) else float(logs[0])


def p_no_bounce(spec, L, j, t):
    """No-bounce propagation probability as a PropagatorSample (P-only route)."""
    logp = p_no_bounce_log(spec, L, j, t)
    return PropagatorSample(L, j, float(t), "no_bounce", 0.5 * logp, None)


def p_simplified_log(spec, L, j, t):
    """log P of the lowest-order-in-J closed form
    (w+kappa)^{2d} e^{-2 Delta t} t^{2d} / (4^d (d!)^2); exact at kappa = w."""
    if spec.kind is not Kind.HN:
        raise ValueError("simplified closed form applies to the nearest-neighbour chain")
    d = L - j
    if d < 0:
        raise ValueError("needs j <= L")
    Delta = spec.delta()
    wk = spec.w + spec.kappa
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    with np.errstate(divide="ignore"):
        logs = (2.0 * d * math.log(wk) - 2.0 * Delta * t_arr
                + 2.0 * d * np.log(t_arr) - d * math.log(4.0)
                - 2.0 * math.lgamma(d + 1)) if d > 0 else (-2.0 * Delta * t_arr)
    return logs if np.ndim(t) else float(logs[0])


def p_simplified(spec, L, j, t):
    """Simplified propagation probability as a PropagatorSample (P-only route)."""
    logp = p_simplified_log(spec, L, j, t)
    return PropagatorSample(L, j, float(t), "simplified", 0.5 * logp, None)


# ---------------------------------------------------------------------------
# peak statistics
# ---------------------------------------------------------------------------

def _logp_curve(spec, L, j):
    if spec.kappa == spec.w:
        return lambda t: p_simplified_log(spec, L, j, t)
    return lambda t: p_no_bounce_log(spec, L, j, t)


def _peak_of(spec, L, j, grid_step=None):
    """(t_max, logP_max, grid_step) by dense-grid search plus golden refinement."""
    d = L - j
    sc = derived_scales(spec)
    # arrival speed sqrt(J^2 + Delta^2) >= Delta; brackets the peak for any kappa
    v_hat = math.sqrt((sc.J if sc.J is not None else 0.0) ** 2 + sc.Delta**2)
    t_star = d / sc.Delta
    step = grid_step if grid_step is not None else 0.05 / sc.Delta
    lo, hi = 0.2 * d / v_hat, 2.5 * t_star
    grid = np.arange(lo, hi + step, step)
    f = _logp_curve(spec, L, j)
    vals = f(grid)
    i = int(np.argmax(vals))
    if i == 0 or i == len(grid) - 1:
        raise FlatPeak(f"no interior maximum of P({L},{j};t) in [{lo:g},{hi:g}]")
    a, b, c = grid[i - 1], grid[i], grid[i + 1]
    # golden-section refine within [a, c]
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = c - gr * (c - a)
    x2 = a + gr * (c - a)
    f1, f2 = float(f(x1)), float(f(x2))
    for _ in range(80):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + gr * (c - a)
            f2 = float(f(x2))
        else:
            c, x2, f2 = x2, x1, f1
            x1 = c - gr * (c - a)
            f1 = float(f(x1))
        if c - a < 1e-12 * max(1.0, b):
            break
    t_max = 0.5 * (a + c)
    return float(t_max), float(f(t_max)), step


def _half_width(f, t_max, logp_max, side):
    """Distance from the peak to where log P drops by 1 (P by e^-1)."""
    target = logp_max - 1.0
    step = max(1e-6, 0.05 * t_max)
    t = t_max
    for _ in range(200):
        t_next = t + side * step
        if t_next <= 0:
            t_next = t / 2.0
        if f(t_next) < target:
            lo, hi = (t, t_next) if side > 0 else (t_next, t)
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if (f(mid) - target) * (1 if side > 0 else -1) > 0:
                    lo = mid
                else:
                    hi = mid
            cross = 0.5 * (lo + hi)
            return abs(cross - t_max)
        t = t_next
        step *= 1.6
    raise FlatPeak("no e^-1 crossing found near the peak")


def peak_stats(spec, L, j):
    """Peak time, height, width and the implied propagation length at d = L - j.

    Uses the exact closed form at kappa = w and a dense-grid numeric search on
    the no-bounce curve otherwise.
    """
    d = L - j
    if d < 1:
        raise ValueError("peak statistics need d = L - j >= 1")
    sc = derived_scales(spec)
    f = _logp_curve(spec, L, j)
    t_max, logp_max, step = _peak_of(spec, L, j)
    w_right = _half_width(f, t_max, logp_max, +1)
    w_left = _half_width(f, t_max, logp_max, -1)
    width = 0.5 * (w_right + w_left)
    sigma = math.sqrt(d) / sc.Delta

    # the closed/no-bounce curves depend only on d = L - j, so this is the d+1 peak
    _, logp_next, _ = _peak_of(spec, L, j - 1) if j - 1 >= 1 else _peak_of(spec, L + 1, j)
    # remove the diffusive 1/(2 pi d) prefactor before reading off the exponent
    ratio = (logp_max + math.log(d)) - (logp_next + math.log(d + 1))
    if ratio == 0.0:
        xi_implied = math.inf
    else:
        xi_implied = 1.0 / abs(ratio)
    return PeakStats(d, t_max, logp_max, sigma, width, xi_implied)


# ---------------------------------------------------------------------------
# short-time locality order
# ---------------------------------------------------------------------------

def locality_order_check(H_eff, m, j, t_list):
    """Fit the short-time power law |G(m, j; t)| ~ t^d of a local Hamiltonian.

    Returns the fitted log-log slope together with the first-order coefficient
    comparison G/t vs -i (H_eff)_{mj} at the smallest sampled time (their
    difference must vanish as t -> 0 for nearest neighbours).
    """
    H = require_matrix(H_eff, square=True, name="H_eff")
    if m == j:
        raise ValueError("need distinct sites m != j")
    t_list = np.sort(np.asarray(t_list, dtype=float))
    if t_list[0] <= 0:
        raise ValueError("times must be positive")
    if t_list[-1] * np.linalg.norm(H, np.inf) >= 0.1:
        raise ValueError("t list outside the asymptotic window t*||H|| < 0.1")
    grid = np.concatenate(([0.0], t_list))
    cols = direct_column(H, j, grid)
    g = cols[1:, m - 1]
    mags = np.abs(g)
    if np.max(mags) < 1e-300:
        raise Underflow("|G| below double range at all sampled times; use the log route")
    slope, _ = np.polyfit(np.log(t_list), np.log(mags), 1)
    coeff = g[0] / t_list[0]
    residual = abs(coeff + 1j * H[m - 1, j - 1])
    return LocalityOrder(float(slope), complex(coeff / (-1j)), float(residual))
