"""Covariance-matrix dynamics, steady states and relaxation times.

Index convention
----------------
Covariance matrices are stored as ``S[m, n] = <c_n^dag c_m>``: the ROW index
is the annihilation-operator (destination) site.  With that layout the
equation of motion closes as

    dS/dt = -i (H_eff S - S H_eff^H) + 2 Gamma I,

so the formal solution is ``G S(0) G^H + integral of G (2 Gamma I) G^H`` with
``G = exp(-i H_eff t)``.  The opposite layout (row = creation index) obeys the
transposed equation and swaps the propagation direction of the non-reciprocal
chain; the choice here is pinned by the exact two-site Fock-space oracle (see
``tests/test_oracle.py``) and recorded as :data:`COV_ROW_IS_DESTINATION`.
Occupations sit on the diagonal either way.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from .errors import (
    AllFilledBosons,
    NotRelaxedWithinHorizon,
    PauliViolation,
    StepOverflow,
    VerificationError,
    ZeroSteadyState,
)
from .models import ModelSpec, Statistics, effective_hamiltonian, reference_eigenvalues
from ._hnsteady import steady_occupations
from .ndlinalg import (
    integrate_linear_ode,
    rk4_step_size,
    rk4_transfer,
    solve_steady_sylvester,
)

# S[m, n] = <c_n^dag c_m>; fixed by the L = 2 fermion Lindblad oracle.
COV_ROW_IS_DESTINATION = True

HERMITICITY_TOL = 1e-9
EIGENVALUE_TOL = 1e-8
# grid spacing and horizon used by the relaxation driver
RELAX_DT_FACTOR = 0.05
HORIZON_FACTOR = 10.0
BOSON_UNIFORM_GAMMA_CAP = 0.1


@dataclasses.dataclass
class CovarianceTrajectory:
    """Time grid plus per-site occupations (and optionally the full matrices)."""

    t_grid: np.ndarray
    occupations: np.ndarray  # shape (T, n_sites)
    spec: ModelSpec
    full_S: list | None = None


@dataclasses.dataclass
class RelaxationResult:
    """First sustained crossing of the relaxation threshold."""

    tau: float
    threshold: float
    sustained: bool
    sustain_factor: float
    horizon: float
    crossing_method: str = "linear-interpolation"


def steady_state(spec):
    """Steady covariance matrix of the model (Sylvester route)."""
    H = effective_hamiltonian(spec)
    return solve_steady_sylvester(H, spec.Gamma, eigenvalues=reference_eigenvalues(spec))


def initial_state(kind, spec):
    """Vacuum, uniform-with-steady-average, or all-filled initial covariance."""
    n = spec.n_sites
    if kind == "vacuum":
        return np.zeros((n, n), dtype=complex)
    if kind == "all_filled":
        if spec.statistics is not Statistics.FERMION:
            raise AllFilledBosons("the all-filled state requires fermions")
        return np.eye(n, dtype=complex)
    if kind == "uniform_ss_avg":
        if spec.statistics is Statistics.BOSON and spec.Gamma > BOSON_UNIFORM_GAMMA_CAP:
            warnings.warn(
                f"bosonic uniform_ss_avg runs above Gamma = {BOSON_UNIFORM_GAMMA_CAP} "
                "relax slowly; expect long horizons", stacklevel=2)
        nbar = float(np.mean(steady_occupations(spec)))  # full diagonal needed here
        return nbar * np.eye(n, dtype=complex)
    raise ValueError(f"unknown initial state kind {kind!r}")


def _check_state(S, spec, t):
    herm = np.max(np.abs(S - S.conj().T))
    scale = max(1.0, float(np.max(np.abs(S))))
    if herm > HERMITICITY_TOL * scale:
        raise PauliViolation(f"covariance not Hermitian at t={t:g}: deviation {herm:.3e}")
    evals = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    if evals.min() < -EIGENVALUE_TOL:
        raise PauliViolation(f"negative covariance eigenvalue {evals.min():.3e} at t={t:g}")
    if spec.statistics is Statistics.FERMION and evals.max() > 1.0 + EIGENVALUE_TOL:
        raise PauliViolation(f"fermion occupation eigenvalue {evals.max():.3e} > 1 at t={t:g}")


class _LyapunovStepper:
    """Fixed-step propagation of dS/dt = A S + S A^H + Q via the classical-RK4
    one-step transfer matrix (algebraically identical for a linear system)."""

    def __init__(self, A, Q, S0, h):
        self.h = h
        self.phi_half = rk4_transfer(A, h / 2.0)
        self.phi = self.phi_half @ self.phi_half
        # Simpson quadrature of the step's source integral; constant per step
        g_mid = self.phi_half @ Q @ self.phi_half.conj().T
        g_full = self.phi @ Q @ self.phi.conj().T
        self.W = (h / 6.0) * (Q + 4.0 * g_mid + g_full)
        self.S = S0.astype(complex).copy()
        self.t = 0.0

    def advance(self, n_steps):
        for _ in range(n_steps):
            self.S = self.phi @ self.S @ self.phi.conj().T + self.W
            self.t += self.h


def evolve_covariance(spec, S0, t_grid, store_full=False, verify=False):
    """Integrate the covariance equation of motion with pump inhomogeneity 2*Gamma*I.

    Hermiticity and the statistics bounds (Pauli for fermions, positivity for
    bosons) are asserted at every stored step.  With ``verify=True`` the
    trajectory is cross-checked against the formal solution
    ``G S0 G^H + int_0^t G (2 Gamma I) G^H``, with the integral evaluated on a
    100-point Gauss-Legendre sub-grid per grid interval; agreement to 1e-7
    relative is enforced at the final time.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    H = effective_hamiltonian(spec)
    n = H.shape[0]
    S0 = np.asarray(S0, dtype=complex)
    if S0.shape != (n, n):
        raise ValueError(f"S0 must be {n}x{n}")
    A = -1j * H
    Q = 2.0 * spec.Gamma * np.eye(n, dtype=complex)

    h = rk4_step_size(A)
    occ = np.empty((len(t_grid), n))
    full = [] if store_full else None
    occ[0] = S0.diagonal().real
    _check_state(S0, spec, 0.0)
    if store_full:
        full.append(S0.copy())

    prev_t = t_grid[0]
    if abs(prev_t) > 0:
        raise ValueError("t_grid must start at 0")
    stepper = None
    for idx, t_next in enumerate(t_grid[1:], start=1):
        dt = t_next - prev_t
        n_sub = max(1, int(np.ceil(dt / h - 1e-12)))
        hs = dt / n_sub
        if stepper is None or abs(stepper.h - hs) > 1e-15 * hs:
            S_now = S0 if stepper is None else stepper.S
            stepper = _LyapunovStepper(A, Q, S_now, hs)
        stepper.advance(n_sub)
        _check_state(stepper.S, spec, t_next)
        occ[idx] = stepper.S.diagonal().real
        if store_full:
            full.append(stepper.S.copy())
        prev_t = t_next

    traj = CovarianceTrajectory(t_grid, occ, spec, full)
    if verify and len(t_grid) > 1:
        _verify_formal_solution(spec, S0, t_grid, stepper.S)
    return traj


def _verify_formal_solution(spec, S0, t_grid, S_final):
    """Gauss-Legendre evaluation of the formal solution vs the ODE route."""
    H = effective_hamiltonian(spec)
    n = H.shape[0]
    nodes, weights = np.polynomial.legendre.leggauss(100)
    quad_nodes = []
    quad_weights = []
    for a, b in zip(t_grid[:-1], t_grid[1:]):
        quad_nodes.extend((0.5 * (b - a) * nodes + 0.5 * (a + b)).tolist())
        quad_weights.extend((0.5 * (b - a) * weights).tolist())
    T = float(t_grid[-1])
    eval_grid = np.unique(np.concatenate([[0.0, T], quad_nodes]))
    states = integrate_linear_ode(-1j * H, np.eye(n, dtype=complex), eval_grid)

    G_T = states[int(np.searchsorted(eval_grid, T))]
    acc = G_T @ S0 @ G_T.conj().T
    Q = 2.0 * spec.Gamma * np.eye(n, dtype=complex)
    # the pump integrand is G(T - t') Q G(T - t')^H; substituting s = T - t'
    # lets us integrate G(s) Q G(s)^H over the same node set
    for s, w in zip(quad_nodes, quad_weights):
        Gs = states[int(np.searchsorted(eval_grid, s))]
        acc = acc + w * (Gs @ Q @ Gs.conj().T)
    ref = np.linalg.norm(acc)
    dev = np.linalg.norm(acc - S_final)
    if dev > 1e-7 * max(ref, 1e-300):
        raise VerificationError(
            f"formal-solution check failed: deviation {dev / max(ref, 1e-300):.3e}"
        )


class _VacuumProbeIntegrator:
    """Occupation of one probe site from vacuum via the single-row propagator ODE.

    Evolves v(t) = G(m, :, t)^T under dv/dt = -i H^T v and accumulates
    n_m(t) = 2 Gamma * integral of sum_j |v_j|^2 with composite Simpson on the
    RK4 substeps (the trapezoid rule at this step size would not reach the
    1e-6 agreement contract with the covariance route).
    """

    def __init__(self, spec, probe_site, h):
        H = effective_hamiltonian(spec)
        n = H.shape[0]
        if not 1 <= probe_site <= n:
            raise ValueError(f"probe site {probe_site} outside 1..{n}")
        self.two_gamma = 2.0 * spec.Gamma
        self.h = h
        self.phi_half = rk4_transfer(-1j * H.T, h / 2.0)
        self.v = np.zeros(n, dtype=complex)
        self.v[probe_site - 1] = 1.0
        self.q = 0.0
        self.t = 0.0
        self._f_now = self._density()

    def _density(self):
        return float(np.vdot(self.v, self.v).real)

    def advance(self, n_steps):
        for _ in range(n_steps):
            v_mid = self.phi_half @ self.v
            self.v = self.phi_half @ v_mid
            f_mid = float(np.vdot(v_mid, v_mid).real)
            f_next = self._density()
            self.q += (self.h / 6.0) * (self._f_now + 4.0 * f_mid + f_next)
            self._f_now = f_next
            self.t += self.h
        if not np.isfinite(self.q):
            raise StepOverflow(f"occupation integral diverged by t={self.t:g}")

    @property
    def occupation(self):
        return self.two_gamma * self.q


def vacuum_occupation_fast(spec, m, t_grid):
    """Occupation series of site m from vacuum, via one propagator-row ODE.

    This is the production route for relaxation runs: the covariance matrix is
    never formed.  Matches the evolve_covariance diagonal to 1e-6 relative.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if abs(t_grid[0]) > 0:
        raise ValueError("t_grid must start at 0")
    H = effective_hamiltonian(spec)
    h = rk4_step_size(-1j * H)
    out = np.empty(len(t_grid))
    out[0] = 0.0
    integ = None
    prev_t = 0.0
    for idx, t_next in enumerate(t_grid[1:], start=1):
        dt = t_next - prev_t
        n_sub = max(1, int(np.ceil(dt / h - 1e-12)))
        hs = dt / n_sub
        if integ is None or abs(integ.h - hs) > 1e-15 * hs:
            if integ is None:
                integ = _VacuumProbeIntegrator(spec, m, hs)
            else:  # re-seat the stepper at the new step size
                keep_v, keep_q, keep_f, keep_t = integ.v, integ.q, integ._f_now, integ.t
                integ = _VacuumProbeIntegrator(spec, m, hs)
                integ.v, integ.q, integ._f_now, integ.t = keep_v, keep_q, keep_f, keep_t
        integ.advance(n_sub)
        out[idx] = integ.occupation
        prev_t = t_next
    return out


def delta_n_curve(traj, m):
    """Normalized non-equilibrium population of site m against the Sylvester
    steady state (never the last trajectory sample, to avoid horizon bias)."""
    n_ss = steady_occupations(traj.spec, sites=[m])
    return delta_n_from_series(traj.occupations[:, m - 1], float(n_ss[0]))


def delta_n_from_series(n_series, n_ss_value):
    if n_ss_value <= 0.0:
        raise ZeroSteadyState("steady-state occupation vanishes (Gamma = 0?)")
    return np.abs(np.asarray(n_series) - n_ss_value) / n_ss_value


def relaxation_time(curve, t_grid, eta, sustain_factor=3.0):
    """First threshold crossing that stays below threshold for sustain_factor*tau.

    The crossing is linearly interpolated between the bracketing samples.  If
    a candidate crossing is violated inside its sustain window the search
    resumes after the violation.  Raises NotRelaxedWithinHorizon when no
    sustained crossing fits inside the sampled grid.
    """
    curve = np.asarray(curve, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must be in (0, 1)")
    if curve[0] < eta:
        raise ValueError("curve must start at or above the threshold")
    if sustain_factor < 1.0:
        raise ValueError("sustain_factor must be >= 1")

    k = 1
    n = len(curve)
    while k < n:
        if curve[k] > eta:
            k += 1
            continue
        c0, c1 = curve[k - 1], curve[k]
        if c1 == c0:
            tau = t_grid[k]
        else:
            tau = t_grid[k - 1] + (eta - c0) * (t_grid[k] - t_grid[k - 1]) / (c1 - c0)
        t_end = sustain_factor * tau
        if t_grid[-1] < t_end:
            raise NotRelaxedWithinHorizon(
                f"grid ends at {t_grid[-1]:g} before the sustain window {t_end:g} closes"
            )
        window = (t_grid >= tau) & (t_grid <= t_end)
        bad = np.nonzero(window & (curve > eta))[0]
        if len(bad) == 0:
            return RelaxationResult(float(tau), float(eta), True, float(sustain_factor),
                                    float(t_grid[-1]))
        k = int(bad[-1]) + 1
    raise NotRelaxedWithinHorizon("no sustained crossing within the sampled horizon")


def run_relaxation(spec, init="vacuum", eta=math.exp(-1), sustain_factor=3.0,
                   horizon=None, probe_site=None, dt=None):
    """Full relaxation pipeline: evolve, normalize, extract the sustained tau.

    Vacuum initial conditions use the fast single-row route; the alternate
    initial states evolve the covariance matrix.  The simulation is extended
    in chunks until the sustained crossing is confirmed or the horizon
    (default 10 * n_sites / Delta) is exhausted.

    Returns ``(RelaxationResult, t_grid, delta_n_series)``.
    """
    Delta = spec.delta()
    n = spec.n_sites
    m = probe_site if probe_site is not None else n
    horizon = horizon if horizon is not None else HORIZON_FACTOR * n / Delta
    dt = dt if dt is not None else RELAX_DT_FACTOR / Delta

    n_probe = float(steady_occupations(spec, sites=[m])[0])
    if n_probe <= 0.0:
        raise ZeroSteadyState("steady-state occupation vanishes (Gamma = 0?)")

    if init == "vacuum":
        series_fn = _VacuumSeries(spec, m, dt)
    else:
        series_fn = _CovarianceSeries(spec, initial_state(init, spec), m, dt)

    T = min(horizon, max(2.0 * n / Delta, 40.0 * dt))
    while True:
        t_grid, n_series = series_fn.up_to(T)
        curve = delta_n_from_series(n_series, n_probe)
        try:
            result = relaxation_time(curve, t_grid, eta, sustain_factor)
            return result, t_grid, curve
        except NotRelaxedWithinHorizon:
            if T >= horizon:
                raise
            T = min(horizon, 1.6 * T)


class _VacuumSeries:
    def __init__(self, spec, m, dt):
        self.spec = spec
        self.m = m
        self.dt = dt
        h = rk4_step_size(-1j * effective_hamiltonian(spec))
        self.n_sub = max(1, int(np.ceil(dt / h - 1e-12)))
        self.integ = _VacuumProbeIntegrator(spec, m, dt / self.n_sub)
        self.values = [0.0]

    def up_to(self, T):
        n_pts = int(np.ceil(T / self.dt - 1e-12)) + 1
        while len(self.values) < n_pts:
            self.integ.advance(self.n_sub)
            self.values.append(self.integ.occupation)
        t = self.dt * np.arange(len(self.values))
        return t, np.asarray(self.values)


class _CovarianceSeries:
    def __init__(self, spec, S0, m, dt):
        self.spec = spec
        self.m = m
        self.dt = dt
        A = -1j * effective_hamiltonian(spec)
        Q = 2.0 * spec.Gamma * np.eye(A.shape[0], dtype=complex)
        h = rk4_step_size(A)
        self.n_sub = max(1, int(np.ceil(dt / h - 1e-12)))
        self.stepper = _LyapunovStepper(A, Q, S0, dt / self.n_sub)
        self.values = [float(S0[m - 1, m - 1].real)]
        self._check_every = max(1, int(round(1.0 / dt)))
        self._count = 0

    def up_to(self, T):
        n_pts = int(np.ceil(T / self.dt - 1e-12)) + 1
        while len(self.values) < n_pts:
            self.stepper.advance(self.n_sub)
            self._count += 1
            if self._count % self._check_every == 0:
                _check_state(self.stepper.S, self.spec, self.stepper.t)
            self.values.append(float(self.stepper.S[self.m - 1, self.m - 1].real))
        t = self.dt * np.arange(len(self.values))
        return t, np.asarray(self.values)
