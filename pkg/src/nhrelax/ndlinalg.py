"""Dense complex linear algebra substrate.

Non-symmetric eigendecomposition with biorthonormal left/right pairs, a
similarity-transform eigensolver for non-reciprocal tridiagonal chains,
quadratic/quartic root finding, fixed-step RK4 integration of linear matrix
ODEs, and the Sylvester-type steady-state solve.

Everything here works on plain complex128 ndarrays.  Exponentially scaled
eigenvector sets are carried in a (log-magnitude, well-conditioned factor)
split form, see :class:`Spectrum`.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateLeadingCoefficient,
    DegenerateSpectrum,
    NonConvergence,
    NonMonotonicGrid,
    NotTridiagonal,
    ScaleOverflow,
    StepOverflow,
    UnstableModel,
    VerificationError,
)

# Spectrum acceptance thresholds used throughout the package.
BIORTH_TOL = 1e-8
EIG_RESIDUAL_TOL = 1e-9
DEGENERACY_GAP = 1e-10
# Beyond this many e-foldings the dense eigenvector prefactors overflow doubles.
LOG_SCALE_LIMIT = 650.0
STATE_NORM_LIMIT = 1e300
MAX_EIG_DIM = 1024


def require_matrix(M, square=False, name="matrix"):
    """Validate and return a finite complex128 2-d array."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-d array with positive shape, got {M.shape}")
    if not np.all(np.isfinite(M.real)) or not np.all(np.isfinite(M.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    if square and M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got {M.shape}")
    return M


@dataclasses.dataclass
class Spectrum:
    """Eigendecomposition with biorthonormal left/right vectors.

    Columns of ``right``/``left`` hold the eigenvectors.  When ``row_log_scale``
    is set the stored factors are well conditioned and the physical vectors are

        right_actual[j, a] = exp(+row_log_scale[j]) * right[j, a]
        left_actual[j, a]  = exp(-row_log_scale[j]) * left[j, a]

    which keeps biorthonormality ``left^H @ right = I`` exact in the stored
    factors even when the physical prefactors overflow doubles.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    biorth_residual: float
    eig_residual: float
    row_log_scale: np.ndarray | None = None

    @property
    def dim(self):
        return len(self.eigenvalues)

    @property
    def scaled(self):
        return self.row_log_scale is not None

    def right_dense(self):
        """Materialize right eigenvectors; ScaleOverflow if not representable."""
        if self.row_log_scale is None:
            return self.right
        if np.max(np.abs(self.row_log_scale)) > 700.0:
            raise ScaleOverflow("right eigenvectors exceed double range; use the scaled form")
        return np.exp(self.row_log_scale)[:, None] * self.right

    def left_dense(self):
        """Materialize left eigenvectors; ScaleOverflow if not representable."""
        if self.row_log_scale is None:
            return self.left
        if np.max(np.abs(self.row_log_scale)) > 700.0:
            raise ScaleOverflow("left eigenvectors exceed double range; use the scaled form")
        return np.exp(-self.row_log_scale)[:, None] * self.left


@dataclasses.dataclass
class PolyRoots:
    """Roots of a low-degree polynomial with a certified residual bound."""

    coefficients: np.ndarray  # ascending degree
    roots: np.ndarray
    max_residual: float


def _sort_spectrum(w, vr, vl):
    order = np.lexsort((w.imag, w.real))
    return w[order], vr[:, order], vl[:, order]


def eig_general(M):
    """Biorthonormal eigendecomposition of a general complex matrix.

    Eigenvalues are sorted by (real, imaginary) part.  Left vectors are
    rescaled so that ``left^H @ right = I``.  Raises DegenerateSpectrum when
    two eigenvalues are closer than ``1e-10 * ||M||`` (simple spectra only;
    the models in scope are non-degenerate away from measure-zero parameter
    sets).
    """
    M = require_matrix(M, square=True, name="M")
    n = M.shape[0]
    if n > MAX_EIG_DIM:
        raise ValueError(f"dimension {n} exceeds the dense-eig cap {MAX_EIG_DIM}")
    norm = np.linalg.norm(M, np.inf)
    try:
        w, vl, vr = scipy.linalg.eig(M, left=True, right=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NonConvergence(str(exc)) from exc
    w, vr, vl = _sort_spectrum(w, vr, vl)

    if n > 1:
        gaps = np.abs(w[:, None] - w[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < DEGENERACY_GAP * max(norm, 1e-300):
            raise DegenerateSpectrum(
                f"eigenvalue gap {gaps.min():.3e} below {DEGENERACY_GAP:.0e}*||M||"
            )

    # scipy's vl already satisfies vl^H M = w vl^H; rescale for vl^H vr = I.
    overlaps = np.einsum("ja,ja->a", vl.conj(), vr)
    if np.min(np.abs(overlaps)) < 1e-14:
        raise DegenerateSpectrum("left/right overlap numerically zero (defective matrix)")
    vl = vl / overlaps.conj()[None, :]

    biorth = float(np.max(np.abs(vl.conj().T @ vr - np.eye(n))))
    eig_res = float(
        np.max(np.linalg.norm(M @ vr - vr * w[None, :], axis=0)) / max(norm, 1e-300)
    )
    return Spectrum(w, vr, vl, biorth, eig_res)


def _tridiagonal_parts(M):
    n = M.shape[0]
    off = M.copy()
    idx = np.arange(n)
    off[idx, idx] = 0.0
    if n > 1:
        off[idx[:-1], idx[:-1] + 1] = 0.0
        off[idx[1:], idx[1:] - 1] = 0.0
    if np.max(np.abs(off)) > 1e-14 * max(np.max(np.abs(M)), 1e-300):
        raise NotTridiagonal("matrix has entries outside the three central diagonals")
    diag = np.diag(M)
    sub = np.diag(M, -1)
    sup = np.diag(M, 1)
    return diag, sub, sup


def eig_similarity_hn(M, xi_loc):
    """Diagonalize a non-reciprocal tridiagonal chain via its Hermitian gauge.

    The matrix must have a uniform diagonal and uniform real positive
    sub/super-diagonals whose ratio matches ``exp(2/xi_loc)``.  The
    eigenproblem actually solved is the real symmetric chain with hopping
    ``J = sqrt(sub * sup)``, so the result is immune to the non-normal
    ill-conditioning of the original matrix.  Above ``L/xi_loc > 650`` the
    eigenvectors are returned in scaled form (see :class:`Spectrum`).
    """
    M = require_matrix(M, square=True, name="M")
    if not np.isfinite(xi_loc) or xi_loc <= 0:
        raise NotTridiagonal("xi_loc must be finite and positive (reciprocal chains: use eig_general)")
    n = M.shape[0]
    diag, sub, sup = _tridiagonal_parts(M)
    if np.max(np.abs(diag - diag[0])) > 1e-12 * max(1.0, np.abs(diag[0])):
        raise NotTridiagonal("diagonal is not uniform")
    if n < 2:
        raise NotTridiagonal("need at least a 2-site chain")
    if np.max(np.abs(sub.imag)) > 1e-14 or np.max(np.abs(sup.imag)) > 1e-14:
        raise NotTridiagonal("off-diagonals must be real")
    sub = sub.real
    sup = sup.real
    if np.any(sub <= 0) or np.any(sup <= 0):
        raise NotTridiagonal("off-diagonals must be positive")
    if np.max(np.abs(sub - sub[0])) > 1e-12 * sub[0] or np.max(np.abs(sup - sup[0])) > 1e-12 * sup[0]:
        raise NotTridiagonal("off-diagonals are not uniform")
    ratio = sub[0] / sup[0]
    if abs(np.log(ratio) / 2.0 - 1.0 / xi_loc) > 1e-10 * max(1.0, 1.0 / xi_loc):
        raise NotTridiagonal("xi_loc inconsistent with the hopping asymmetry")

    offd = np.sqrt(sub[0] * sup[0])  # = J/2 of the symmetric gauge chain
    vals_sym, vecs = scipy.linalg.eigh_tridiagonal(np.zeros(n), np.full(n - 1, offd))
    w = diag[0] + vals_sym.astype(complex)
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    vecs = vecs[:, order]

    biorth = float(np.max(np.abs(vecs.T @ vecs - np.eye(n))))
    T = np.diag(np.full(n - 1, offd), -1) + np.diag(np.full(n - 1, offd), 1)
    eig_res = float(
        np.max(np.linalg.norm(T @ vecs - vecs * vals_sym[order][None, :], axis=0))
        / max(np.linalg.norm(M, np.inf), 1e-300)
    )

    scale = np.arange(1, n + 1) / xi_loc  # 1-based sites, matching e^{j/xi_loc}
    if scale[-1] > LOG_SCALE_LIMIT:
        return Spectrum(w, vecs.astype(complex), vecs.astype(complex), biorth, eig_res,
                        row_log_scale=scale)
    d = np.exp(scale)
    return Spectrum(w, d[:, None] * vecs, (1.0 / d)[:, None] * vecs, biorth, eig_res)


def _horner(coeffs_desc, x):
    acc = np.clongdouble(0)
    for c in coeffs_desc:
        acc = acc * x + c
    return acc


def poly_roots(coeffs):
    """Roots of a quadratic or quartic, with residuals certified in extended precision.

    ``coeffs`` is ascending-degree.  The quadratic uses the cancellation-safe
    closed form; the quartic goes through the 4x4 companion matrix followed by
    Newton polishing in 80-bit arithmetic, which keeps ``|p(root)|`` below
    ``1e-10 * max|coeff|`` for the root magnitudes that arise here.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    degree = len(coeffs) - 1
    if degree not in (2, 4):
        raise ValueError(f"only quadratics and quartics supported, got degree {degree}")
    cmax = np.max(np.abs(coeffs))
    if cmax == 0.0:
        raise DegenerateLeadingCoefficient("zero polynomial")
    if abs(coeffs[-1]) < 1e-14 * cmax:
        raise DegenerateLeadingCoefficient("leading coefficient numerically zero")

    cl = coeffs.astype(np.clongdouble)
    if degree == 2:
        c0, c1, c2 = cl
        disc = np.sqrt(c1 * c1 - 4 * c2 * c0)
        # pick the sign that avoids cancellation in c1 +/- disc
        if abs(c1 + disc) >= abs(c1 - disc):
            q = -(c1 + disc) / 2
        else:
            q = -(c1 - disc) / 2
        if abs(q) == 0.0:  # c1 = c0 = 0
            roots = np.array([0.0, 0.0], dtype=np.clongdouble)
        else:
            roots = np.array([q / c2, c0 / q], dtype=np.clongdouble)
    else:
        monic = (coeffs / coeffs[-1])[:-1]
        comp = np.zeros((4, 4), dtype=complex)
        comp[1:, :3] = np.eye(3)
        comp[:, 3] = -monic
        roots = np.linalg.eigvals(comp).astype(np.clongdouble)
        desc = cl[::-1]
        dcoeffs = desc[:-1] * np.arange(degree, 0, -1, dtype=np.clongdouble)
        for _ in range(3):
            p = np.array([_horner(desc, r) for r in roots])
            dp = np.array([_horner(dcoeffs, r) for r in roots])
            safe = np.abs(dp) > 0
            roots[safe] = roots[safe] - p[safe] / dp[safe]

    desc = cl[::-1]
    residual = float(max(abs(np.complex128(_horner(desc, r))) for r in roots))
    roots128 = np.sort_complex(roots.astype(complex))
    return PolyRoots(coeffs, roots128, residual)


def rk4_step_size(A):
    """The fixed RK4 step pinned for reproducibility: min(0.01, 0.1/||A||_inf)."""
    norm = np.linalg.norm(A, np.inf)
    if norm == 0.0:
        return 0.01
    return min(0.01, 0.1 / norm)


def rk4_transfer(A, h):
    """One-step map of classical RK4 for dX/dt = A X (degree-4 Taylor of exp(hA))."""
    n = A.shape[0]
    hA = h * A
    hA2 = hA @ hA
    return (np.eye(n) + hA + hA2 / 2.0 + (hA2 @ hA) / 6.0 + (hA2 @ hA2) / 24.0)


def _rhs(A, X, mode, source):
    if mode == "linear":
        return A @ X
    out = A @ X + X @ A.conj().T
    if source is not None:
        out = out + source
    return out


def _integrate_fixed(A, X0, t_grid, mode, source, h):
    states = [X0.copy()]
    X = X0.copy()
    t = t_grid[0]
    # overflow is detected through the norm guard below, not through warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for t_next in t_grid[1:]:
            dt = t_next - t
            n_sub = max(1, int(np.ceil(dt / h - 1e-12)))
            hs = dt / n_sub
            for _ in range(n_sub):
                k1 = _rhs(A, X, mode, source)
                k2 = _rhs(A, X + 0.5 * hs * k1, mode, source)
                k3 = _rhs(A, X + 0.5 * hs * k2, mode, source)
                k4 = _rhs(A, X + hs * k3, mode, source)
                X = X + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            nrm = np.linalg.norm(X)
            if not np.isfinite(nrm) or nrm > STATE_NORM_LIMIT:
                raise StepOverflow(f"state norm {nrm:.3e} at t={t_next:g} (unstable model)")
            states.append(X.copy())
            t = t_next
    return states


def integrate_linear_ode(A, X0, t_grid, source=None, mode="linear", verify=False):
    """Fixed-step classical RK4 for dX/dt = A X, or the covariance form
    dX/dt = A X + X A^H + source when ``mode='lyapunov'``.

    The step is ``min(0.01, 0.1/||A||_inf)``, sub-divided so every ``t_grid``
    point is hit exactly; the fixed step keeps repeated runs bit-stable.  With
    ``verify=True`` the integration is repeated at half the step and the final
    states must agree to 1e-8 relative (Richardson check).

    Returns the list of states, one per grid point (the first is ``X0``).
    """
    A = require_matrix(A, square=True, name="A")
    X0 = np.asarray(X0, dtype=complex)
    if X0.ndim == 1:
        X0 = X0[:, None]
    if X0.shape[0] != A.shape[0]:
        raise ValueError("X0 not conformable with A")
    if mode not in ("linear", "lyapunov"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "lyapunov" and X0.shape[0] != X0.shape[1]:
        raise ValueError("lyapunov mode needs a square state")
    if source is not None:
        source = require_matrix(source, name="source")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or abs(t_grid[0]) > 0:
        raise NonMonotonicGrid("t_grid must start at 0")
    if len(t_grid) > 1 and np.any(np.diff(t_grid) <= 0):
        raise NonMonotonicGrid("t_grid must be strictly increasing")

    h = rk4_step_size(A)
    states = _integrate_fixed(A, X0, t_grid, mode, source, h)
    if verify and len(t_grid) > 1:
        states_half = _integrate_fixed(A, X0, t_grid, mode, source, h / 2.0)
        ref = np.linalg.norm(states_half[-1])
        diff = np.linalg.norm(states[-1] - states_half[-1])
        if diff > 1e-8 * max(ref, 1e-300):
            raise VerificationError(
                f"Richardson check failed: halved-step deviation {diff / max(ref, 1e-300):.3e}"
            )
    return states


def solve_steady_sylvester(H_eff, pump_rate, eigenvalues=None):
    """Steady state of dS/dt = -i(H S - S H^H) + 2*pump_rate*I.

    Requires every eigenvalue of ``H_eff`` to have strictly negative imaginary
    part.  Strongly non-normal matrices pollute dense eigensolves badly enough
    to fake instabilities, so callers that know the spectrum reliably (e.g.
    through a gauge transform) should pass it via ``eigenvalues``.  Solved
    with the Bartels-Stewart Sylvester algorithm (equivalent to vectorizing
    into a dense linear system, but O(n^3) instead of O(n^6)); the result is
    Hermitized and its residual is certified against the equation of motion.
    Index-order convention: see ``dynamics.COV_ROW_IS_DESTINATION``.
    """
    H = require_matrix(H_eff, square=True, name="H_eff")
    n = H.shape[0]
    evals = np.linalg.eigvals(H) if eigenvalues is None else np.asarray(eigenvalues)
    if np.max(evals.imag) >= -1e-12:
        raise UnstableModel(
            f"eigenvalue with Im = {np.max(evals.imag):.3e} >= -1e-12; no steady state"
        )
    if pump_rate == 0.0:
        return np.zeros((n, n), dtype=complex)
    Q = -2j * pump_rate * np.eye(n)
    S = scipy.linalg.solve_sylvester(H, -H.conj().T, Q)
    S = 0.5 * (S + S.conj().T)
    residual = np.linalg.norm(-1j * (H @ S - S @ H.conj().T) + 2.0 * pump_rate * np.eye(n))
    bound = 1e-10 * np.linalg.norm(S) * np.linalg.norm(H)
    if residual > max(bound, 1e-250):
        raise VerificationError(
            f"steady-state residual {residual:.3e} exceeds bound {bound:.3e}"
        )
    return S
