"""Exact Fock-space Lindblad oracle for tiny fermionic chains.

Everything in the covariance layer is ultimately validated against this
module: the master equation is integrated in the full 2^L-dimensional Hilbert
space with Jordan-Wigner fermion operators and explicit jump operators, with
no quadratic-Lindbladian shortcuts.  Limited to L <= 4 sites (fermions only;
a truncated bosonic oracle would trade its ground-truth status for
truncation-error control).
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import IdentityNotAnnihilated, TooLarge, TraceDrift, UnsupportedModel
from .models import Kind, ModelSpec, Statistics, build_hn, hn_lambda_vector
from .ndlinalg import eig_general, solve_steady_sylvester

MAX_SITES = 4
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-10


def jordan_wigner_annihilators(L):
    """The L fermionic annihilation operators as 2^L x 2^L matrices.

    Occupation-number basis with |0> = vacuum; Z strings keep the
    anticommutation relations exact.
    """
    lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
    Z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    ops = []
    for j in range(L):
        factors = [Z] * j + [lower] + [eye] * (L - j - 1)
        op = factors[0]
        for f in factors[1:]:
            op = np.kron(op, f)
        ops.append(op)
    return ops


@dataclasses.dataclass
class FockLindblad:
    """Full Lindblad problem on the fermionic Fock space of a short chain."""

    spec: ModelSpec
    hamiltonian: np.ndarray
    jump_ops: list  # (operator matrix, rate) pairs
    rho: np.ndarray
    annihilators: list

    @property
    def L(self):
        return self.spec.L


def fock_vacuum(L):
    dim = 2**L
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def fock_all_filled(L):
    dim = 2**L
    rho = np.zeros((dim, dim), dtype=complex)
    rho[dim - 1, dim - 1] = 1.0
    return rho


def build_fock_lindblad(spec):
    """Assemble the exact master equation of the nearest-neighbour chain.

    Jump operators: sqrt(kappa)(c_j - i c_{j+1}) on each bond, sqrt(2 lambda_j)
    c_j with the edge-corrected local-loss rates, and sqrt(2 Gamma) c_j^dag.
    The chain starts in vacuum; swap ``rho`` for other initial states.
    """
    if spec.kind is not Kind.HN:
        raise UnsupportedModel("explicit jump operators are only known for the HN chain")
    if spec.statistics is not Statistics.FERMION:
        raise UnsupportedModel("the exact oracle is fermionic (finite Fock space)")
    if spec.L > MAX_SITES:
        raise TooLarge(f"L = {spec.L} > {MAX_SITES}")
    L = spec.L
    c = jordan_wigner_annihilators(L)

    H = np.zeros((2**L, 2**L), dtype=complex)
    for j in range(L - 1):
        hop = c[j + 1].conj().T @ c[j]
        H += (spec.w / 2.0) * (hop + hop.conj().T)

    jumps = []
    for j in range(L - 1):
        jumps.append((c[j] - 1j * c[j + 1], spec.kappa))
    for j, lam in enumerate(hn_lambda_vector(spec)):
        jumps.append((c[j], 2.0 * lam))
    for j in range(L):
        jumps.append((c[j].conj().T, 2.0 * spec.Gamma))

    return FockLindblad(spec, H, jumps, fock_vacuum(L), c)


def liouvillian_matrix(fl):
    """The superoperator of d rho/dt in column-major vectorization."""
    dim = fl.hamiltonian.shape[0]
    eye = np.eye(dim, dtype=complex)
    Ls = -1j * (np.kron(eye, fl.hamiltonian) - np.kron(fl.hamiltonian.T, eye))
    for A, rate in fl.jump_ops:
        AdA = A.conj().T @ A
        Ls += rate * (np.kron(A.conj(), A)
                      - 0.5 * (np.kron(eye, AdA) + np.kron(AdA.T, eye)))
    return Ls


def adjoint_liouvillian_matrix(fl):
    """Superoperator of the adjoint (Heisenberg) generator acting on observables."""
    dim = fl.hamiltonian.shape[0]
    eye = np.eye(dim, dtype=complex)
    Ls = 1j * (np.kron(eye, fl.hamiltonian) - np.kron(fl.hamiltonian.T, eye))
    for A, rate in fl.jump_ops:
        AdA = A.conj().T @ A
        # L^dag(Y) = A^dag Y A - (1/2){A^dag A, Y}
        Ls += rate * (np.kron(A.T, A.conj().T)
                      - 0.5 * (np.kron(eye, AdA) + np.kron(AdA.T, eye)))
    return Ls


def lindblad_brute(fl, t_grid, rho0=None):
    """RK4 integration of the vectorized master equation; returns n_m(t).

    Uses a step half the generic pin (this is the ground-truth anchor, so it
    gets extra accuracy margin).  Trace, Hermiticity and positivity of rho are
    enforced at every grid point.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if abs(t_grid[0]) > 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing from 0")
    rho = (fl.rho if rho0 is None else rho0).astype(complex).copy()
    Ls = liouvillian_matrix(fl)
    h = min(0.005, 0.1 / np.linalg.norm(Ls, np.inf))

    number_ops = [cj.conj().T @ cj for cj in fl.annihilators]
    occ = np.empty((len(t_grid), fl.L))
    v = rho.reshape(-1, order="F")

    def check_and_record(idx, t):
        r = v.reshape(rho.shape, order="F")
        tr = np.trace(r)
        if abs(tr - 1.0) > TRACE_TOL:
            raise TraceDrift(f"trace {tr:.12f} at t={t:g}")
        herm = np.max(np.abs(r - r.conj().T))
        evals = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
        if herm > 1e-9 or evals.min() < -POSITIVITY_TOL:
            raise TraceDrift(
                f"rho not Hermitian-PSD at t={t:g}: herm {herm:.2e}, min eig {evals.min():.2e}"
            )
        for m in range(fl.L):
            occ[idx, m] = np.trace(r @ number_ops[m]).real

    check_and_record(0, 0.0)
    t_prev = 0.0
    for idx, t_next in enumerate(t_grid[1:], start=1):
        dt = t_next - t_prev
        n_sub = max(1, int(np.ceil(dt / h - 1e-12)))
        hs = dt / n_sub
        for _ in range(n_sub):
            k1 = Ls @ v
            k2 = Ls @ (v + 0.5 * hs * k1)
            k3 = Ls @ (v + 0.5 * hs * k2)
            k4 = Ls @ (v + hs * k3)
            v = v + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        check_and_record(idx, t_next)
        t_prev = t_next
    return occ


def two_point_matrix(fl, rho):
    """Covariance matrix S[m, n] = <c_n^dag c_m> of a Fock-space state.

    This is the object that pins the covariance index convention."""
    L = fl.L
    S = np.zeros((L, L), dtype=complex)
    for m in range(L):
        for n in range(L):
            S[m, n] = np.trace(rho @ fl.annihilators[n].conj().T @ fl.annihilators[m])
    return S


def evolve_to(fl, T, rho0=None, n_grid=8):
    """Convenience: the density matrix at time T."""
    t_grid = np.linspace(0.0, T, n_grid + 1)
    rho = (fl.rho if rho0 is None else rho0).astype(complex).copy()
    Ls = liouvillian_matrix(fl)
    h = min(0.005, 0.1 / np.linalg.norm(Ls, np.inf))
    v = rho.reshape(-1, order="F")
    t_prev = 0.0
    for t_next in t_grid[1:]:
        dt = t_next - t_prev
        n_sub = max(1, int(np.ceil(dt / h - 1e-12)))
        hs = dt / n_sub
        for _ in range(n_sub):
            k1 = Ls @ v
            k2 = Ls @ (v + 0.5 * hs * k1)
            k3 = Ls @ (v + 0.5 * hs * k2)
            k4 = Ls @ (v + hs * k3)
            v = v + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_prev = t_next
    return v.reshape(rho.shape, order="F")


@dataclasses.dataclass
class ThirdQuantizationReport:
    """Residuals of the Liouvillian left-eigenmode construction."""

    pairs_checked: int
    identity_residual: float
    max_eigenmode_residual: float
    max_sandwich_error: float

    @property
    def passed(self):
        return (self.identity_residual <= 1e-10
                and self.max_eigenmode_residual <= 1e-8
                and self.max_sandwich_error <= 1e-8)


def third_quantization_check(fl):
    """Verify the quadratic-Lindbladian eigenmode structure on the superoperator.

    For every pair (alpha, beta) of single-particle modes, the observable
    l_ab = sum psi^l_a(alpha) psi^l_b(beta)* c_a^dag c_b - S_ab must satisfy
    L^dag(l) = -i (E_beta - E_alpha^*) l with
    S_ab = -i <psi^l(alpha)| P |psi^l(beta)formal> / (E_beta - E_alpha^*) in
    component form, and S_ab must equal the left-left sandwich of the
    Sylvester steady state.  The adjoint generator must annihilate the
    identity exactly (trace preservation).
    """
    if fl.L > 3:
        raise TooLarge("superoperator check limited to L <= 3 (<= 64 x 64)")
    spec = fl.spec
    H_eff_mat, data = build_hn(spec) if spec.L >= 2 else (None, None)
    if H_eff_mat is None:
        raise UnsupportedModel("third-quantization check needs L >= 2")

    Ldag = adjoint_liouvillian_matrix(fl)
    dim = fl.hamiltonian.shape[0]
    ident = np.eye(dim, dtype=complex).reshape(-1, order="F")
    identity_residual = float(np.linalg.norm(Ldag @ ident))
    if identity_residual > 1e-10 * dim:
        raise IdentityNotAnnihilated(
            f"L^dag(I) has norm {identity_residual:.3e}; convention bug"
        )

    spectrum = eig_general(H_eff_mat)
    E = spectrum.eigenvalues
    psi_l = spectrum.left
    P = data.Pmat
    S_ss = solve_steady_sylvester(H_eff_mat, spec.Gamma)

    cdag_c = [[fl.annihilators[a].conj().T @ fl.annihilators[b]
               for b in range(fl.L)] for a in range(fl.L)]

    max_mode = 0.0
    max_sandwich = 0.0
    npairs = 0
    for al in range(fl.L):
        for be in range(fl.L):
            gap = E[be] - E[al].conj()
            coeff = np.outer(psi_l[:, al], psi_l[:, be].conj())
            s_ab = -1j * np.einsum("a,ab,b->", psi_l[:, al], P, psi_l[:, be].conj()) / gap
            sandwich = psi_l[:, be].conj() @ S_ss @ psi_l[:, al]
            max_sandwich = max(max_sandwich, abs(s_ab - sandwich))

            op = np.zeros((dim, dim), dtype=complex)
            for a in range(fl.L):
                for b in range(fl.L):
                    op += coeff[a, b] * cdag_c[a][b]
            op -= s_ab * np.eye(dim)
            vec = op.reshape(-1, order="F")
            resid = np.linalg.norm(Ldag @ vec - (-1j) * gap * vec)
            max_mode = max(max_mode, float(resid / max(np.linalg.norm(vec), 1e-300)))
            npairs += 1

    return ThirdQuantizationReport(npairs, identity_residual, max_mode, float(max_sandwich))
