"""Lattice model construction.

Three dissipative non-reciprocal models are supported:

* ``HN``  -- nearest-neighbour non-reciprocal chain with uniform local loss
  and incoherent pump, built either directly or from its explicit jump
  operators (correlated two-site loss, local loss, local pump).
* ``SSH`` -- two-band chain with non-Hermitian modifications of both the
  intra- and inter-cell hoppings.
* ``NNN`` -- non-reciprocal chain with an additional complex next-nearest
  hopping.

The fermion/boson distinction enters only through one sign: the pump either
adds to (fermions) or subtracts from (bosons) the uniform decay rate of the
effective Hamiltonian.  Upper sign = fermions throughout.
"""

from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .errors import (
    BosonUnstable,
    InvalidStatisticsSign,
    PerfectNonreciprocity,
    UnsetForModel,
)
from .ndlinalg import LOG_SCALE_LIMIT, Spectrum


class Kind(str, enum.Enum):
    HN = "HN"
    SSH = "SSH"
    NNN = "NNN"


class Statistics(str, enum.Enum):
    FERMION = "fermion"
    BOSON = "boson"

    @property
    def sign(self):
        """+1 for fermions, -1 for bosons (the upper/lower sign convention)."""
        return +1 if self is Statistics.FERMION else -1


_FIELDS = ("kind", "statistics", "L", "w", "kappa", "lambda_loss", "Gamma",
           "u", "gamma_ssh", "T_nnn", "phi")


@dataclasses.dataclass
class ModelSpec:
    """Which lattice, its parameters, particle statistics and size.

    ``L`` counts sites for HN/NNN and unit cells for SSH (2L sites).  The
    SSH-only fields are ``u`` (inter-cell hopping) and ``gamma_ssh`` (its
    non-Hermitian modification); the NNN-only fields are ``T_nnn`` and
    ``phi``.  ``lambda_loss`` is the extra uniform local loss of the HN chain.
    """

    kind: Kind
    statistics: Statistics
    L: int
    w: float = 1.0
    kappa: float = 0.0
    lambda_loss: float = 0.0
    Gamma: float = 0.0
    u: float | None = None
    gamma_ssh: float | None = None
    T_nnn: float | None = None
    phi: float | None = None

    def __post_init__(self):
        self.kind = Kind(self.kind)
        self.statistics = Statistics(self.statistics)
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.w < 0 or self.kappa < 0 or self.lambda_loss < 0 or self.Gamma < 0:
            raise ValueError("w, kappa, lambda_loss, Gamma must be non-negative")
        if self.kind is Kind.HN:
            if self.kappa > self.w:
                raise ValueError("HN requires kappa <= w")
            if any(v is not None for v in (self.u, self.gamma_ssh, self.T_nnn, self.phi)):
                raise ValueError("u/gamma_ssh/T_nnn/phi are not HN parameters")
        elif self.kind is Kind.SSH:
            if self.u is None or self.gamma_ssh is None:
                raise ValueError("SSH requires u and gamma_ssh")
            if self.u < 0 or self.gamma_ssh < 0:
                raise ValueError("u and gamma_ssh must be non-negative")
            if self.kappa >= self.w or self.gamma_ssh >= self.u:
                raise ValueError("SSH requires kappa < w and gamma_ssh < u")
            if self.T_nnn is not None or self.phi is not None:
                raise ValueError("T_nnn/phi are not SSH parameters")
            if self.lambda_loss != 0.0:
                raise ValueError("lambda_loss is HN-only")
        else:
            if self.T_nnn is None or self.phi is None:
                raise ValueError("NNN requires T_nnn and phi")
            if self.u is not None or self.gamma_ssh is not None:
                raise ValueError("u/gamma_ssh are not NNN parameters")
            if self.lambda_loss != 0.0:
                raise ValueError("lambda_loss is HN-only")
        if self.statistics is Statistics.BOSON and self.delta() <= 0.0:
            raise BosonUnstable(
                f"bosonic gap {self.delta():.4g} <= 0 (pump exceeds loss); no steady state"
            )

    def delta(self):
        """Dissipative gap Delta_{f/b} of the uniform onsite decay."""
        s = self.statistics.sign
        if self.kind is Kind.HN:
            if self.L == 1:
                # a single site has no correlated-loss bond, so kappa drops out
                return self.lambda_loss + s * self.Gamma
            return self.kappa + self.lambda_loss + s * self.Gamma
        if self.kind is Kind.SSH:
            return s * self.Gamma + (self.kappa + self.gamma_ssh) / 2.0
        return self.kappa + s * self.Gamma

    @property
    def n_sites(self):
        return 2 * self.L if self.kind is Kind.SSH else self.L

    def to_json(self):
        """Flat JSON object with exactly the ModelSpec field names."""
        out = {}
        for name in _FIELDS:
            val = getattr(self, name)
            if isinstance(val, enum.Enum):
                val = val.value
            out[name] = val
        return out

    @classmethod
    def from_json(cls, obj):
        unknown = set(obj) - set(_FIELDS)
        if unknown:
            raise ValueError(f"unknown ModelSpec fields: {sorted(unknown)}")
        if "kind" not in obj or "statistics" not in obj or "L" not in obj:
            raise ValueError("ModelSpec JSON requires kind, statistics and L")
        return cls(**obj)


@dataclasses.dataclass
class LindbladData:
    """Single-particle matrices (H, L, P) of a quadratic Lindbladian.

    ``H`` is the Hermitian Hamiltonian, ``Lmat``/``Pmat`` the Hermitian PSD
    loss/pump matrices.  The covariance dynamics are generated by
    ``H - (i/2)(Lmat +/- Pmat)`` with the upper sign for fermions.
    """

    H: np.ndarray
    Lmat: np.ndarray
    Pmat: np.ndarray

    def h_eff(self, statistics):
        s = Statistics(statistics).sign
        return self.H - 0.5j * (self.Lmat + s * self.Pmat)


@dataclasses.dataclass
class Scales:
    """Derived length and time scales of a model.

    ``xi_prop`` uses the main-text convention 1/xi = -/+ 2 ln(w/(w +/- Gamma));
    the peak-height formula uses a convention exactly twice as long,
    exposed as ``xi_prop_alt``.  Fields that have no analytic form for the
    model are None and raise UnsetForModel through :meth:`require`.
    """

    J: float | None
    xi_loc: float | None
    Delta: float
    xi_prop: float | None
    tau_evec: float | None
    xi1: float | None = None
    xi2: float | None = None

    @property
    def xi_prop_alt(self):
        if self.xi_prop is None:
            return None
        return 2.0 * self.xi_prop

    def require(self, field):
        val = getattr(self, field)
        if val is None:
            raise UnsetForModel(f"{field} has no analytic value for this model")
        return val


def hn_lambda_vector(spec):
    """Per-site local-loss rates lambda_j of the HN chain.

    The edge sites receive an extra kappa/2 so the total local loss,
    including the single correlated-loss bond an edge touches, is uniformly
    kappa + lambda.  (Each bond contributes kappa/2 of amplitude decay to both
    of its endpoints; interior sites touch two bonds.)
    """
    lam = np.full(spec.L, spec.lambda_loss, dtype=float)
    if spec.L >= 2:
        lam[0] += spec.kappa / 2.0
        lam[-1] += spec.kappa / 2.0
    return lam


def build_hn(spec):
    """Non-reciprocal chain matrix plus its Lindblad data.

    Returns ``(H_hn, LindbladData)`` where ``H_hn`` is tridiagonal with
    down-chain hopping (w+kappa)/2, up-chain hopping (w-kappa)/2 and uniform
    diagonal -i(kappa + lambda +/- Gamma).  The LindbladData is assembled from
    the explicit dissipators (correlated loss on each bond, per-site local
    loss, per-site pump) and checked to reproduce ``H_hn`` through
    H - (i/2)(L +/- P).
    """
    if spec.kind is not Kind.HN:
        raise ValueError("build_hn needs an HN spec")
    if spec.L < 2:
        raise ValueError("build_hn needs L >= 2")
    L, w, kappa = spec.L, spec.w, spec.kappa
    s = spec.statistics.sign

    H_hn = np.zeros((L, L), dtype=complex)
    rng = np.arange(L - 1)
    H_hn[rng + 1, rng] = (w + kappa) / 2.0
    H_hn[rng, rng + 1] = (w - kappa) / 2.0
    H_hn[np.arange(L), np.arange(L)] = -1j * spec.delta()

    H = np.zeros((L, L), dtype=complex)
    H[rng + 1, rng] = w / 2.0
    H[rng, rng + 1] = w / 2.0

    Lmat = np.zeros((L, L), dtype=complex)
    for j in range(L - 1):
        v = np.zeros(L, dtype=complex)
        v[j] = 1.0
        v[j + 1] = -1j
        Lmat += kappa * np.outer(v.conj(), v)
    Lmat[np.arange(L), np.arange(L)] += 2.0 * hn_lambda_vector(spec)
    Pmat = 2.0 * spec.Gamma * np.eye(L, dtype=complex)

    data = LindbladData(H, Lmat, Pmat)
    dev = np.max(np.abs(data.h_eff(spec.statistics) - H_hn))
    if dev > 1e-12 * max(1.0, np.max(np.abs(H_hn))):
        raise InvalidStatisticsSign(
            f"dissipator assembly deviates from the direct construction by {dev:.3e}"
        )
    return H_hn, data


def hn_spectral_analytic(spec):
    """Closed-form spectral data of the open non-reciprocal chain.

    E_alpha = J cos k_alpha - i Delta with k_alpha = alpha*pi/(L+1), and
    sine standing waves dressed by exp(+/- j/xi_loc).  Vectors switch to the
    scaled (log) representation once L/xi_loc > 650.
    """
    if spec.kind is not Kind.HN:
        raise ValueError("hn_spectral_analytic needs an HN spec")
    if spec.kappa >= spec.w:
        raise PerfectNonreciprocity(
            "kappa = w has a Jordan block, no biorthogonal basis; use the closed forms"
        )
    L = spec.L
    sc = derived_scales(spec)
    J = sc.J
    inv_xi = 0.0 if np.isinf(sc.xi_loc) else 1.0 / sc.xi_loc

    alpha = np.arange(1, L + 1)
    k = alpha * np.pi / (L + 1)
    evals = J * np.cos(k) - 1j * spec.delta()
    order = np.lexsort((evals.imag, evals.real))
    evals = evals[order]
    k = k[order]

    j_sites = np.arange(1, L + 1)
    vecs = np.sqrt(2.0 / (L + 1)) * np.sin(np.outer(j_sites, k)).astype(complex)
    biorth = float(np.max(np.abs(vecs.T @ vecs - np.eye(L))))
    scale = j_sites * inv_xi

    if scale[-1] > LOG_SCALE_LIMIT:
        return Spectrum(evals, vecs, vecs.copy(), biorth, 0.0, row_log_scale=scale)
    d = np.exp(scale)
    return Spectrum(evals, d[:, None] * vecs, (1.0 / d)[:, None] * vecs, biorth, 0.0)


def build_ssh(spec):
    """Two-band non-reciprocal chain on 2L sites (A site first, B site last).

    Intra-cell hops (w -/+ kappa)/2, inter-cell hops (u -/+ gamma)/2 with the
    stronger amplitude directed down-chain; hops crossing the open boundary
    are dropped and the onsite decay -i(+/- Gamma + (kappa+gamma)/2) is
    uniform including the edges.
    """
    if spec.kind is not Kind.SSH:
        raise ValueError("build_ssh needs an SSH spec")
    if spec.L < 2:
        raise ValueError("build_ssh needs L >= 2 unit cells")
    L, w, kappa = spec.L, spec.w, spec.kappa
    u, gam = spec.u, spec.gamma_ssh
    n = 2 * L
    H = np.zeros((n, n), dtype=complex)
    for cell in range(L):
        a, b = 2 * cell, 2 * cell + 1
        H[b, a] = (w + kappa) / 2.0
        H[a, b] = (w - kappa) / 2.0
        if cell + 1 < L:
            H[b + 1, b] = (u + gam) / 2.0
            H[b, b + 1] = (u - gam) / 2.0
    H[np.arange(n), np.arange(n)] = -1j * spec.delta()
    return H


def build_nnn(spec):
    """Non-reciprocal chain with a complex next-nearest hopping (T/2) e^{+/- i phi}."""
    if spec.kind is not Kind.NNN:
        raise ValueError("build_nnn needs an NNN spec")
    if spec.L < 3:
        raise ValueError("build_nnn needs L >= 3")
    L, w, kappa = spec.L, spec.w, spec.kappa
    T, phi = spec.T_nnn, spec.phi
    H = np.zeros((L, L), dtype=complex)
    rng = np.arange(L - 1)
    H[rng + 1, rng] = (w + kappa) / 2.0
    H[rng, rng + 1] = (w - kappa) / 2.0
    rng2 = np.arange(L - 2)
    H[rng2 + 2, rng2] = (T / 2.0) * np.exp(1j * phi)
    H[rng2, rng2 + 2] = (T / 2.0) * np.exp(-1j * phi)
    H[np.arange(L), np.arange(L)] = -1j * spec.delta()
    return H


def effective_hamiltonian(spec):
    """The model's covariance-dynamics generator matrix."""
    if spec.kind is Kind.HN:
        if spec.L == 1:
            return np.array([[-1j * spec.delta()]], dtype=complex)
        return build_hn(spec)[0]
    if spec.kind is Kind.SSH:
        return build_ssh(spec)
    return build_nnn(spec)


def reference_eigenvalues(spec):
    """The most trustworthy spectrum available for the model.

    Strongly non-reciprocal chains are catastrophically non-normal: plain
    dense diagonalization returns pseudospectral clouds, including spurious
    unstable eigenvalues.  HN (and NNN at T = 0) has the closed form; SSH is
    diagonalized exactly through its Hermitian gauge (alternating-bond
    balance), which shows its spectrum has uniform imaginary part -Delta.
    Only the genuine NNN model falls back to dense diagonalization (on the
    nearest-neighbour-balanced gauge), with accuracy degrading at strong
    non-reciprocity.
    """
    import scipy.linalg

    Delta = spec.delta()
    if spec.kind is Kind.HN or (spec.kind is Kind.NNN and spec.T_nnn == 0.0):
        if spec.L == 1:
            return np.array([-1j * Delta])
        if spec.kappa == spec.w:  # Jordan block: the spectrum collapses
            return np.full(spec.L, -1j * Delta, dtype=complex)
        J = np.sqrt((spec.w + spec.kappa) * (spec.w - spec.kappa))
        k = np.arange(1, spec.L + 1) * np.pi / (spec.L + 1)
        evals = J * np.cos(k) - 1j * Delta
        order = np.lexsort((evals.imag, evals.real))
        return evals[order]
    if spec.kind is Kind.SSH:
        Jw = np.sqrt((spec.w + spec.kappa) * (spec.w - spec.kappa))
        Ju = np.sqrt((spec.u + spec.gamma_ssh) * (spec.u - spec.gamma_ssh))
        off = np.empty(2 * spec.L - 1)
        off[0::2] = Jw / 2.0
        off[1::2] = Ju / 2.0
        vals = scipy.linalg.eigvalsh_tridiagonal(np.zeros(2 * spec.L), off)
        evals = vals.astype(complex) - 1j * Delta
        order = np.lexsort((evals.imag, evals.real))
        return evals[order]
    # NNN: balance the nearest-neighbour hops, then diagonalize densely
    H = build_nnn(spec)
    s = 0.5 * np.log((spec.w + spec.kappa) / (spec.w - spec.kappa)) if spec.kappa < spec.w else 0.0
    d = np.exp(-s * np.arange(spec.L))
    Hb = (d[:, None] * H) * (1.0 / d)[None, :]
    evals = np.linalg.eigvals(Hb)
    order = np.lexsort((evals.imag, evals.real))
    return evals[order]


def derived_scales(spec):
    """Renormalized hopping, localization length, gap, propagation length, EVec time.

    For SSH the localization length is min(xi_1, xi_2) of the two boundary
    modes and the EVec time counts unit cells; the propagation length has no
    analytic form there (extract it from peak heights instead).  For NNN only
    the gap is analytic.
    """
    Delta = spec.delta()
    if spec.kind is Kind.HN:
        w, kappa, G = spec.w, spec.kappa, spec.Gamma
        J = float(np.sqrt((w + kappa) * (w - kappa)))
        if kappa == 0.0:
            xi_loc = np.inf
        elif kappa == w:  # perfect non-reciprocity: fully collapsed eigenvectors
            xi_loc = 0.0
        else:
            xi_loc = 1.0 / np.log(np.sqrt((w + kappa) / (w - kappa)))
        if G == 0.0:
            xi_prop = np.inf
        elif spec.statistics is Statistics.FERMION:
            xi_prop = 1.0 / (2.0 * np.log((w + G) / w))
        else:
            xi_prop = 1.0 / (2.0 * np.log(w / (w - G)))
        tau_evec = np.inf if xi_loc == 0.0 else spec.L / (xi_loc * Delta)
        return Scales(J, xi_loc, Delta, xi_prop, tau_evec)
    if spec.kind is Kind.SSH:
        w, kappa, u, gam = spec.w, spec.kappa, spec.u, spec.gamma_ssh
        xi1 = 1.0 / np.log((u + gam) / (w - kappa))
        xi2 = 1.0 / np.log((w + kappa) / (u - gam))
        xi_min = min(xi1, xi2)
        tau_evec = spec.L / (xi_min * Delta)  # L in unit cells
        return Scales(None, xi_min, Delta, None, tau_evec, xi1=xi1, xi2=xi2)
    return Scales(None, None, Delta, None, None)
