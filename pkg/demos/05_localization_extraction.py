"""Numerically extract localization lengths from characteristic polynomials.

For any of the chains, inserting an eigenvalue E into the plane-wave ansatz
gives a low-degree polynomial whose root moduli are the local decay rates of
the eigenvector components.  On the nearest-neighbour chain this reproduces
the closed-form skin depth to machine precision; on the two-band chain the
boundary modes give back the two analytic lengths; the next-nearest model has
no closed form at all, so this is the only route."""

import numpy as np

from nhrelax import analysis, models
from nhrelax.models import ModelSpec

print("nearest-neighbour chain, kappa = 0.999, L = 40:")
spec = ModelSpec("HN", "fermion", 40, w=1.0, kappa=0.999, Gamma=0.05)
sc = models.derived_scales(spec)
errs = [abs(analysis.localization_extract(spec, E).xi_extracted - sc.xi_loc)
        for E in models.reference_eigenvalues(spec)]
print(f"  extracted xi over all 40 eigenvalues: {sc.xi_loc:.9f} "
      f"+- {max(errs):.1e} (analytic {sc.xi_loc:.9f})")

print("\ntwo-band chain in the topological phase (boundary modes present):")
ssh = ModelSpec("SSH", "fermion", 16, w=0.4, kappa=0.2, Gamma=0.1,
                u=1.0, gamma_ssh=0.5)
sc_ssh = models.derived_scales(ssh)
evals = models.reference_eigenvalues(ssh)
E0 = evals[np.argmin(np.abs(evals + 1j * sc_ssh.Delta))]
rep = analysis.localization_extract(ssh, E0)
print(f"  boundary-mode exponents (per cell): {np.sort(rep.exponents)}")
print(f"  extracted xi = {rep.xi_extracted:.9f} vs min(xi1, xi2) = "
      f"{min(sc_ssh.xi1, sc_ssh.xi2):.9f}")

print("\nnext-nearest-neighbour chain (quartic ansatz polynomial):")
nnn = ModelSpec("NNN", "fermion", 30, w=1.0, kappa=0.4, Gamma=0.1,
                T_nnn=0.8, phi=np.pi / 3)
E = models.reference_eigenvalues(nnn)[5]
rep = analysis.localization_extract(nnn, E)
print(f"  at E = {E:.4f}: root moduli {np.round(np.abs(rep.roots), 4)}")
print(f"  exponents {np.round(rep.exponents, 4)} (sum {np.sum(rep.exponents):+.1e}),"
      f" xi = {rep.xi_extracted:.4f}")

print("\nsame model with the next-nearest hop switched off (degree reduction):")
nnn0 = ModelSpec("NNN", "fermion", 30, w=1.0, kappa=0.4, Gamma=0.1,
                 T_nnn=0.0, phi=0.0)
E = models.reference_eigenvalues(nnn0)[5]
rep = analysis.localization_extract(nnn0, E)
hn_sc = models.derived_scales(ModelSpec("HN", "fermion", 30, w=1.0, kappa=0.4,
                                        Gamma=0.1))
print(f"  quartic degenerates to {len(rep.roots)} roots; "
      f"xi = {rep.xi_extracted:.9f} (chain value {hn_sc.xi_loc:.9f})")
