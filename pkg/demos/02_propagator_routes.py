"""Compute the propagation probability P(m, j; t) by four routes.

The spectral sum is exact in principle but numerically hopeless at strong
non-reciprocity: its terms reach 10^60 and cancel almost perfectly.  The
direct ODE route, the infinite-chain (no-bounce) estimate with its analytic
cancellation, and the image ("bounce") expansion all stay in double range.
The script also measures the peak statistics that control relaxation.
"""

import math

from nhrelax import models, propagator as prop
from nhrelax.errors import CancellationGuard
from nhrelax.models import ModelSpec

spec = ModelSpec("HN", "fermion", 40, w=1.0, kappa=0.999, Gamma=0.05)
H = models.effective_hamiltonian(spec)
sc = models.derived_scales(spec)
j, m = 10, 40
d = m - j

ps = prop.peak_stats(spec, m, j)
print(f"peak of P({m}, {j}; t): t_max = {ps.t_max:.3f} (= d/Delta = {d / sc.Delta:.3f})")
print(f"  height       = exp({ps.height_log:.4f})")
print(f"  width        = {ps.width_fitted:.4f} vs sqrt(d)/Delta = {ps.sigma:.4f}")
print(f"  implied xi_prop from d -> d+1 heights: {ps.xi_prop_implied:.3f} "
      f"(formula: {sc.xi_prop:.3f})")

t = ps.t_max
g_direct = prop.direct_column(H, j, [0.0, t])[-1][m - 1]
logp_nb = prop.p_no_bounce_log(spec, m, j, t)
bounce = prop.g_obc_bounce(m, j, t, spec)

print(f"\nroutes at t = t_max:")
print(f"  direct       log P = {2 * math.log(abs(g_direct)):+.6f}")
print(f"  no_bounce    log P = {logp_nb:+.6f}   "
      f"(bare estimate; off by the wall image, ~{abs(math.exp(logp_nb) / abs(g_direct)**2 - 1):.1e})")
print(f"  bounce_sum   log P = {2 * bounce.log_abs_g:+.6f}   "
      f"(images restore {abs(math.exp(2 * bounce.log_abs_g) / abs(g_direct)**2 - 1):.1e})")
try:
    prop.propagate_spectral(models.hn_spectral_analytic(spec), m, j, t)
except CancellationGuard as exc:
    print(f"  spectral     refused: {exc}")

print("\nshort-time locality: |G| ~ t^d")
for dist in (1, 3):
    rep = prop.locality_order_check(H, j + dist, j, [0.004, 0.008, 0.016, 0.032])
    print(f"  d = {dist}: fitted exponent {rep.slope:.3f}")

print("\nboson vs fermion peak heights (kappa = w closed form):")
for stats in ("boson", "fermion"):
    s = ModelSpec("HN", stats, 41, w=1.0, kappa=1.0, Gamma=0.05)
    hs = [prop.peak_stats(s, 41, 41 - dd).height_log for dd in (10, 20, 30)]
    trend = "grow" if hs[0] < hs[-1] else "shrink"
    print(f"  {stats:8s}: log heights at d = 10, 20, 30: "
          + ", ".join(f"{h:+.2f}" for h in hs) + f"  ({trend} with distance)")
