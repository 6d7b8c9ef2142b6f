"""Log-domain steady-state occupations of the strongly non-reciprocal chain.

The Bartels-Stewart steady-state solve breaks down once the gauge prefactors
exp(L/xi_loc) approach the double-precision range (empirically near
(L-1)/xi_loc ~ 650): the Schur factors degrade and even the largest entries of
the solution come out wrong.  This module assembles

    n_ss(m) = 2 Gamma sum_j int_0^inf |G(m, j; t)|^2 dt

directly from the open-chain image expansion
G = e^{(m-j)/xi - Delta t} [G_inf(m-j) - G_inf(m+j) + right-wall images],
keeping every exponentially scaled factor in log space.  The Bessel factors
for all orders and all quadrature times come from one vectorized backward
(Miller) recurrence.
"""

from __future__ import annotations

import numpy as np

from .models import Kind, derived_scales

_RESCALE = 1e250
_LOG_RESCALE = np.log(_RESCALE)


def bessel_j_log_table(n_max, x_grid):
    """(log|J_n(x)|, sign) for all orders n = 0..n_max over an x grid.

    One backward Miller sweep per column, vectorized over the grid, with
    per-column rescaling; no overflow or underflow for any order.
    """
    x = np.asarray(x_grid, dtype=float)
    nx = len(x)
    mm = max(n_max, int(np.max(x)) if nx else 0)
    m_start = mm + int(np.sqrt(160.0 * (mm + 1))) + 24
    m_start += m_start % 2

    log_table = np.full((n_max + 1, nx), -np.inf)
    sign_table = np.ones((n_max + 1, nx))

    pos = x > 0.0
    xp = x[pos]
    npos = len(xp)
    if npos:
        bjp = np.zeros(npos)
        bj = np.full(npos, 1e-30)
        scale = np.zeros(npos)  # accumulated log-rescale
        norm = np.zeros(npos)
        store_log = np.full((n_max + 1, npos), -np.inf)
        store_sign = np.ones((n_max + 1, npos))
        store_scale = np.zeros((n_max + 1, npos))
        for k in range(m_start, 0, -1):
            bjm = (2.0 * k / xp) * bj - bjp
            bjp = bj
            bj = bjm
            big = np.abs(bj) > _RESCALE
            if np.any(big):
                bj[big] /= _RESCALE
                bjp[big] /= _RESCALE
                norm[big] /= _RESCALE
                scale[big] += _LOG_RESCALE
            n = k - 1
            if n % 2 == 0 and n > 0:
                norm += 2.0 * bj
            if n <= n_max:
                nz = bj != 0.0
                store_log[n, nz] = np.log(np.abs(bj[nz]))
                store_sign[n, :] = np.where(nz, np.sign(bj), 1.0)
                store_scale[n, :] = scale
        norm += bj  # J_0 term
        log_norm = np.log(np.abs(norm))
        sign_norm = np.sign(norm)
        log_table[:, pos] = store_log - log_norm[None, :] + (store_scale - scale[None, :])
        sign_table[:, pos] = store_sign * sign_norm[None, :]

    # x = 0 columns: J_0 = 1, higher orders vanish
    zero = ~pos
    if np.any(zero):
        log_table[0, zero] = 0.0
    return log_table, sign_table


def _simpson_weights(n_points, h):
    if n_points % 2 == 0:
        raise ValueError("Simpson needs an odd number of points")
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def hn_steady_occupations_log(spec, sites=None):
    """log n_ss(m) for the requested 1-based sites (default: all).

    Exact to quadrature accuracy at any chain length and non-reciprocity;
    complements the Sylvester route where that one runs out of dynamic range.
    """
    if spec.kind is not Kind.HN or spec.L < 2 or spec.kappa >= spec.w:
        raise ValueError("log-domain steady state applies to the kappa < w chain")
    if spec.Gamma == 0.0:
        raise ValueError("no pump: steady state is empty")
    L = spec.L
    sc = derived_scales(spec)
    inv_xi = 0.0 if np.isinf(sc.xi_loc) else 1.0 / sc.xi_loc
    Delta, J = sc.Delta, sc.J
    sites = range(1, L + 1) if sites is None else sites

    t_max = (2.0 * L + 60.0) / Delta
    dt = 0.05 / Delta
    n_pts = int(np.ceil(t_max / dt))
    n_pts += n_pts % 2  # even interval count
    t = np.arange(n_pts + 1) * dt
    weights = _simpson_weights(n_pts + 1, dt)
    decay = -2.0 * Delta * t

    n_max = 2 * (L + 1)
    logJt, signJt = bessel_j_log_table(n_max, J * t)

    period = 2 * (L + 1)
    j_all = np.arange(1, L + 1)
    image_signs = (+1.0, -1.0, -1.0, +1.0)
    out = {}
    for m in sites:
        # image orders for every source j: main, left wall, right wall x2
        order_list = [np.abs(m - j_all), m + j_all,
                      period - (m + j_all), period - (m - j_all)]

        def logs_of(orders):
            # orders beyond the table (only possible for sources past the
            # probe) are at least 2L+2 Bessel orders down: drop them
            safe = np.minimum(orders, n_max)
            lg = logJt[safe, :].copy()
            lg[orders > n_max, :] = -np.inf
            return lg

        ref = logs_of(order_list[0])
        for orders in order_list[1:]:
            np.maximum(ref, logs_of(orders), out=ref)
        ok = ref > -np.inf
        amp = np.zeros(ref.shape, dtype=complex)
        for sgn, orders in zip(image_signs, order_list):
            phase = (sgn * (-1j) ** (orders % 4))[:, None] * signJt[np.minimum(orders, n_max), :]
            term = np.zeros(ref.shape)
            term[ok] = np.exp(logs_of(orders)[ok] - ref[ok])
            amp += phase * term
        log_g2 = np.full(ref.shape, -np.inf)
        mag = np.abs(amp)
        nz = ok & (mag > 0.0)
        log_g2[nz] = 2.0 * (ref[nz] + np.log(mag[nz]))
        log_f = log_g2 + decay[None, :]             # (n_sources, T) integrand logs

        peak = np.max(log_f, axis=1)
        integ_log = np.full(L, -np.inf)
        has = peak > -np.inf
        integ_log[has] = peak[has] + np.log(
            np.exp(log_f[has] - peak[has, None]) @ weights
        )
        contrib = np.log(2.0 * spec.Gamma) + 2.0 * (m - j_all) * inv_xi + integ_log
        top = np.max(contrib)
        out[m] = float(top + np.log(np.sum(np.exp(contrib - top))))
    return out


def steady_occupations(spec, sites=None):
    """Steady occupations (1-based ``sites``, default all) by the most
    reliable route for the regime.

    Moderate amplification: Sylvester solve (dynamics.steady_state).  Strong
    amplification on the nearest-neighbour chain: the log-domain image
    integral above.  Returns a float array over the requested sites (may
    contain inf if a bosonic occupation exceeds the double range).
    """
    from .dynamics import steady_state

    site_list = list(range(1, spec.n_sites + 1)) if sites is None else list(sites)
    if spec.kind is Kind.HN and spec.L >= 2 and spec.kappa < spec.w:
        sc = derived_scales(spec)
        if not np.isinf(sc.xi_loc) and (spec.L - 1) / sc.xi_loc > 300.0:
            logs = hn_steady_occupations_log(spec, sites=site_list)
            with np.errstate(over="ignore"):
                return np.exp(np.array([logs[m] for m in site_list]))
    diag = steady_state(spec).diagonal().real
    return np.array([diag[m - 1] for m in site_list])
