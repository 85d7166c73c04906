"""Compiled inner loops: risk evaluation on sorted atoms and assortment search.

Criteria are passed as an integer code plus a small parameter vector so that
one compiled function serves every kind. Atom arrays must be sorted ascending
by payoff; zero-mass atoms are allowed and have no effect.
"""

import numpy as np
from numba import njit

VAR = 0
CVAR = 1
MOMENT = 2
ENTROPY = 3
BTSV = 4
NEGVAR = 5
MEANVAR = 6
SHARPE = 7
SORTINO = 8
# first moment, split out of MOMENT for a faster scan
MEAN = 9

# cumulative-mass slack for the VaR crossing test (float drift in mass sums)
VAR_SLACK = 1e-12


@njit(cache=True, error_model="numpy")
def _mean(xs, ms, n):
    s = 0.0
    for i in range(n):
        s += xs[i] * ms[i]
    return s


@njit(cache=True, error_model="numpy")
def _variance(xs, ms, n):
    mu = _mean(xs, ms, n)
    s = 0.0
    for i in range(n):
        d = xs[i] - mu
        s += ms[i] * d * d
    return s


@njit(cache=True, error_model="numpy")
def _semivariance(xs, ms, n, target):
    s = 0.0
    for i in range(n):
        if xs[i] <= target:
            d = xs[i] - target
            s += ms[i] * d * d
    return s


@njit(cache=True, error_model="numpy")
def _cvar(xs, ms, n, alpha):
    below = 0.0
    acc = 0.0
    for i in range(n):
        take = min(ms[i], alpha - below)
        if take <= 0.0:
            break
        acc += xs[i] * take
        below += ms[i]
    return acc / alpha


@njit(cache=True, error_model="numpy")
def _var(xs, ms, n, alpha):
    cum = 0.0
    for i in range(n):
        cum += ms[i]
        if ms[i] > 0.0 and cum >= alpha - VAR_SLACK:
            return xs[i]
    return xs[n - 1]


@njit(cache=True, error_model="numpy")
def _moment(xs, ms, n, p):
    s = 0.0
    for i in range(n):
        x = 1.0
        for _ in range(p):
            x *= xs[i]
        s += ms[i] * x
    return s


@njit(cache=True, error_model="numpy")
def _entropy(xs, ms, n, theta):
    # shift by the smallest supported payoff to keep exp() in range
    lo = 1.0
    for i in range(n):
        if ms[i] > 0.0 and xs[i] < lo:
            lo = xs[i]
    s = 0.0
    for i in range(n):
        s += ms[i] * np.exp(-theta * (xs[i] - lo))
    return lo - np.log(s) / theta


# uniform (xs, ms, n, params) signature, one per criterion kind


@njit(cache=True, error_model="numpy")
def _u_var(xs, ms, n, params):
    return _var(xs, ms, n, params[0])


@njit(cache=True, error_model="numpy")
def _u_cvar(xs, ms, n, params):
    return _cvar(xs, ms, n, params[0])


@njit(cache=True, error_model="numpy")
def _u_mean(xs, ms, n, params):
    return _mean(xs, ms, n)


@njit(cache=True, error_model="numpy")
def _u_moment(xs, ms, n, params):
    p = int(params[0])
    if p == 1:
        return _mean(xs, ms, n)
    return _moment(xs, ms, n, p)


@njit(cache=True, error_model="numpy")
def _u_entropy(xs, ms, n, params):
    return _entropy(xs, ms, n, params[0])


@njit(cache=True, error_model="numpy")
def _u_btsv(xs, ms, n, params):
    return -_semivariance(xs, ms, n, params[0])


@njit(cache=True, error_model="numpy")
def _u_negvar(xs, ms, n, params):
    return -_variance(xs, ms, n)


@njit(cache=True, error_model="numpy")
def _u_meanvar(xs, ms, n, params):
    return _mean(xs, ms, n) - params[0] * _variance(xs, ms, n)


@njit(cache=True, error_model="numpy")
def _u_sharpe(xs, ms, n, params):
    return (_mean(xs, ms, n) - params[0]) / np.sqrt(params[1] + _variance(xs, ms, n))


@njit(cache=True, error_model="numpy")
def _u_sortino(xs, ms, n, params):
    target = params[0]
    return (_mean(xs, ms, n) - target) / np.sqrt(params[1] + _semivariance(xs, ms, n, target))


@njit(cache=True, error_model="numpy")
def evaluate_atoms(kind, params, xs, ms, n):
    """Criterion value on the first ``n`` atoms of ``xs``/``ms``."""
    if kind == CVAR:
        return _u_cvar(xs, ms, n, params)
    if kind == VAR:
        return _u_var(xs, ms, n, params)
    if kind == MOMENT:
        return _u_moment(xs, ms, n, params)
    if kind == ENTROPY:
        return _u_entropy(xs, ms, n, params)
    if kind == BTSV:
        return _u_btsv(xs, ms, n, params)
    if kind == NEGVAR:
        return _u_negvar(xs, ms, n, params)
    if kind == MEANVAR:
        return _u_meanvar(xs, ms, n, params)
    if kind == SHARPE:
        return _u_sharpe(xs, ms, n, params)
    if kind == SORTINO:
        return _u_sortino(xs, ms, n, params)
    if kind == MEAN:
        return _u_mean(xs, ms, n, params)
    return np.nan


@njit(cache=True, error_model="numpy")
def evaluate_sorted(kind, params, xs, ms):
    return evaluate_atoms(kind, params, xs, ms, xs.shape[0])


@njit(cache=True, error_model="numpy")
def _fill_sorted(idx, k, v, r, xs, ms):
    """MNL outcome atoms of products idx[:k] (insertion-sorted by payoff)."""
    den = 1.0
    for j in range(k):
        den += v[idx[j]]
    inv = 1.0 / den
    xs[0] = 0.0
    ms[0] = inv
    for j in range(k):
        x = r[idx[j]]
        m = v[idx[j]] * inv
        p = j + 1
        while p > 1 and xs[p - 1] > x:
            xs[p] = xs[p - 1]
            ms[p] = ms[p - 1]
            p -= 1
        xs[p] = x
        ms[p] = m


@njit(cache=True, error_model="numpy")
def evaluate_assortment(kind, params, v, r, idx):
    k = idx.shape[0]
    xs = np.empty(k + 1)
    ms = np.empty(k + 1)
    _fill_sorted(idx, k, v, r, xs, ms)
    return evaluate_atoms(kind, params, xs, ms, k + 1)


def _make_scanner(evaluate):
    # the criterion is bound at compile time; dispatching per row costs ~3x
    @njit(error_model="numpy")
    def scan(params, v, r, members, sizes, tol):
        kmax = members.shape[1]
        xs = np.empty(kmax + 1)
        ms = np.empty(kmax + 1)
        best = -np.inf
        best_row = -1
        for row in range(members.shape[0]):
            k = sizes[row]
            den = 1.0
            for j in range(k):
                den += v[members[row, j]]
            inv = 1.0 / den
            xs[0] = 0.0
            ms[0] = inv
            for j in range(k):
                xs[j + 1] = r[members[row, j]]
                ms[j + 1] = v[members[row, j]] * inv
            val = evaluate(xs, ms, k + 1, params)
            if val > best + tol:
                best = val
                best_row = row
        return best_row, best

    return scan


_SCANNERS = {
    VAR: _make_scanner(_u_var),
    CVAR: _make_scanner(_u_cvar),
    MOMENT: _make_scanner(_u_moment),
    ENTROPY: _make_scanner(_u_entropy),
    BTSV: _make_scanner(_u_btsv),
    NEGVAR: _make_scanner(_u_negvar),
    MEANVAR: _make_scanner(_u_meanvar),
    SHARPE: _make_scanner(_u_sharpe),
    SORTINO: _make_scanner(_u_sortino),
    MEAN: _make_scanner(_u_mean),
}


def best_subset(kind, params, v, r, members, sizes, tol):
    """Scan an enumeration table; return (row, value) of the first maximiser.

    ``members`` rows index into ``v``/``r``, which must be ordered so that
    every row lists products by non-decreasing payoff. A later row replaces
    the incumbent only if better by more than ``tol``, so row order decides
    ties.
    """
    return _SCANNERS[kind](params, v, r, members, sizes, tol)


@njit(cache=True, error_model="numpy")
def best_neighbor(kind, params, v, r, current, limit, current_value, tol):
    """Steepest-ascent step over add / delete / swap moves.

    ``current`` holds 0-based product indices in ascending order. Returns
    (move, a, b, value, evaluations); move is 0 none, 1 add a, 2 delete a,
    3 swap a out for b.
    """
    n = v.shape[0]
    k = current.shape[0]
    inside = np.zeros(n, dtype=np.bool_)
    for j in range(k):
        inside[current[j]] = True
    best = current_value + tol
    move = 0
    best_a = -1
    best_b = -1
    evals = 0
    cand = np.empty(k + 1, dtype=np.int64)
    xs = np.empty(k + 2)
    ms = np.empty(k + 2)
    if k < limit:
        for a in range(n):
            if inside[a]:
                continue
            for j in range(k):
                cand[j] = current[j]
            cand[k] = a
            _fill_sorted(cand, k + 1, v, r, xs, ms)
            val = evaluate_atoms(kind, params, xs, ms, k + 2)
            evals += 1
            if val > best:
                best = val
                move = 1
                best_a = a
    for d in range(k):
        p = 0
        for j in range(k):
            if j != d:
                cand[p] = current[j]
                p += 1
        _fill_sorted(cand, k - 1, v, r, xs, ms)
        val = evaluate_atoms(kind, params, xs, ms, k)
        evals += 1
        if val > best:
            best = val
            move = 2
            best_a = current[d]
    for d in range(k):
        for b in range(n):
            if inside[b]:
                continue
            for j in range(k):
                cand[j] = current[j]
            cand[d] = b
            _fill_sorted(cand, k, v, r, xs, ms)
            val = evaluate_atoms(kind, params, xs, ms, k + 1)
            evals += 1
            if val > best:
                best = val
                move = 3
                best_a = current[d]
                best_b = b
    return move, best_a, best_b, best, evals


# ---------------------------------------------------------------------------
# environment and agent inner loops


@njit(cache=True, error_model="numpy")
def choice_table(idx, v):
    """Cumulative choice probabilities ordered as (no purchase, *idx)."""
    k = idx.shape[0]
    cum = np.empty(k + 1)
    den = 1.0
    for j in range(k):
        den += v[idx[j]]
    acc = 1.0 / den
    cum[0] = acc
    for j in range(k):
        acc += v[idx[j]] / den
        cum[j + 1] = acc
    return cum


@njit(cache=True, error_model="numpy")
def serve(cum, u, out, start):
    """Map uniforms to choice positions into ``out[start:]``.

    Position 0 is no purchase, p > 0 is the p-th served product. Stops after
    the first 0; returns the number of positions written and whether a 0 was
    met.
    """
    last = cum.shape[0] - 1
    for t in range(u.shape[0]):
        j = 0
        while j < last and cum[j] <= u[t]:
            j += 1
        out[start + t] = j
        if j == 0:
            return t + 1, True
    return u.shape[0], False


@njit(cache=True, error_model="numpy")
def ucb_params(purchases, served, log_term):
    n = served.shape[0]
    out = np.empty(n)
    for i in range(n):
        if served[i] == 0:
            out[i] = 1.0
            continue
        vbar = purchases[i] / served[i]
        bonus = log_term / served[i]
        out[i] = min(vbar + np.sqrt(vbar * bonus) + bonus, 1.0)
    return out


@njit(cache=True, error_model="numpy")
def ts_params(purchases, served, theta, var_scale, log_term):
    n = served.shape[0]
    out = np.empty(n)
    for i in range(n):
        vbar = purchases[i] / served[i]
        sigma = np.sqrt(var_scale * vbar * (vbar + 1.0) / served[i]) + log_term / served[i]
        best = -np.inf
        for j in range(theta.shape[0]):
            mu = vbar + theta[j] * sigma
            if mu > best:
                best = mu
        out[i] = min(max(best, 0.0), 1.0)
    return out
