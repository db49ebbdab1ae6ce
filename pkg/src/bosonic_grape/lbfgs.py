"""Limited-memory BFGS with a strong-Wolfe line search.

Follows the two-loop recursion and the bracketing/zoom line search of
Nocedal & Wright, *Numerical Optimization* (2nd ed.), Algorithms 7.4, 3.5
and 3.6.  Non-finite trial values are treated as overshoots.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass
class LBFGSResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    n_eval: int
    converged: bool
    message: str
    trace: list[float] = field(default_factory=list)


class _Counter:
    def __init__(self, fg: FunGrad):
        self.fg = fg
        self.n = 0

    def __call__(self, x):
        self.n += 1
        f, g = self.fg(x)
        return float(f), np.asarray(g, dtype=float)


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic interpolant on ``[a, b]``, or ``None``."""
    d1 = ga + gb - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0 or not np.isfinite(disc):
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = gb - ga + 2 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (gb + d2 - d1) / denom
    return t if np.isfinite(t) else None


def strong_wolfe(fg, x, f0, g0, p, alpha0, c1=1e-4, c2=0.9, max_evals=30):
    """Return ``(alpha, f, g)`` satisfying the strong Wolfe conditions, or ``None``."""
    dphi0 = float(g0 @ p)
    if dphi0 >= 0:
        return None
    a_prev, f_prev, d_prev = 0.0, f0, dphi0
    alpha = alpha0
    best = None
    evals = 0

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        nonlocal evals, best
        while evals < max_evals:
            t = None
            if np.isfinite(f_hi) and np.isfinite(d_hi):
                t = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            lo_, hi_ = min(lo, hi), max(lo, hi)
            width = hi_ - lo_
            if t is None or t < lo_ + 0.1 * width or t > hi_ - 0.1 * width:
                t = 0.5 * (lo + hi)
            f, g = fg(x + t * p)
            evals += 1
            d = float(g @ p) if np.all(np.isfinite(g)) else np.nan
            if np.isfinite(f) and f < f0 and (best is None or f < best[1]):
                best = (t, f, g)
            if not np.isfinite(f) or f > f0 + c1 * t * dphi0 or f >= f_lo:
                hi, f_hi, d_hi = t, f, d
            else:
                if abs(d) <= -c2 * dphi0:
                    return t, f, g
                if d * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = t, f, d
            if abs(hi - lo) < 1e-16 * max(1.0, abs(lo)):
                break
        return best

    first = True
    while evals < max_evals:
        f, g = fg(x + alpha * p)
        evals += 1
        d = float(g @ p) if np.all(np.isfinite(g)) else np.nan
        if np.isfinite(f) and f < f0 and (best is None or f < best[1]):
            best = (alpha, f, g)
        if not np.isfinite(f) or not np.isfinite(d) or f > f0 + c1 * alpha * dphi0 or (not first and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, alpha, f, d)
        if abs(d) <= -c2 * dphi0:
            return alpha, f, g
        if d >= 0:
            return zoom(alpha, f, d, a_prev, f_prev, d_prev)
        a_prev, f_prev, d_prev = alpha, f, d
        alpha *= 2.0
        first = False
    return best


def minimize_lbfgs(
    fun_grad: FunGrad,
    x0: np.ndarray,
    history: int = 10,
    max_iter: int = 2000,
    gtol: float = 1e-9,
    ftol: float = 0.0,
    callback: Callable[[int, np.ndarray, float, np.ndarray], bool] | None = None,
) -> LBFGSResult:
    """Minimize ``fun_grad``.

    ``callback(iteration, x, f, g)`` runs after every accepted step (and once
    on the initial point as iteration 0); returning ``True`` stops the run as
    converged.
    """
    fg = _Counter(fun_grad)
    x = np.array(x0, dtype=float)
    f, g = fg(x)
    if not np.isfinite(f):
        raise FloatingPointError("initial cost is not finite")
    trace = [f]
    s_hist: deque = deque(maxlen=history)
    y_hist: deque = deque(maxlen=history)
    rho_hist: deque = deque(maxlen=history)

    def done(it, msg, conv):
        return LBFGSResult(x, f, g, it, fg.n, conv, msg, trace)

    if callback is not None and callback(0, x, f, g):
        return done(0, "callback target reached", True)
    if np.max(np.abs(g)) < gtol:
        return done(0, "gradient tolerance met", True)

    for it in range(1, max_iter + 1):
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(list(zip(s_hist, y_hist, rho_hist))):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if s_hist:
            gamma = (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
        else:
            gamma = 1.0 / max(np.linalg.norm(g), 1e-300)
        r = gamma * q
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho * (y @ r)
            r += s * (a - b)
        p = -r
        if g @ p >= 0:
            # history lost positive-definiteness; restart along steepest descent
            s_hist.clear(), y_hist.clear(), rho_hist.clear()
            p = -g / max(np.linalg.norm(g), 1e-300)
        ls = strong_wolfe(fg, x, f, g, p, 1.0)
        if ls is None:
            return done(it - 1, "line search failed", False)
        alpha, f_new, g_new = ls
        s = alpha * p
        y = g_new - g
        sy = s @ y
        x = x + s
        f_old = f
        f, g = f_new, g_new
        trace.append(f)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
        if callback is not None and callback(it, x, f, g):
            return done(it, "callback target reached", True)
        if np.max(np.abs(g)) < gtol:
            return done(it, "gradient tolerance met", True)
        if ftol > 0 and (f_old - f) <= ftol * max(abs(f_old), abs(f), 1.0):
            return done(it, "relative reduction below ftol", True)
    return done(max_iter, "maximum iterations reached", False)
