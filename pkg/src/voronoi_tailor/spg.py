"""Spectral projected gradient minimizer (Barzilai-Borwein steplength with
a nonmonotone line search), plus the multi-start driver used by the
experiments.

The projection hook is kept for generality; all reference runs use the
identity projection (unconstrained).  Function and gradient are always
computed jointly: for diagram objectives the diagram build dominates the
cost and is shared between them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import SpgError, VoronoiTailorError
from .region import Region


@dataclass
class SpgOptions:
    max_iter: int = 50000
    tol_f: float = 1e-8  # stop when f <= tol_f
    tol_g: float = 1e-8  # stop when sup-norm of the gradient <= tol_g
    memory: int = 10  # nonmonotone line-search window
    gamma: float = 1e-4  # sufficient-decrease parameter
    lambda_min: float = 1e-10
    lambda_max: float = 1e10
    sigma1: float = 0.1  # backtracking safeguards
    sigma2: float = 0.9
    stall_window: int = 500  # iterations without relative progress
    stall_rtol: float = 1e-12
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise SpgError(f"gamma must be in (0,1), got {self.gamma}")
        if not 0.0 < self.sigma1 < self.sigma2 < 1.0:
            raise SpgError("need 0 < sigma1 < sigma2 < 1")
        if not self.lambda_min < self.lambda_max:
            raise SpgError("need lambda_min < lambda_max")
        if self.memory < 1:
            raise SpgError("memory must be >= 1")


@dataclass
class SpgReport:
    x: np.ndarray
    f: float
    gnorm_inf: float
    iterations: int
    fcnt: int
    gcnt: int
    stop_reason: str  # target_f | small_gradient | stalled | max_iter
    time_seconds: float
    trial: int = 0
    trials_used: int = 1


def minimize(fg, x0, opts: SpgOptions | None = None, project=None) -> SpgReport:
    """Minimize ``fg`` (returning ``(value, gradient)``) from ``x0``.

    A trial point where ``fg`` raises a package error or returns a
    non-finite value is treated as infinitely bad and backtracked over;
    if the very first evaluation fails the error propagates.
    """
    opts = opts or SpgOptions()
    x = np.asarray(x0, dtype=float).copy()
    proj = project if project is not None else (lambda z: z)
    x = np.asarray(proj(x), dtype=float)

    t_start = time.perf_counter()
    f, g = fg(x)
    f = float(f)
    g = np.asarray(g, dtype=float)
    if not math.isfinite(f) or not np.isfinite(g).all():
        raise SpgError("objective not finite at the initial point", iterate=x)
    fcnt = 1
    it = 0
    history = [f]
    best_f = f
    best_improve_it = 0

    gnorm = float(np.abs(g).max()) if g.size else 0.0
    lam = min(opts.lambda_max, max(opts.lambda_min, 1.0 / gnorm)) if gnorm > 0 else opts.lambda_max

    def trial_eval(xt):
        nonlocal fcnt
        fcnt += 1
        try:
            ft, gt = fg(xt)
        except VoronoiTailorError:
            return math.inf, None
        ft = float(ft)
        if not math.isfinite(ft):
            return math.inf, None
        return ft, np.asarray(gt, dtype=float)

    stop = None
    while True:
        if f <= opts.tol_f:
            stop = "target_f"
            break
        if gnorm <= opts.tol_g:
            stop = "small_gradient"
            break
        if it - best_improve_it >= opts.stall_window:
            stop = "stalled"
            break
        if it >= opts.max_iter:
            stop = "max_iter"
            break

        d = proj(x - lam * g) - x
        gtd = float(np.dot(g, d))
        if gtd >= 0.0:
            d = -g
            gtd = -float(np.dot(g, g))
            if gtd == 0.0:
                stop = "small_gradient"
                break
        fmax = max(history)

        alpha = 1.0
        fnew, gnew = trial_eval(x + d)
        backtracks = 0
        while fnew > fmax + opts.gamma * alpha * gtd:
            backtracks += 1
            if backtracks > opts.max_backtracks or alpha < 1e-30:
                break
            if math.isfinite(fnew):
                denom = 2.0 * (fnew - f - alpha * gtd)
                atmp = -gtd * alpha * alpha / denom if denom > 0 else opts.sigma2 * alpha
            else:
                atmp = opts.sigma1 * alpha
            alpha = min(max(atmp, opts.sigma1 * alpha), opts.sigma2 * alpha)
            fnew, gnew = trial_eval(x + alpha * d)
        else:
            backtracks = -1  # line search succeeded

        if backtracks >= 0:
            stop = "stalled"
            break

        s = alpha * d
        y = gnew - g
        sty = float(np.dot(s, y))
        lam = (
            min(opts.lambda_max, max(opts.lambda_min, float(np.dot(s, s)) / sty))
            if sty > 0.0
            else opts.lambda_max
        )
        x = x + s
        f, g = fnew, gnew
        gnorm = float(np.abs(g).max())
        it += 1
        history.append(f)
        if len(history) > opts.memory:
            history.pop(0)
        if f < best_f - opts.stall_rtol * max(1.0, abs(best_f)):
            best_f = f
            best_improve_it = it

    return SpgReport(
        x=x,
        f=f,
        gnorm_inf=gnorm,
        iterations=it,
        fcnt=fcnt,
        gcnt=it + 1,
        stop_reason=stop,
        time_seconds=time.perf_counter() - t_start,
    )


def draw_sites(region: Region, kappa: int, rng: np.random.Generator) -> np.ndarray:
    """kappa points uniform in A, by rejection from the bounding box."""
    x0, y0, x1, y1 = region.bbox
    out = np.empty((kappa, 2))
    have = 0
    while have < kappa:
        batch = max(64, 2 * (kappa - have))
        pts = rng.random((batch, 2))
        pts[:, 0] = x0 + (x1 - x0) * pts[:, 0]
        pts[:, 1] = y0 + (y1 - y0) * pts[:, 1]
        for p in pts:
            if region.contains((p[0], p[1])):
                out[have] = p
                have += 1
                if have == kappa:
                    break
    return out


def multi_trial(
    fg,
    region: Region,
    kappa: int,
    opts: SpgOptions | None = None,
    n_trials: int = 10,
    seed: int = 0,
    project=None,
) -> SpgReport:
    """Run up to ``n_trials`` minimizations from independent uniform starts.

    Returns the first trial reaching ``tol_f``, otherwise the best-value
    trial; ``trials_used`` counts the minimizations consumed and ``trial``
    the index of the reported one.  Deterministic for a fixed seed.
    """
    opts = opts or SpgOptions()
    if not 1 <= n_trials:
        raise SpgError("n_trials must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(n_trials)
    best = None
    for t in range(n_trials):
        rng = np.random.default_rng(streams[t])
        x0 = draw_sites(region, kappa, rng).reshape(-1)
        report = minimize(fg, x0, opts, project)
        report.trial = t
        report.trials_used = t + 1
        if best is None or report.f < best.f:
            best = report
        if report.stop_reason == "target_f":
            report.trials_used = t + 1
            return report
    best.trials_used = n_trials
    return best
