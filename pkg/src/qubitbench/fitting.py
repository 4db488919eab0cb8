"""Maximum-likelihood estimation of benchmarking decay curves.

The survival probability after ``l`` group elements is modelled as

    p(l) = A * (1 - 2*eps)**l + 1/2

where ``eps`` is the average error per element and ``A`` absorbs state
preparation and measurement imperfections.  Counts at each sequence length
are pooled and treated as binomial draws from ``p(l)``; the likelihood is
maximized over ``(eps, A)`` with a coarse logarithmic grid over ``eps``
followed by bounded quasi-Newton refinement.  Uncertainties come from a
parametric bootstrap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

__all__ = ["DecayFit", "survival_model", "mle_fit", "bootstrap_ci"]

_EPS_BOUNDS = (1e-12, 0.49)
_AMP_BOUNDS = (1e-3, 0.6)
_P_CLIP = 1e-9


@dataclass(frozen=True)
class DecayFit:
    """Result of a decay-curve fit.

    ``epsilon`` is the per-element error, ``amplitude`` the prefactor A.
    ``at_boundary`` marks estimates pinned at a parameter bound and
    ``identifiable`` is False when the data cannot distinguish decay from
    a flat line (e.g. a single length, or no decay within shot noise).
    """

    epsilon: float
    amplitude: float
    log_likelihood: float
    converged: bool
    at_boundary: bool
    identifiable: bool
    message: str = ""


def survival_model(
    lengths: np.ndarray, epsilon: float, amplitude: float
) -> np.ndarray:
    """Expected survival probability at each sequence length, clipped to [0, 1]."""
    lengths = np.asarray(lengths, dtype=float)
    p = amplitude * (1.0 - 2.0 * epsilon) ** lengths + 0.5
    return np.clip(p, 0.0, 1.0)


def _pool(lengths, successes, shots):
    lengths = np.asarray(lengths, dtype=float)
    successes = np.asarray(successes, dtype=float)
    shots = np.asarray(shots, dtype=float)
    if not (lengths.shape == successes.shape == shots.shape):
        raise ValueError("lengths, successes, shots must have matching shapes")
    if np.any(shots <= 0) or np.any(successes < 0) or np.any(successes > shots):
        raise ValueError("need 0 <= successes <= shots with shots > 0")
    uniq = np.unique(lengths)
    k = np.array([successes[lengths == l].sum() for l in uniq])
    n = np.array([shots[lengths == l].sum() for l in uniq])
    return uniq, k, n


def _neg_log_likelihood(params, lengths, k, n):
    log_eps, amplitude = params
    p = survival_model(lengths, np.exp(log_eps), amplitude)
    p = np.clip(p, _P_CLIP, 1.0 - _P_CLIP)
    return -float(np.sum(k * np.log(p) + (n - k) * np.log1p(-p)))


def mle_fit(
    lengths: np.ndarray,
    successes: np.ndarray,
    shots: np.ndarray,
    grid_points: int = 80,
) -> DecayFit:
    """Fit the decay model to pooled binomial counts.

    Parameters
    ----------
    lengths, successes, shots:
        Per-record sequence length, number of surviving shots, and shots
        taken.  Records sharing a length are pooled.
    grid_points:
        Resolution of the initial logarithmic grid over ``epsilon``.
    """
    uniq, k, n = _pool(lengths, successes, shots)

    identifiable = len(uniq) >= 2
    grid_eps = np.logspace(np.log10(_EPS_BOUNDS[0]), np.log10(_EPS_BOUNDS[1]), grid_points)
    grid_amp = np.linspace(0.25, 0.55, 13)
    log_eps_grid = np.log(grid_eps)[:, None, None]
    amp_grid = grid_amp[None, :, None]
    p_grid = np.clip(
        amp_grid * (1.0 - 2.0 * np.exp(log_eps_grid)) ** uniq[None, None, :] + 0.5,
        _P_CLIP,
        1.0 - _P_CLIP,
    )
    nll_grid = -(k * np.log(p_grid) + (n - k) * np.log1p(-p_grid)).sum(axis=-1)
    i_best, j_best = np.unravel_index(np.argmin(nll_grid), nll_grid.shape)

    bounds = [
        (np.log(_EPS_BOUNDS[0]), np.log(_EPS_BOUNDS[1])),
        _AMP_BOUNDS,
    ]
    res = minimize(
        _neg_log_likelihood,
        x0=np.array([np.log(grid_eps[i_best]), grid_amp[j_best]]),
        args=(uniq, k, n),
        method="L-BFGS-B",
        bounds=bounds,
        options={"ftol": 1e-12, "gtol": 1e-10, "maxiter": 500},
    )
    if not res.success:
        # the line search can stall on the clipped, nearly flat likelihood
        # even at the optimum; polish with a derivative-free step instead
        polish = minimize(
            _neg_log_likelihood,
            x0=res.x,
            args=(uniq, k, n),
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000},
        )
        if polish.fun <= res.fun:
            res = polish
    log_eps, amplitude = res.x
    epsilon = float(np.exp(log_eps))

    tol = 1e-6
    at_boundary = (
        log_eps <= bounds[0][0] + tol
        or log_eps >= bounds[0][1] - tol
        or amplitude <= bounds[1][0] + tol
        or amplitude >= bounds[1][1] - tol
    )
    # decay is unidentifiable when the fitted curve is flat within shot noise
    if identifiable:
        p_hat = survival_model(uniq, epsilon, amplitude)
        span = np.max(p_hat) - np.min(p_hat)
        sigma = np.sqrt(np.mean(p_hat * (1 - p_hat) / n))
        if span < 0.2 * sigma:
            identifiable = False

    return DecayFit(
        epsilon=epsilon,
        amplitude=float(amplitude),
        log_likelihood=-float(res.fun),
        converged=bool(res.success),
        at_boundary=bool(at_boundary),
        identifiable=bool(identifiable),
        message=str(res.message),
    )


def bootstrap_ci(
    lengths: np.ndarray,
    successes: np.ndarray,
    shots: np.ndarray,
    rng: np.random.Generator,
    n_resamples: int = 1000,
    level: float = 0.68,
    max_failure_fraction: float = 0.05,
) -> tuple[float, float, np.ndarray]:
    """Parametric-bootstrap confidence interval for the per-element error.

    Counts are redrawn from the fitted model and refit; the interval is the
    central ``level`` quantile range of the refitted errors.  Raises if more
    than ``max_failure_fraction`` of refits fail to converge.
    """
    fit = mle_fit(lengths, successes, shots)
    uniq, _, n = _pool(lengths, successes, shots)
    p_model = survival_model(uniq, fit.epsilon, fit.amplitude)

    estimates = []
    failures = 0
    for _ in range(n_resamples):
        k_sim = rng.binomial(n.astype(int), p_model)
        refit = mle_fit(uniq, k_sim, n)
        if refit.converged:
            estimates.append(refit.epsilon)
        else:
            failures += 1
    if failures > max_failure_fraction * n_resamples:
        raise RuntimeError(
            f"bootstrap unstable: {failures}/{n_resamples} refits failed to converge"
        )
    estimates = np.array(estimates)
    lo, hi = np.quantile(estimates, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi), estimates
