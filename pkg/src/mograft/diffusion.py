"""Linear-beta noise schedule and ancestral sampling for an x0-predicting net.

All math runs in float64.  Time steps are 1-based: t ranges over 1..T, and
the step-1 posterior is the prediction itself (zero posterior variance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_T = 100
DEFAULT_BETA_START = 1e-4
# With 100 steps the end beta must be large enough that the terminal state is
# essentially pure noise (alpha_bar_T ~ 3e-5 here); a 1000-step-calibrated end
# of 0.02 would leave alpha_bar_T ~ 0.36 and break ancestral sampling.
DEFAULT_BETA_END = 0.2


class ScheduleError(ValueError):
    """Invalid schedule parameters or time step."""


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step beta/alpha tables plus posterior coefficients.

    Arrays are indexed by t-1.  `posterior_coef_x0` and `posterior_coef_xt`
    are the weights of the predicted clean sequence and of x_t in the
    reverse-step mean; at t=1 they are exactly (1, 0) and the posterior
    variance is exactly 0.
    """

    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    alpha_bar_prev: np.ndarray
    posterior_variance: np.ndarray
    posterior_coef_x0: np.ndarray
    posterior_coef_xt: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.betas)


def make_schedule(
    steps: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Build a schedule with betas linearly spaced from start to end inclusive."""
    if steps < 1:
        raise ScheduleError(f"steps must be >= 1, got {steps}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ScheduleError(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    betas = np.linspace(beta_start, beta_end, steps)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    alpha_bar_prev = np.concatenate([[1.0], alpha_bars[:-1]])
    one_minus = 1.0 - alpha_bars
    posterior_variance = (1.0 - alpha_bar_prev) / one_minus * betas
    coef_x0 = np.sqrt(alpha_bar_prev) * betas / one_minus
    coef_xt = np.sqrt(alphas) * (1.0 - alpha_bar_prev) / one_minus
    # At t=1 the algebra gives exactly (1, 0): beta_1 == 1 - alpha_bar_1.
    # The float subtraction can be off by an ulp, so pin the exact values.
    coef_x0[0] = 1.0
    coef_xt[0] = 0.0
    posterior_variance[0] = 0.0
    for arr in (betas, alphas, alpha_bars, alpha_bar_prev, posterior_variance,
                coef_x0, coef_xt):
        arr.setflags(write=False)
    return NoiseSchedule(
        betas=betas,
        alphas=alphas,
        alpha_bars=alpha_bars,
        alpha_bar_prev=alpha_bar_prev,
        posterior_variance=posterior_variance,
        posterior_coef_x0=coef_x0,
        posterior_coef_xt=coef_xt,
    )


def _check_t(schedule: NoiseSchedule, t: int) -> None:
    if not 1 <= t <= schedule.steps:
        raise ScheduleError(f"t must be in 1..{schedule.steps}, got {t}")


def q_sample(x0, t: int, eps, schedule: NoiseSchedule):
    """Noise x0 directly to step t: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    _check_t(schedule, t)
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ScheduleError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    abar = schedule.alpha_bars[t - 1]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def posterior_mean(x0_hat, x_t, t: int, schedule: NoiseSchedule):
    """Reverse-step mean from the predicted clean sequence and x_t."""
    _check_t(schedule, t)
    x0_hat = np.asarray(x0_hat, dtype=np.float64)
    x_t = np.asarray(x_t, dtype=np.float64)
    return (
        schedule.posterior_coef_x0[t - 1] * x0_hat
        + schedule.posterior_coef_xt[t - 1] * x_t
    )


def p_sample_step(x_t, t: int, x0_hat, schedule: NoiseSchedule, rng: np.random.Generator):
    """One ancestral step: posterior mean plus scheduled noise (none at t=1)."""
    _check_t(schedule, t)
    mean = posterior_mean(x0_hat, x_t, t, schedule)
    if t == 1:
        return mean
    sigma = np.sqrt(schedule.posterior_variance[t - 1])
    return mean + sigma * rng.standard_normal(np.shape(x_t))


def sample_loop(
    denoise_fn,
    e: np.ndarray,
    n_frames: int,
    frame_dim: int,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
) -> np.ndarray:
    """Ancestral sampling from pure noise down to a clean (n_frames, frame_dim) array.

    `denoise_fn(x_t, t, e)` must return the predicted clean sequence with the
    same shape as x_t.
    """
    x = rng.standard_normal((n_frames, frame_dim))
    for t in range(schedule.steps, 0, -1):
        x0_hat = np.asarray(denoise_fn(x, t, e), dtype=np.float64)
        if x0_hat.shape != x.shape:
            raise ScheduleError(
                f"denoiser returned shape {x0_hat.shape}, expected {x.shape}"
            )
        x = p_sample_step(x, t, x0_hat, schedule, rng)
    return x
