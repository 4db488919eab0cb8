"""Closed-loop calibration and Walsh-modulated drift spectroscopy.

The calibration primitives talk to a simulated testbed that behaves like
the real control stack: amplitude settings pass through the fixed-point
resolution of the waveform generator, every shot advances a wall clock,
and slow drift plus shot-to-shot noise corrupt the applied pulses.

Amplitude errors are measured with trains of ``4N + 1`` equal-phase pi/2
pulses: the first ``4N`` ideally compose to full revolutions, the final
pulse biases the readout to the steep point of the fringe, and a relative
amplitude error ``x`` shifts the bright-state probability to
``(1 - sin(2 c x)) / 2`` with ``c = (4N + 1) pi / 4``.  Frequency errors
are measured with ``N`` detuning-sensitive pulse pairs of opposite phase
followed by one quadrature pulse; the exact two-level propagator of the
pair is inverted numerically.  Both loops grow ``N`` geometrically until
an error is resolved against shot noise, then feed the correction back
through the quantized hardware setting.

Walsh modulation generalizes the amplitude train: flipping the sign of
blocks of pulses according to a Walsh function makes the accumulated
rotation angle proportional to the corresponding Walsh coefficient of the
amplitude-drift time series, and balanced (non-constant) Walsh orders are
immune to the static offset and to shot-to-shot noise.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .noise import LANE_CAL, QuantizerConfig, rng_stream

__all__ = [
    "SimulatedQubitTestbed",
    "CalLoopConfig",
    "CalRecord",
    "amplitude_cal_step",
    "amplitude_cal_loop",
    "frequency_cal_step",
    "frequency_cal_loop",
    "walsh_function",
    "walsh_sign_train",
    "walsh_coefficient",
    "walsh_reconstruct",
    "modulated_train_p_zero",
    "constant_train_p_zero_gaussian",
    "measure_walsh_coefficient",
    "walsh_fit",
    "WalshEstimate",
    "records_to_jsonl",
]


# ---------------------------------------------------------------------------
# Simulated hardware
# ---------------------------------------------------------------------------


class SimulatedQubitTestbed:
    """Pulse-train hardware emulator with drift, noise, and quantization.

    Parameters
    ----------
    master_seed:
        Seed for the testbed's RNG lane.
    t_half_pi, gap_time:
        Pulse timing; pulses are modelled as rectangles of duration
        ``t_half_pi`` separated by ``gap_time``.
    amp_fraction:
        Full-scale fraction of the waveform generator used at the nominal
        setting; the quantization step relative to the pulse amplitude is
        ``quantizer.step / amp_fraction``.
    sigma0_rel:
        Shot-to-shot relative amplitude noise (quasi-static per shot).
    spam:
        Symmetric readout flip probability.
    amp_drift, freq_drift:
        Callables of wall-clock time giving the relative amplitude offset
        and the qubit-frequency offset (rad/s).  ``None`` means no drift.
    shot_overhead:
        Dead time added to the sequence duration for every shot.
    """

    def __init__(
        self,
        master_seed: int,
        t_half_pi: float = 6.0e-6,
        gap_time: float = 40e-9,
        amp_fraction: float = 0.23675,
        quantizer: QuantizerConfig | None = QuantizerConfig(bits=15),
        sigma0_rel: float = 1.4571e-4,
        spam: float = 1.1e-3,
        amp_drift: Callable[[np.ndarray], np.ndarray] | None = None,
        freq_drift: Callable[[np.ndarray], np.ndarray] | None = None,
        shot_overhead: float = 5e-3,
    ):
        if not 0 < amp_fraction <= 1:
            raise ValueError("amp_fraction must lie in (0, 1]")
        self.master_seed = int(master_seed)
        self.t_half_pi = float(t_half_pi)
        self.gap_time = float(gap_time)
        self.amp_fraction = float(amp_fraction)
        self.quantizer = quantizer
        self.sigma0_rel = float(sigma0_rel)
        self.spam = float(spam)
        self.amp_drift = amp_drift
        self.freq_drift = freq_drift
        self.shot_overhead = float(shot_overhead)

        self.clock = 0.0
        self.amp_setting = 1.0
        self.detuning_setting = 0.0  # drive-frequency offset, rad/s
        self._run_counter = 0

    # -- hardware model ----------------------------------------------------

    @property
    def omega_nominal(self) -> float:
        return (np.pi / 2) / self.t_half_pi

    def programmed_amp_multiplier(self) -> float:
        """Amplitude multiplier actually produced for the current setting."""
        if self.quantizer is None:
            return self.amp_setting
        word = self.quantizer.quantize(self.amp_setting * self.amp_fraction)
        return word / self.amp_fraction

    def true_relative_error(self, t: float) -> float:
        """Relative rotation-angle error of a pi/2 pulse played at time t."""
        drift = float(self.amp_drift(np.asarray(t))) if self.amp_drift else 0.0
        return self.programmed_amp_multiplier() * (1.0 + drift) - 1.0

    def _detunings(self, times: np.ndarray) -> np.ndarray:
        qubit = (
            np.asarray(self.freq_drift(times), dtype=float)
            if self.freq_drift is not None
            else np.zeros_like(times)
        )
        return self.detuning_setting - qubit  # drive minus qubit

    def run_train(self, phases: Sequence[float], shots: int) -> int:
        """Play a pulse train `shots` times; return the bright-outcome count.

        ``phases`` are effective pulse phases (sign flips folded in as a
        pi offset).  Each shot advances the wall clock by the sequence
        duration plus the per-shot overhead.
        """
        phases = np.asarray(phases, dtype=float)
        n_pulses = len(phases)
        duration = n_pulses * (self.t_half_pi + self.gap_time)
        rng = rng_stream(self.master_seed, LANE_CAL, self._run_counter)
        self._run_counter += 1

        times = self.clock + np.arange(shots) * (duration + self.shot_overhead)
        self.clock = float(times[-1] + duration + self.shot_overhead)

        drift = (
            np.asarray(self.amp_drift(times), dtype=float)
            if self.amp_drift is not None
            else np.zeros(shots)
        )
        mult = self.programmed_amp_multiplier() * (
            1.0 + drift + self.sigma0_rel * rng.standard_normal(shots)
        )
        delta = self._detunings(times)

        omega = self.omega_nominal * mult
        alpha = np.ones(shots, dtype=complex)
        beta = np.zeros(shots, dtype=complex)
        for phase in phases:
            w = np.sqrt(omega**2 + delta**2)
            half = 0.5 * w * self.t_half_pi
            c, s = np.cos(half), np.sin(half)
            inv = np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), 0.0)
            a = c + 1j * delta * inv * s  # vz = -delta
            b = -1j * omega * inv * s * np.exp(1j * phase)
            alpha, beta = a * alpha - np.conj(b) * beta, b * alpha + np.conj(a) * beta
            if self.gap_time:
                rot = np.exp(0.5j * delta * self.gap_time)
                alpha = alpha * rot
                beta = beta * np.conj(rot)
        p_zero = np.abs(alpha) ** 2

        bright = rng.random(shots) < p_zero
        if self.spam:
            bright ^= rng.random(shots) < self.spam
        return int(bright.sum())


# ---------------------------------------------------------------------------
# Calibration steps and loops
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalLoopConfig:
    """Shared knobs for the closed-loop calibration routines."""

    n_start: int = 1
    n_max: int = 256
    shots: int = 200
    significance: float = 3.0
    linear_threshold: float = 0.35
    max_steps: int = 40

    def __post_init__(self):
        if not 1 <= self.n_start <= self.n_max:
            raise ValueError("need 1 <= n_start <= n_max")
        if self.shots < 10:
            raise ValueError("shots must be at least 10")
        if not 0 < self.linear_threshold < 0.5:
            raise ValueError("linear_threshold must lie in (0, 0.5)")


@dataclass(frozen=True)
class CalRecord:
    """One measure/decide/correct step of a calibration loop."""

    kind: str
    step: int
    time: float
    n_group: int
    shots: int
    p_zero: float
    estimate: float
    sigma: float
    linear_ok: bool
    significant: bool
    corrected: bool
    setting_after: float


def records_to_jsonl(records: Sequence[CalRecord]) -> str:
    return "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in records)


def amplitude_cal_step(
    testbed: SimulatedQubitTestbed, n_group: int, shots: int
) -> tuple[float, float, float, bool]:
    """Measure the relative amplitude error with a 4N+1 pulse train.

    Returns (p_zero, estimate, sigma, linear_ok).
    """
    n_pulses = 4 * n_group + 1
    bright = testbed.run_train(np.zeros(n_pulses), shots)
    p = bright / shots
    c = (4 * n_group + 1) * np.pi / 4
    arg = np.clip(1.0 - 2.0 * p, -1.0, 1.0)
    estimate = float(np.arcsin(arg) / (2 * c))
    linear_ok = abs(p - 0.5) <= 0.35
    sigma_p = np.sqrt(max(p * (1 - p), 0.25 / shots) / shots)
    slope = 2 * c * np.sqrt(max(1.0 - arg**2, 1e-2))  # |dP(-2)/dx| guard
    sigma = float(2 * sigma_p / slope)
    return p, estimate, sigma, linear_ok


def _freq_model_p_zero(
    delta: float, n_pairs: int, omega: float, t_pulse: float, gap: float
) -> float:
    """Exact bright probability of the N-pair + quadrature-pulse train."""

    def step(phase: float) -> np.ndarray:
        w = np.sqrt(omega**2 + delta**2)
        half = 0.5 * w * t_pulse
        c, s = np.cos(half), np.sin(half)
        a = c + 1j * delta / w * s
        b = -1j * omega / w * s * np.exp(1j * phase)
        u = np.array([[a, -np.conj(b)], [b, np.conj(a)]])
        if gap:
            g = np.exp(0.5j * delta * gap)
            u = np.diag([g, np.conj(g)]) @ u
        return u

    pair = step(np.pi) @ step(0.0)
    total = step(np.pi / 2) @ np.linalg.matrix_power(pair, n_pairs)
    return float(abs(total[0, 0]) ** 2)


def frequency_cal_step(
    testbed: SimulatedQubitTestbed, n_pairs: int, shots: int
) -> tuple[float, float, float, bool]:
    """Measure the drive-qubit detuning with N opposite-phase pulse pairs.

    The final quadrature pulse converts the pair-accumulated z-rotation
    into a population signal.  Returns (p_zero, estimate, sigma,
    linear_ok); the estimate is the detuning in rad/s, found by Newton
    inversion of the exact propagator model.
    """
    phases = np.concatenate([np.tile([0.0, np.pi], n_pairs), [np.pi / 2]])
    bright = testbed.run_train(phases, shots)
    p = bright / shots
    linear_ok = abs(p - 0.5) <= 0.35

    omega, t_pulse, gap = testbed.omega_nominal, testbed.t_half_pi, testbed.gap_time
    # Newton iteration on the exact model, starting from the small-signal
    # linearization
    h = 0.02 * omega / max(n_pairs, 1)
    delta = 0.0
    for _ in range(60):
        p0 = _freq_model_p_zero(delta, n_pairs, omega, t_pulse, gap)
        dp = (
            _freq_model_p_zero(delta + h, n_pairs, omega, t_pulse, gap)
            - _freq_model_p_zero(delta - h, n_pairs, omega, t_pulse, gap)
        ) / (2 * h)
        if abs(dp) < 1e-12:
            break
        step_d = (p - p0) / dp
        delta += step_d
        if abs(step_d) < 1e-9 * omega:
            break
    p0 = _freq_model_p_zero(delta, n_pairs, omega, t_pulse, gap)
    dp = (
        _freq_model_p_zero(delta + h, n_pairs, omega, t_pulse, gap)
        - _freq_model_p_zero(delta - h, n_pairs, omega, t_pulse, gap)
    ) / (2 * h)
    sigma_p = np.sqrt(max(p * (1 - p), 0.25 / shots) / shots)
    sigma = float(sigma_p / max(abs(dp), 1e-12))
    return p, float(delta), sigma, linear_ok


def _run_loop(
    testbed: SimulatedQubitTestbed,
    config: CalLoopConfig,
    kind: str,
    measure: Callable[[int, int], tuple[float, float, float, bool]],
    apply_correction: Callable[[float], float],
) -> list[CalRecord]:
    records: list[CalRecord] = []
    n = config.n_start
    for step in range(config.max_steps):
        t = testbed.clock
        p, estimate, sigma, linear_ok = measure(n, config.shots)
        significant = abs(estimate) > config.significance * sigma
        corrected = False
        if not linear_ok:
            # outside the invertible fringe region: shorten the train
            n = max(n // 2, config.n_start)
        elif significant:
            setting = apply_correction(estimate)
            corrected = True
        else:
            if n >= config.n_max:
                records.append(
                    CalRecord(
                        kind=kind,
                        step=step,
                        time=t,
                        n_group=n,
                        shots=config.shots,
                        p_zero=p,
                        estimate=estimate,
                        sigma=sigma,
                        linear_ok=linear_ok,
                        significant=significant,
                        corrected=False,
                        setting_after=apply_correction(0.0),
                    )
                )
                break
            n = min(2 * n, config.n_max)
        records.append(
            CalRecord(
                kind=kind,
                step=step,
                time=t,
                n_group=n,
                shots=config.shots,
                p_zero=p,
                estimate=estimate,
                sigma=sigma,
                linear_ok=linear_ok,
                significant=significant,
                corrected=corrected,
                setting_after=apply_correction(0.0),
            )
        )
    return records


def amplitude_cal_loop(
    testbed: SimulatedQubitTestbed, config: CalLoopConfig | None = None
) -> list[CalRecord]:
    """Iteratively null the relative amplitude error.

    The train length grows geometrically until the estimate is significant
    at ``config.significance`` binomial standard deviations, corrections
    divide the amplitude setting by ``1 + estimate`` (rounded by the
    hardware quantizer), and the loop ends once the longest train resolves
    no error.
    """
    config = config or CalLoopConfig()

    def correct(x: float) -> float:
        if x:
            testbed.amp_setting = testbed.amp_setting / (1.0 + x)
        return testbed.amp_setting

    return _run_loop(
        testbed,
        config,
        "amplitude",
        lambda n, shots: amplitude_cal_step(testbed, n, shots),
        correct,
    )


def frequency_cal_loop(
    testbed: SimulatedQubitTestbed, config: CalLoopConfig | None = None
) -> list[CalRecord]:
    """Iteratively steer the drive frequency onto the qubit."""
    config = config or CalLoopConfig()

    def correct(d: float) -> float:
        if d:
            testbed.detuning_setting = testbed.detuning_setting - d
        return testbed.detuning_setting

    return _run_loop(
        testbed,
        config,
        "frequency",
        lambda n, shots: frequency_cal_step(testbed, n, shots),
        correct,
    )


# ---------------------------------------------------------------------------
# Walsh-modulated probes
# ---------------------------------------------------------------------------


def walsh_function(order: int, x: np.ndarray) -> np.ndarray:
    """Walsh function of the given order on [0, 1), Paley (binary) ordering.

    Order ``2**j`` is the square wave with ``2**(j+1)`` equal segments;
    general orders are products over the set bits of ``order``.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    j = 0
    k = order
    while k:
        if k & 1:
            out = out * (1.0 - 2.0 * (np.floor(x * 2 ** (j + 1)).astype(int) & 1))
        k >>= 1
        j += 1
    return out


def walsh_sign_train(order: int, n_pulses: int) -> np.ndarray:
    """Per-pulse signs sampling the Walsh function at pulse midpoints.

    ``n_pulses`` must be divisible by the number of Walsh segments so that
    sign flips land exactly between pulses.
    """
    if n_pulses < 1:
        raise ValueError("n_pulses must be positive")
    segments = 2 ** (order.bit_length()) if order > 0 else 1
    if n_pulses % segments:
        raise ValueError(
            f"n_pulses={n_pulses} must be a multiple of {segments} for order {order}"
        )
    mids = (np.arange(n_pulses) + 0.5) / n_pulses
    return walsh_function(order, mids).astype(int)


def walsh_coefficient(values: np.ndarray, order: int) -> float:
    """Walsh coefficient of a uniformly sampled series (mean of w_k * x)."""
    values = np.asarray(values, dtype=float)
    mids = (np.arange(len(values)) + 0.5) / len(values)
    return float(np.mean(walsh_function(order, mids) * values))


def walsh_reconstruct(coeffs: dict[int, float], x: np.ndarray) -> np.ndarray:
    """Partial Walsh series evaluated at positions x in [0, 1)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for order, a in coeffs.items():
        out = out + a * walsh_function(order, x)
    return out


def modulated_train_p_zero(n_pulses: int, coefficient: float) -> float:
    """Bright probability of a sign-balanced train plus one bias pulse.

    ``coefficient`` is the Walsh coefficient of the per-pulse relative
    amplitude errors picked out by the modulation; the accumulated
    rotation-angle error is ``(pi/2) * n_pulses * coefficient``.
    """
    return float(0.5 * (1.0 - np.sin(0.5 * np.pi * n_pulses * coefficient)))


def constant_train_p_zero_gaussian(
    n_pulses: int, mean_rel: float, sigma_rel: float
) -> float:
    """Bright probability of an unmodulated 4N-pulse train under Gaussian noise.

    For ``n_pulses = 4N`` equal-phase pulses with per-shot relative
    amplitude error drawn from N(mean_rel, sigma_rel**2), averaging the
    fringe ``cos^2(pi N x)`` gives

        P = 1/2 + 1/2 cos(pi n_pulses mean / 2) exp(-(pi n_pulses sigma)^2 / 8)
    """
    if n_pulses % 4:
        raise ValueError("n_pulses must be a multiple of 4")
    phi = 0.5 * np.pi * n_pulses
    # solvers may probe huge trial sigmas; the overflowing square still maps
    # to the correct exp(-inf) = 0 limit, so silence only that overflow
    with np.errstate(over="ignore"):
        damp = np.exp(-0.5 * (phi * sigma_rel) ** 2)
    return float(0.5 + 0.5 * np.cos(phi * mean_rel) * damp)


@dataclass(frozen=True)
class WalshEstimate:
    order: int
    coefficient: float
    sigma: float
    n_pulses: int
    p_zero: float


def measure_walsh_coefficient(
    testbed: SimulatedQubitTestbed, order: int, n_pulses: int, shots: int
) -> WalshEstimate:
    """Estimate one Walsh coefficient of the amplitude drift.

    The train applies ``n_pulses`` pi/2 pulses whose signs follow the
    Walsh function, plus one unmodulated bias pulse; balanced orders
    cancel both the static amplitude offset and shot-to-shot noise, so
    the fringe shift isolates the chosen coefficient.
    """
    if order == 0:
        raise ValueError("order 0 is the unmodulated train; use amplitude_cal_step")
    signs = walsh_sign_train(order, n_pulses)
    phases = np.where(signs > 0, 0.0, np.pi)
    phases = np.concatenate([phases, [0.0]])
    bright = testbed.run_train(phases, shots)
    p = bright / shots
    arg = np.clip(1.0 - 2.0 * p, -1.0, 1.0)
    coeff = float(np.arcsin(arg) * 2 / (np.pi * n_pulses))
    sigma_p = np.sqrt(max(p * (1 - p), 0.25 / shots) / shots)
    slope = 0.5 * np.pi * n_pulses * np.sqrt(max(1.0 - arg**2, 1e-2))
    return WalshEstimate(
        order=order,
        coefficient=coeff,
        sigma=float(2 * sigma_p / slope),
        n_pulses=n_pulses,
        p_zero=p,
    )


def walsh_fit(
    testbed: SimulatedQubitTestbed,
    max_order: int = 7,
    n_pulses: int = 64,
    shots: int = 400,
    n_sweep: Sequence[int] = (64, 256, 1024, 2048, 4096),
    mean_n_group: int = 256,
    mean_repeats: int = 6,
) -> dict:
    """Hierarchical drift characterization.

    Three stages, from slowest to fastest time scale:

    1. the signed static offset, averaged over ``mean_repeats`` 4N+1
       bias-pulse trains.  The sine fringe is linear in the offset, and
       the next stage needs the offset pinned well below the period of
       the longest sweep train, hence the averaging;
    2. the shot-to-shot spread from the contrast decay of unmodulated
       trains swept over length, fit to the Gaussian closed form with the
       offset held fixed (the contrast only collapses once
       ``pi * n * sigma / 2`` approaches one, hence the long trains);
    3. every balanced Walsh order up to ``max_order``, measured directly;
       these isolate within-train amplitude variation and reject both the
       static offset and the shot-to-shot noise.

    Returns a dict with keys ``mean_rel``, ``mean_sigma``, ``sigma_rel``
    and ``coefficients`` (order -> WalshEstimate).
    """
    ests = np.empty(mean_repeats)
    weights = np.empty(mean_repeats)
    for rep in range(mean_repeats):
        _, est, sig, _ = amplitude_cal_step(testbed, mean_n_group, shots)
        ests[rep] = est
        weights[rep] = 1.0 / sig**2
    mean_rel = float(np.sum(weights * ests) / np.sum(weights))
    mean_sigma = float(1.0 / np.sqrt(np.sum(weights)))

    ps, ns = [], []
    for n4 in n_sweep:
        if n4 % 4:
            raise ValueError("sweep lengths must be multiples of 4")
        bright = testbed.run_train(np.zeros(n4), shots)
        ps.append(bright / shots)
        ns.append(n4)
    ps, ns = np.array(ps), np.array(ns)

    def resid(params):
        model = np.array(
            [
                constant_train_p_zero_gaussian(n, mean_rel, np.exp(params[0]))
                for n in ns
            ]
        )
        return model - ps

    sol = least_squares(resid, x0=np.array([np.log(1e-4)]), method="lm")
    sigma_rel = float(np.exp(sol.x[0]))

    coefficients = {}
    for order in range(1, max_order + 1):
        coefficients[order] = measure_walsh_coefficient(testbed, order, n_pulses, shots)
    return {
        "mean_rel": mean_rel,
        "mean_sigma": mean_sigma,
        "sigma_rel": sigma_rel,
        "coefficients": coefficients,
    }
