"""Stochastic time-domain oracle for the analytic output spectra.

The linearized Langevin system is integrated as an Ito SDE driven by white
vacuum noise (quadrature increments of variance ``dt/2``), the reflected
field is formed with ``X_out = -X_in + sqrt(2 gamma) X``, and the symmetrized
spectrum at one sideband frequency is estimated from Hann-windowed Fourier
sums averaged over independent trajectories.

Two integrators are available:

``"exact"``
    Samples the exact Gaussian transition of the linear SDE over each step,
    jointly with the time-integral of the state and the input-noise
    increment (Van Loan's block-exponential construction). No
    discretization bias, so the step can be large.
``"euler"``
    Plain Euler-Maruyama. Its damping error grows like ``|lambda| dt`` and
    it is only accurate when every drift eigenvalue is small compared with
    ``1/dt``.

Random streams: trajectories are processed in batches of ``batch_size``;
batch ``b`` draws from ``SeedSequence(seed, spawn_key=(b,))``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .fluctuations import FluctuationSystem, SpectralDensity, UnstableStateError, stability

__all__ = ["SdeRun", "simulate_linear", "transition_matrices"]

EULER_MAX_DT = 0.01
TRANSIENT_LIFETIMES = 10.0


@dataclass(frozen=True)
class SdeRun:
    """Configuration and (after :func:`simulate_linear`) result of one ensemble."""

    seed: int = 0
    dt: float = 0.5
    duration: float = 6000.0
    n_trajectories: int = 2000
    omega: float = 0.015
    method: str = "exact"
    n_segments: int = 1
    batch_size: int = 250
    workers: int = 1
    estimated_spectrum: SpectralDensity | None = None
    standard_error: np.ndarray | None = None
    segment_spectra: tuple[np.ndarray, ...] = ()
    segment_errors: tuple[np.ndarray, ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.method not in ("exact", "euler"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt <= 0.0 or self.duration <= 0.0:
            raise ValueError("dt and duration must be positive")
        if self.method == "euler" and self.dt > EULER_MAX_DT:
            raise ValueError(f"Euler-Maruyama needs dt <= {EULER_MAX_DT}")
        if self.n_trajectories < 2:
            raise ValueError("need at least two trajectories for error bars")
        if self.n_segments < 1 or self.batch_size < 1 or self.workers < 1:
            raise ValueError("n_segments, batch_size and workers must be >= 1")


def transition_matrices(drift: np.ndarray, t_in: np.ndarray, t_loss: np.ndarray, h: float):
    """Exact one-step map for ``Z = (X, int X dt, W_in)``.

    Returns ``(phi, chol)`` such that ``Z_{k+1} = phi @ Z_k + chol @ xi`` with
    standard normal ``xi``, where the integral and noise components of
    ``Z_k`` are reset to zero at the start of each step.
    """
    d = drift.shape[0]
    f = np.zeros((3 * d, 3 * d))
    f[:d, :d] = drift
    f[d : 2 * d, :d] = np.eye(d)
    g = np.zeros((3 * d, 2 * d))
    g[:d, :d] = t_in
    g[:d, d:] = t_loss
    g[2 * d :, :d] = np.eye(d)
    q = 0.5 * g @ g.T
    n = 3 * d
    big = np.zeros((2 * n, 2 * n))
    big[:n, :n] = -f
    big[:n, n:] = q
    big[n:, n:] = f.T
    e = expm(big * h)
    phi = e[n:, n:].T
    cov = phi @ e[:n, n:]
    cov = 0.5 * (cov + cov.T)
    w, v = np.linalg.eigh(cov)
    keep = w > 1e-14 * max(1.0, float(w.max()))
    chol = v[:, keep] * np.sqrt(w[keep])
    return phi, chol


def _slowest_rate(fs: FluctuationSystem) -> float:
    _, eigs = stability(fs)
    nz = eigs[np.abs(eigs) > 1e-9] if fs.has_phase_mode else eigs
    return float(-np.max(nz.real)) if nz.size else 1.0


def _batch(fs: FluctuationSystem, cfg: SdeRun, b: int, count: int, plan: dict):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(b,)))
    d = fs.drift.shape[0]
    h = cfg.dt
    k_in = fs.input_coupling
    n_transient, n_seg_steps, n_segments = plan["transient"], plan["seg_steps"], cfg.n_segments

    t_local = (np.arange(n_seg_steps) + 0.5) * h
    window = 0.5 * (1.0 - np.cos(2.0 * np.pi * t_local / (n_seg_steps * h)))
    phase = np.exp(1j * cfg.omega * t_local)
    weights = window * phase * h
    norm = float(np.sum(window**2) * h)

    x = np.zeros((count, d))
    out = np.zeros((n_segments, count, d, d))

    if cfg.method == "exact":
        phi, chol = plan["phi"], plan["chol"]
        phi_x = phi[:, :d]
        m = chol.shape[1]

        def step():
            nonlocal x
            z = x @ phi_x.T + rng.standard_normal((count, m)) @ chol.T
            x = z[:, :d]
            # output averaged over the step
            return (z[:, d : 2 * d] @ k_in.T - z[:, 2 * d :]) / h
    else:
        a, t_in, t_loss = fs.drift, fs.input_coupling, fs.loss_coupling
        sq = math.sqrt(0.5 * h)

        def step():
            nonlocal x
            dw_in = sq * rng.standard_normal((count, d))
            dw_loss = sq * rng.standard_normal((count, d))
            x_new = x + h * (x @ a.T) + dw_in @ t_in.T + dw_loss @ t_loss.T
            # trapezoidal state average keeps the input/intracavity correlation at O(dt^2)
            o = (0.5 * (x + x_new)) @ k_in.T - dw_in / h
            x = x_new
            return o

    for _ in range(n_transient):
        step()
    for s in range(n_segments):
        acc = np.zeros((count, d), dtype=complex)
        for k in range(n_seg_steps):
            acc += weights[k] * step()
        out[s] = (acc[:, :, None] * acc[:, None, :].conj()).real / norm
    return out


def simulate_linear(fs: FluctuationSystem, cfg: SdeRun) -> SdeRun:
    """Run the ensemble and return ``cfg`` with the spectrum estimate filled in.

    The state starts at zero; a transient of ten cavity lifetimes (longer if
    the slowest decaying mode needs it) is discarded. The remaining
    ``duration`` is split into ``n_segments`` Hann-windowed segments.
    """
    stable, _ = stability(fs)
    if not stable:
        raise UnstableStateError("state is linearly unstable; the SDE has no stationary regime")
    if fs.has_phase_mode and cfg.omega == 0.0:
        raise UnstableStateError("phase diffusion: no finite spectrum at omega = 0")

    h = cfg.dt
    transient_time = max(TRANSIENT_LIFETIMES, TRANSIENT_LIFETIMES / _slowest_rate(fs))
    plan = {
        "transient": int(math.ceil(transient_time / h)),
        "seg_steps": int(round(cfg.duration / (h * cfg.n_segments))),
    }
    if plan["seg_steps"] < 2:
        raise ValueError("duration too short for the chosen dt and n_segments")
    if cfg.method == "exact":
        plan["phi"], plan["chol"] = transition_matrices(fs.drift, fs.input_coupling, fs.loss_coupling, h)

    sizes = []
    left = cfg.n_trajectories
    while left > 0:
        sizes.append(min(cfg.batch_size, left))
        left -= sizes[-1]

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda bs: _batch(fs, cfg, bs[0], bs[1], plan), enumerate(sizes)))
    else:
        parts = [_batch(fs, cfg, b, n, plan) for b, n in enumerate(sizes)]
    samples = np.concatenate(parts, axis=1)  # (segments, trajectories, d, d)

    n = samples.shape[1]
    seg_means = samples.mean(axis=1)
    seg_errs = samples.std(axis=1, ddof=1) / math.sqrt(n)
    pooled = samples.reshape(-1, *samples.shape[2:])
    mean = pooled.mean(axis=0)
    err = pooled.std(axis=0, ddof=1) / math.sqrt(pooled.shape[0])
    labels = ("y_p", "x_p", "y_+", "x_+", "y_-", "x_-")[-mean.shape[0] :]
    meta = {
        "method": cfg.method,
        "window": "hann",
        "transient_time": plan["transient"] * h,
        "segment_duration": plan["seg_steps"] * h,
        "seed_rule": "SeedSequence(seed, spawn_key=(batch,))",
        "batch_size": cfg.batch_size,
    }
    return replace(
        cfg,
        estimated_spectrum=SpectralDensity(cfg.omega, mean, labels),
        standard_error=err,
        segment_spectra=tuple(seg_means),
        segment_errors=tuple(seg_errs),
        metadata=meta,
    )
