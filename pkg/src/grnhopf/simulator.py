"""Explicit finite-difference integration of the full nonlinear system.

    m_t = D m_xx + alpha_m f(p) delta_eps(x - x_M) - mu m
    p_t = D p_xx + alpha_p g(x) m - mu p

with zero-flux boundaries, forward Euler in time and centred second
differences in space (mirror ghost nodes at the boundaries).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.signal import find_peaks

from .errors import (ConfigurationError, DivergenceError, InsufficientDataError,
                     NotSteadyError)
from .grid import SpatialGrid, discrete_indicator, discrete_source
from .model import ModelParams, hill

__all__ = [
    "ConcentrationState",
    "Trajectory",
    "AttractorClass",
    "stable_dt",
    "invariant_bounds",
    "step",
    "simulate",
    "classify",
    "late_time_profile",
    "write_trajectory_csv",
    "write_snapshot_csv",
    "OSCILLATION_THRESHOLD",
    "DECAY_RATIO",
]

OSCILLATION_THRESHOLD = 1e-3
DECAY_RATIO = 0.5


@dataclass(frozen=True)
class ConcentrationState:
    """Fields on the grid at time ``t``."""

    t: float
    m: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Spatial totals sampled in time, plus the final state.

    Attributes
    ----------
    times, M, P : ndarray
        Sample times and trapezoid integrals of ``m`` and ``p``.
    snapshots : dict
        Requested field snapshots keyed by (sample-aligned) time.
    final : ConcentrationState
    extrema : tuple
        ``(min m, min p, max m, max p)`` over all samples.
    bounds : tuple
        Invariant-region upper bounds ``(m_max, p_max)``.
    step_violation : tuple or None
        With per-step checking, the accumulated amounts by which ``m`` and
        ``p`` went below 0 and above their bounds, over every time step.
    """

    D: float
    dt: float
    grid: SpatialGrid
    times: np.ndarray
    M: np.ndarray
    P: np.ndarray
    final: ConcentrationState
    snapshots: dict = field(default_factory=dict)
    extrema: tuple = (0.0, 0.0, 0.0, 0.0)
    bounds: tuple = (math.inf, math.inf)
    step_violation: tuple | None = None

    def within_invariant_region(self) -> bool:
        mn_m, mn_p, mx_m, mx_p = self.extrema
        ok = mn_m >= 0.0 and mn_p >= 0.0 and mx_m <= self.bounds[0] and mx_p <= self.bounds[1]
        if self.step_violation is not None:
            ok = ok and not any(self.step_violation)
        return ok


@dataclass(frozen=True)
class AttractorClass:
    """Late-time behaviour of a trajectory.

    ``rel_amplitude`` is the peak-to-peak range of ``M`` over the window
    divided by its mean.  ``decay_ratio`` compares the range in the second
    half of the window with the range in the first half.
    """

    kind: str
    rel_amplitude: float
    period: float | None = None
    decay_ratio: float | None = None


def stable_dt(grid: SpatialGrid, D: float, cap: float = 0.05, safety: float = 0.8) -> float:
    """Default time step ``min(safety * dx**2 / (2 D), cap)``."""
    return min(safety * grid.dx ** 2 / (2.0 * D), cap)


def invariant_bounds(params: ModelParams, source: np.ndarray):
    """Upper bounds of the invariant region for the discrete source."""
    m_max = params.alpha_m * float(np.max(source)) / params.mu
    return m_max, params.alpha_p * m_max / params.mu


def _check_inputs(params, D, dt, grid):
    if not (np.isfinite(D) and D > 0):
        raise ConfigurationError(f"D must be positive, got {D!r}")
    if not (np.isfinite(dt) and dt > 0):
        raise ConfigurationError(f"dt must be positive, got {dt!r}")
    r = D * dt / grid.dx ** 2
    if 2.0 * r + params.mu * dt > 1.0:
        raise ConfigurationError(
            f"time step violates the explicit stability limit (D dt / dx^2 = {r:.3g})")


def step(state: ConcentrationState, params: ModelParams, D: float, dt: float) -> ConcentrationState:
    """One forward Euler step (reference implementation in NumPy).

    Raises
    ------
    ConfigurationError
        If ``2 D dt / dx**2 + mu dt > 1``.
    DivergenceError
        If the new fields are not finite.
    """
    m, p = np.asarray(state.m, float), np.asarray(state.p, float)
    grid = SpatialGrid(m.size)
    _check_inputs(params, D, dt, grid)
    src = discrete_source(grid, params.x_M, params.epsilon)
    gate = discrete_indicator(grid, params.l)
    r = D * dt / grid.dx ** 2

    def lap(u):
        out = np.empty_like(u)
        out[1:-1] = u[:-2] - 2.0 * u[1:-1] + u[2:]
        out[0] = 2.0 * (u[1] - u[0])
        out[-1] = 2.0 * (u[-2] - u[-1])
        return out

    decay = 1.0 - params.mu * dt
    m_new = decay * m + r * lap(m) + dt * params.alpha_m * src * hill(np.maximum(p, 0.0), params.h)
    p_new = decay * p + r * lap(p) + dt * params.alpha_p * gate * m
    if not (np.all(np.isfinite(m_new)) and np.all(np.isfinite(p_new))):
        raise DivergenceError("non-finite values after time step")
    return ConcentrationState(state.t + dt, m_new, p_new)


@numba.njit(cache=True)
def _ipow(x, n):
    out = 1.0
    for _ in range(n):
        out *= x
    return out


@numba.njit(cache=True, fastmath=True)
def _advance(m0, p0, src, conv, r, dt, decay, am, h, nsteps, bm, bp, viol, track):
    """Take ``nsteps`` Euler steps, updating ``m0`` and ``p0`` in place.

    With ``track`` set, ``viol`` accumulates after every step the total
    amount by which the fields leave ``[0, bm]`` and ``[0, bp]``; the sums are
    branch-free so the loop still vectorizes.
    """
    n = m0.shape[0]
    m = m0.copy()
    p = p0.copy()
    mn = np.empty(n)
    pn = np.empty(n)
    j0 = 0
    j1 = n
    while j0 < n and src[j0] == 0.0:
        j0 += 1
    while j1 > j0 and src[j1 - 1] == 0.0:
        j1 -= 1
    for _ in range(nsteps):
        mn[0] = decay * m[0] + 2.0 * r * (m[1] - m[0])
        pn[0] = decay * p[0] + 2.0 * r * (p[1] - p[0]) + conv[0] * m[0]
        mn[n - 1] = decay * m[n - 1] + 2.0 * r * (m[n - 2] - m[n - 1])
        pn[n - 1] = decay * p[n - 1] + 2.0 * r * (p[n - 2] - p[n - 1]) + conv[n - 1] * m[n - 1]
        for i in range(1, n - 1):
            mn[i] = decay * m[i] + r * (m[i - 1] - 2.0 * m[i] + m[i + 1])
            pn[i] = decay * p[i] + r * (p[i - 1] - 2.0 * p[i] + p[i + 1]) + conv[i] * m[i]
        for i in range(j0, j1):
            mn[i] += dt * am * src[i] / (1.0 + _ipow(p[i], h))
        if track:
            a = 0.0
            b = 0.0
            c = 0.0
            d = 0.0
            for i in range(n):
                x = mn[i]
                y = pn[i]
                a += abs(x) - x
                b += abs(y) - y
                c += (x - bm) + abs(x - bm)
                d += (y - bp) + abs(y - bp)
            viol[0] += a
            viol[1] += b
            viol[2] += c
            viol[3] += d
        m, mn = mn, m
        p, pn = pn, p
    m0[:] = m
    p0[:] = p


def simulate(params: ModelParams, D: float, t_end: float, grid: SpatialGrid | None = None,
             sample_every: float = 1.0, initial: ConcentrationState | None = None,
             snapshot_times=(), dt: float | None = None,
             check_every_step: bool = False) -> Trajectory:
    """Integrate from ``initial`` (zero fields by default) up to ``t_end``.

    Parameters
    ----------
    grid : SpatialGrid, optional
        Defaults to 2001 nodes.
    sample_every : float
        Interval between samples of ``M`` and ``P``; the time step is reduced
        so that it divides this interval.
    snapshot_times : sequence of float
        Times at which full fields are stored (rounded to the sample grid).
    dt : float, optional
        Upper bound on the time step; defaults to :func:`stable_dt`.
    check_every_step : bool
        Verify the invariant region after every time step rather than at
        every sample (roughly 2.5 times slower).

    Raises
    ------
    ConfigurationError
        Invalid ``t_end``, sampling interval, or unstable time step.
    DivergenceError
        Non-finite fields or a breach of the invariant region.
    """
    grid = grid or SpatialGrid(2001)
    if not (np.isfinite(t_end) and t_end > 0):
        raise ConfigurationError(f"t_end must be positive, got {t_end!r}")
    if not (np.isfinite(sample_every) and 0 < sample_every <= t_end):
        raise ConfigurationError("sample_every must lie in (0, t_end]")
    if not (np.isfinite(D) and D > 0):
        raise ConfigurationError(f"D must be positive, got {D!r}")
    dt_max = stable_dt(grid, D) if dt is None else dt
    sub = max(1, math.ceil(sample_every / dt_max - 1e-9))
    dt = sample_every / sub
    _check_inputs(params, D, dt, grid)

    src = discrete_source(grid, params.x_M, params.epsilon)
    conv = params.alpha_p * dt * discrete_indicator(grid, params.l)
    r = D * dt / grid.dx ** 2
    decay = 1.0 - params.mu * dt
    if initial is None:
        m = np.zeros(grid.n_nodes)
        p = np.zeros(grid.n_nodes)
        t0 = 0.0
    else:
        m = np.array(initial.m, dtype=float)
        p = np.array(initial.p, dtype=float)
        t0 = float(initial.t)
        if m.shape != (grid.n_nodes,) or p.shape != (grid.n_nodes,):
            raise ConfigurationError("initial fields do not match the grid")
        if np.any(m < 0) or np.any(p < 0):
            raise ConfigurationError("initial fields must be non-negative")

    bounds = invariant_bounds(params, src)
    started_inside = m.max() <= bounds[0] and p.max() <= bounds[1]
    n_samples = int(round(t_end / sample_every))
    snap_idx = {int(round(t / sample_every)): t for t in snapshot_times}
    w = grid.weights
    times = t0 + sample_every * np.arange(n_samples + 1)
    M = np.empty(n_samples + 1)
    P = np.empty(n_samples + 1)
    M[0], P[0] = w @ m, w @ p
    snaps = {}
    if 0 in snap_idx:
        snaps[float(times[0])] = ConcentrationState(float(times[0]), m.copy(), p.copy())
    ext = [m.min(), p.min(), m.max(), p.max()]
    viol = np.zeros(4)
    for k in range(1, n_samples + 1):
        _advance(m, p, src, conv, r, dt, decay, params.alpha_m, params.h, sub,
                 bounds[0], bounds[1], viol, check_every_step)
        lo_m, lo_p, hi_m, hi_p = m.min(), p.min(), m.max(), p.max()
        if not np.isfinite(hi_m + hi_p + lo_m + lo_p):
            raise DivergenceError(f"non-finite fields at t = {times[k]:g}")
        ext = [min(ext[0], lo_m), min(ext[1], lo_p), max(ext[2], hi_m), max(ext[3], hi_p)]
        M[k], P[k] = w @ m, w @ p
        if k in snap_idx:
            snaps[float(times[k])] = ConcentrationState(float(times[k]), m.copy(), p.copy())
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(p))):
        raise DivergenceError("non-finite fields at the final time")
    traj = Trajectory(D, dt, grid, times, M, P, ConcentrationState(float(times[-1]), m, p),
                      snaps, tuple(float(v) for v in ext), bounds,
                      tuple(float(v) for v in viol) if check_every_step else None)
    if started_inside and not traj.within_invariant_region():
        raise DivergenceError(f"invariant region violated: extrema {traj.extrema}, bounds {bounds}")
    return traj


def _peak_to_peak(values):
    return float(np.max(values) - np.min(values))


def classify(traj: Trajectory, window_fraction: float = 0.5,
             threshold: float = OSCILLATION_THRESHOLD,
             decay_ratio: float = DECAY_RATIO) -> AttractorClass:
    """Decide between a steady state and sustained oscillations.

    The window is the last ``window_fraction`` of the samples of ``M``.  A run
    is oscillatory when the relative peak-to-peak amplitude in the window
    exceeds ``threshold`` and the oscillation is not dying out, i.e. the
    amplitude in the second half of the window is at least ``decay_ratio``
    times the amplitude in the first half.

    Raises
    ------
    InsufficientDataError
        If the window holds fewer than 10 samples.
    """
    if not 0 < window_fraction <= 1:
        raise ConfigurationError("window_fraction must lie in (0, 1]")
    n = len(traj.M)
    k = int(math.floor(n * window_fraction))
    if k < 10:
        raise InsufficientDataError(f"classification window holds {k} samples (< 10)")
    win = traj.M[n - k:]
    t = traj.times[n - k:]
    mean = float(np.mean(win))
    rel = _peak_to_peak(win) / mean if mean > 0 else 0.0
    half = k // 2
    a1, a2 = _peak_to_peak(win[:half]), _peak_to_peak(win[half:])
    ratio = a2 / a1 if a1 > 0 else (0.0 if a2 == 0 else math.inf)
    if rel <= threshold or ratio < decay_ratio:
        return AttractorClass("steady", rel, None, ratio)
    peaks, _ = find_peaks(win, prominence=0.25 * _peak_to_peak(win))
    period = float(np.mean(np.diff(t[peaks]))) if len(peaks) >= 2 else None
    return AttractorClass("oscillatory", rel, period, ratio)


def late_time_profile(traj: Trajectory, window_fraction: float = 0.5) -> ConcentrationState:
    """Final fields of a run that settled to a steady state.

    Raises
    ------
    NotSteadyError
        If the run is classified as oscillatory.
    """
    cls = classify(traj, window_fraction)
    if cls.kind != "steady":
        raise NotSteadyError("trajectory is oscillatory; no steady profile")
    return traj.final


def write_trajectory_csv(path, traj: Trajectory) -> None:
    from .io import write_csv
    write_csv(path, ("t", "M", "P"), zip(traj.times, traj.M, traj.P))


def write_snapshot_csv(path, grid: SpatialGrid, state: ConcentrationState) -> None:
    from .io import write_csv
    write_csv(path, ("x", "m", "p"), zip(grid.x, state.m, state.p))
