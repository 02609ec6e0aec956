"""Monte-Carlo samplers for the continuous-state checks.

Four path families:

* Donsker-scaled simple random walk, whose lattice local time
  (zero count / sqrt(n)) and last zero are exact path statistics;
* squared-Bessel bridges-free transition sampling: from value v over a
  step d the next value is Gamma(d/2 + P, 2d_t) with P ~ Poisson(v/(2d_t)),
  which removes all time-discretisation bias from marginals;
* planar Brownian paths with principal-branch winding accumulation;
* the transient log-Bessel representation: a 3-d Bessel driver rho on an
  intrinsic grid, the clock t(h) = int exp(2 rho) dh and its inverse H_t.

Reproducibility: every ensemble derives its generator from
SeedSequence((master_seed, *stream_key)); lattice ensembles additionally
spawn one child stream per path index, so estimates are bit-identical
regardless of how the work is scheduled.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, GridTooCoarseError, ResourceBudgetError


# ---------------------------------------------------------------------------
# Estimation statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MCEstimate:
    n: int
    mean: float
    stderr: float


def stats(samples) -> MCEstimate:
    """Mean and standard error (sample standard deviation / sqrt(count))."""
    arr = np.asarray(samples, dtype=float)
    if arr.size < 2:
        raise ConfigurationError("need at least 2 samples")
    return MCEstimate(arr.size, float(arr.mean()),
                      float(arr.std(ddof=1) / math.sqrt(arr.size)))


def ks_distance(samples_a, samples_b) -> float:
    """Two-sample Kolmogorov-Smirnov sup-distance of empirical CDFs."""
    a = np.sort(np.asarray(samples_a, dtype=float))
    b = np.sort(np.asarray(samples_b, dtype=float))
    if a.size < 2 or b.size < 2:
        raise ConfigurationError("need at least 2 samples on each side")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def _key_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    digest = hashlib.sha256(repr(part).encode()).digest()
    return int.from_bytes(digest[:4], "little")


def stream_seed(master_seed: int, *key) -> np.random.SeedSequence:
    """Deterministic stream id: label parts may be ints, floats or strings."""
    return np.random.SeedSequence(
        (int(master_seed),) + tuple(_key_int(p) for p in key))


def stream(master_seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(stream_seed(master_seed, *key))


# ---------------------------------------------------------------------------
# Lattice Brownian motion
# ---------------------------------------------------------------------------

@dataclass
class LatticePath:
    """One Donsker-scaled walk: X_{k/n} = S_k / sqrt(n) for k <= n*t."""

    n: int
    t: float
    positions: np.ndarray  # S_1..S_m (time 0 implicit, S_0 = 0)

    @property
    def scale(self) -> float:
        return math.sqrt(self.n)

    def _k(self, t: float) -> int:
        return int(round(self.n * t))

    def x(self, t: float | None = None) -> float:
        k = self._k(self.t if t is None else t)
        return (self.positions[k - 1] if k > 0 else 0) / self.scale

    def zero_count(self, t: float | None = None) -> int:
        k = self._k(self.t if t is None else t)
        return 1 + int(np.count_nonzero(self.positions[:k] == 0))

    def local_time(self, t: float | None = None) -> float:
        return self.zero_count(t) / self.scale

    def last_zero(self, t: float | None = None) -> float:
        k = self._k(self.t if t is None else t)
        zeros = np.flatnonzero(self.positions[:k] == 0)
        return (zeros[-1] + 1) / self.n if zeros.size else 0.0

    def smax(self, t: float | None = None) -> float:
        k = self._k(self.t if t is None else t)
        m = int(self.positions[:k].max()) if k > 0 else 0
        return max(m, 0) / self.scale


def sample_lattice_bm(n: int, t: float, rng,
                      step_budget: int = 50_000_000) -> LatticePath:
    """One scaled simple-random-walk path with n steps per unit time."""
    m = int(round(n * t))
    if m > step_budget:
        raise ResourceBudgetError(f"{m} steps exceed budget {step_budget}")
    if m == 0:
        return LatticePath(n, t, np.zeros(0, dtype=np.int64))
    steps = rng.integers(0, 2, size=m, dtype=np.int8).astype(np.int32) * 2 - 1
    return LatticePath(n, t, np.cumsum(steps))


def lattice_ensemble(n: int, ts: Sequence[float], n_paths: int,
                     master_seed: int, stream_key: tuple = (),
                     step_budget: int = 200_000_000_000) -> dict:
    """Path statistics at the checkpoints ``ts`` for ``n_paths`` walks.

    Returns arrays of shape (n_paths, len(ts)) under keys ``x`` (signed
    endpoint), ``absx``, ``local_time``, ``last_zero`` and ``smax``.
    One child generator per path index.
    """
    ts = sorted(ts)
    m = int(round(n * max(ts)))
    if m * n_paths > step_budget:
        raise ResourceBudgetError("lattice ensemble exceeds step budget")
    ks = np.array([int(round(n * t)) for t in ts])
    children = stream_seed(master_seed, *stream_key).spawn(n_paths)
    shape = (n_paths, len(ts))
    out = {key: np.zeros(shape) for key in
           ("x", "absx", "local_time", "last_zero", "smax")}
    sqrt_n = math.sqrt(n)
    for i in range(n_paths):
        rng = np.random.default_rng(children[i])
        steps = rng.integers(0, 2, size=m, dtype=np.int8).astype(np.int32) * 2 - 1
        s = np.cumsum(steps)
        zeros = np.flatnonzero(s == 0) + 1  # times of zeros among 1..m
        runmax = np.maximum.accumulate(s)
        for j, k in enumerate(ks):
            if k == 0:
                out["local_time"][i, j] = 1 / sqrt_n
                continue
            xk = s[k - 1]
            out["x"][i, j] = xk / sqrt_n
            out["absx"][i, j] = abs(xk) / sqrt_n
            nz = np.searchsorted(zeros, k, side="right")
            out["local_time"][i, j] = (1 + nz) / sqrt_n
            out["last_zero"][i, j] = (zeros[nz - 1] / n) if nz else 0.0
            out["smax"][i, j] = max(int(runmax[k - 1]), 0) / sqrt_n
    return out


# ---------------------------------------------------------------------------
# Squared Bessel / Bessel paths of index -alpha
# ---------------------------------------------------------------------------

@dataclass
class BesselPath:
    """Bessel path of index -alpha (dimension d = 2(1-alpha)) on a grid."""

    alpha: float
    grid: np.ndarray
    values: np.ndarray  # R_{t_i} >= 0

    def occupation_below(self, eps: float, t: float) -> float:
        """Lebesgue time spent at height <= eps up to time t (left rule)."""
        dt = np.diff(self.grid)
        mask = self.grid[:-1] <= t
        below = self.values[:-1] <= eps
        return float(np.sum(dt * (mask & below)))


def _besq_transition(values_sq: np.ndarray, d: float, dt: float, rng):
    """Exact squared-Bessel step: Gamma(d/2 + Poisson(v/(2 dt)), 2 dt)."""
    pois = rng.poisson(values_sq / (2.0 * dt))
    return rng.gamma(d / 2.0 + pois, 2.0 * dt)


def sample_besq(alpha: float, grid, rng) -> BesselPath:
    """One Bessel(-alpha) path from 0 by exact squared-Bessel transitions."""
    if not 0 < alpha < 1:
        raise ConfigurationError("alpha must lie in (0,1)")
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0:
        raise ConfigurationError("grid must start at 0")
    d = 2.0 * (1.0 - alpha)
    sq = np.zeros(len(grid))
    for i in range(1, len(grid)):
        dt = grid[i] - grid[i - 1]
        sq[i] = _besq_transition(np.asarray([sq[i - 1]]), d, dt, rng)[0]
    return BesselPath(alpha, grid, np.sqrt(sq))


def besq_ensemble(alpha: float, grid, n_paths: int, master_seed: int,
                  stream_key: tuple = ()) -> np.ndarray:
    """R values, shape (n_paths, len(grid)); exact transitions, vectorised."""
    if not 0 < alpha < 1:
        raise ConfigurationError("alpha must lie in (0,1)")
    grid = np.asarray(grid, dtype=float)
    d = 2.0 * (1.0 - alpha)
    rng = stream(master_seed, *stream_key)
    sq = np.zeros((n_paths, len(grid)))
    for i in range(1, len(grid)):
        dt = grid[i] - grid[i - 1]
        sq[:, i] = _besq_transition(sq[:, i - 1], d, dt, rng)
    return np.sqrt(sq)


def bessel_local_time(path: BesselPath, eps: float, t: float | None = None):
    """Occupation estimate of the local time at 0 up to time t.

    Inverts the occupation formula: the speed measure of [0, eps] is
    eps^{2-2a}/(a(2-2a))^{-1}..., so
    L_t = alpha (2-2alpha) eps^{2 alpha - 2} * |{s <= t : R_s <= eps}|
    in the limit eps -> 0.  Returns ``(estimate, degraded)`` where the flag
    marks zero occupation despite a nonzero expected value.
    """
    a = path.alpha
    if t is None:
        t = float(path.grid[-1])
    occ = path.occupation_below(eps, t)
    est = a * (2 - 2 * a) * eps ** (2 * a - 2) * occ
    return est, (occ == 0.0 and t > 0)


def local_time_richardson(values: np.ndarray, grid: np.ndarray, alpha: float,
                          eps0: float, t: float) -> np.ndarray:
    """Per-path local-time estimates, Richardson-extrapolated in eps.

    The occupation estimator carries an O(eps^{2 alpha}) bias, so two
    levels eps0, eps0/2 combine as
    (2^{2a} L(eps0/2) - L(eps0)) / (2^{2a} - 1).
    """
    dt = np.diff(grid)
    mask_t = grid[:-1] <= t
    heights = values[:, :-1]
    out = []
    for eps in (eps0, eps0 / 2.0):
        occ = ((heights <= eps) & mask_t) @ dt
        out.append(alpha * (2 - 2 * alpha) * eps ** (2 * alpha - 2) * occ)
    w = 2.0 ** (2 * alpha)
    return (w * out[1] - out[0]) / (w - 1)


# ---------------------------------------------------------------------------
# Planar Brownian motion
# ---------------------------------------------------------------------------

@dataclass
class PlanarPath:
    times: np.ndarray
    positions: np.ndarray  # complex
    theta: np.ndarray      # cumulative winding (0 where undefined)


def sample_planar_bm(n: int, t: float, rng, start: complex = 0j,
                     winding_guard: float = math.pi - 0.05) -> PlanarPath:
    """Gaussian-increment planar path; winding accumulated per step.

    The winding angle uses principal-branch increments and therefore
    requires the path to stay away from 0 (start on the unit circle for
    winding studies).  Any single-step increment reaching the guard
    threshold raises: the grid cannot resolve the winding.
    """
    m = int(round(n * t))
    times = np.arange(m + 1) / n
    if m == 0:
        return PlanarPath(times, np.array([start]), np.zeros(1))
    incs = (rng.normal(size=m) + 1j * rng.normal(size=m)) / math.sqrt(n)
    z = start + np.cumsum(incs)
    z = np.concatenate([[start], z])
    theta = np.zeros(m + 1)
    if start != 0:
        dth = np.angle(z[1:] / z[:-1])
        if np.max(np.abs(dth)) >= winding_guard:
            raise GridTooCoarseError(
                "winding increment reached the principal-branch guard")
        theta[1:] = np.cumsum(dth)
    return PlanarPath(times, z, theta)


def planar_endpoints(t: float, n_paths: int, master_seed: int,
                     stream_key: tuple = ()) -> np.ndarray:
    """X_t marginals from 0 (exact law: isotropic Gaussian, variance t per axis)."""
    rng = stream(master_seed, *stream_key)
    return math.sqrt(t) * (rng.normal(size=n_paths) + 1j * rng.normal(size=n_paths))


def reverse_winding(path: PlanarPath) -> float:
    """Total winding of the reversed path (equals -theta exactly)."""
    z = path.positions[::-1]
    return float(np.sum(np.angle(z[1:] / z[:-1])))


# ---------------------------------------------------------------------------
# The transient log-Bessel process via its time change
# ---------------------------------------------------------------------------

@dataclass
class RLogDriver:
    """Bessel(3) driver rho on the intrinsic grid plus the clock t(h).

    The radial part of the transient planar process is R_t = exp(rho_{H_t})
    where H is the inverse of t(h) = int_0^h exp(2 rho_u) du.  The driver
    starts at 0 and the clock is strictly increasing, so R_t > 1 for all
    t > 0 along every path.
    """

    h_grid: np.ndarray
    rho: np.ndarray
    clock: np.ndarray

    def H_of_t(self, t: float) -> float:
        if t > self.clock[-1]:
            raise ResourceBudgetError(
                f"requested t={t} beyond simulated clock {self.clock[-1]:.3g}")
        i = int(np.searchsorted(self.clock, t))
        if i == 0:
            return 0.0
        c0, c1 = self.clock[i - 1], self.clock[i]
        frac = (t - c0) / (c1 - c0) if c1 > c0 else 0.0
        return float(self.h_grid[i - 1] + frac * (self.h_grid[i] - self.h_grid[i - 1]))

    def R_of_t(self, t: float) -> float:
        h = self.H_of_t(t)
        i = min(int(round(h / (self.h_grid[1] - self.h_grid[0]))), len(self.rho) - 1)
        return float(math.exp(self.rho[i]))

    def first_passage(self, level: float = 1.0) -> float:
        idx = np.flatnonzero(self.rho >= level)
        if idx.size == 0:
            raise ResourceBudgetError("driver never reached the level")
        return float(self.h_grid[idx[0]])


def _bessel3_chunk(start: np.ndarray, dh: float, steps: int, rng) -> np.ndarray:
    """Exact Bessel(3) increments: norm of a 3-d Gaussian displacement."""
    n = start.shape[0]
    out = np.empty((n, steps))
    cur = start
    for j in range(steps):
        g = rng.normal(scale=math.sqrt(dh), size=(n, 3))
        g[:, 0] += cur
        cur = np.sqrt(np.sum(g * g, axis=1))
        out[:, j] = cur
    return out


def sample_r_log(dh: float, t_target: float, rng,
                 max_h: float = 400.0) -> RLogDriver:
    """One driver path simulated until the clock covers ``t_target``."""
    rho = [0.0]
    clock = [0.0]
    cur = np.zeros(1)
    h = 0.0
    while clock[-1] < t_target:
        if h > max_h:
            raise ResourceBudgetError("driver grid budget exhausted")
        chunk = _bessel3_chunk(cur, dh, 256, rng)[0]
        for v in chunk:
            # trapezoid in exp(2 rho)
            clock.append(clock[-1] + dh * 0.5 * (math.exp(2 * rho[-1]) + math.exp(2 * v)))
            rho.append(v)
            h += dh
            if clock[-1] >= t_target:
                break
        cur = np.array([rho[-1]])
    grid = np.arange(len(rho)) * dh
    return RLogDriver(grid, np.array(rho), np.array(clock))


def h_ensemble(dh: float, t_target: float, n_paths: int, master_seed: int,
               stream_key: tuple = (), max_h: float = 400.0) -> np.ndarray:
    """H_{t_target} across an ensemble of drivers (vectorised, chunked)."""
    rng = stream(master_seed, *stream_key)
    cur = np.zeros(n_paths)
    log_t = math.log(t_target)
    clock = np.zeros(n_paths)
    prev_exp = np.ones(n_paths)
    h_hit = np.full(n_paths, -1.0)
    h = 0.0
    while np.any(h_hit < 0):
        if h > max_h:
            raise ResourceBudgetError("driver grid budget exhausted")
        chunk = _bessel3_chunk(cur, dh, 128, rng)
        for j in range(chunk.shape[1]):
            h += dh
            v = chunk[:, j]
            # log-sum trapezoid, stable for large rho
            step_exp = np.exp(np.minimum(2 * v, 2 * log_t + 6))
            new_clock = clock + dh * 0.5 * (prev_exp + step_exp)
            crossing = (h_hit < 0) & (new_clock >= t_target)
            if np.any(crossing):
                c0, c1 = clock[crossing], new_clock[crossing]
                frac = (t_target - c0) / np.maximum(c1 - c0, 1e-300)
                h_hit[crossing] = h - dh + frac * dh
            clock, prev_exp = new_clock, step_exp
        cur = chunk[:, -1]
    return h_hit


def bessel3_first_passage(dh: float, n_paths: int, master_seed: int,
                          stream_key: tuple = (), level: float = 1.0,
                          max_h: float = 64.0) -> np.ndarray:
    """First-passage times of Bessel(3) from 0 to ``level`` on a dh-grid."""
    rng = stream(master_seed, *stream_key)
    cur = np.zeros(n_paths)
    hit = np.full(n_paths, -1.0)
    h = 0.0
    while np.any(hit < 0):
        if h > max_h:
            raise ResourceBudgetError("first-passage budget exhausted")
        chunk = _bessel3_chunk(cur, dh, 128, rng)
        for j in range(chunk.shape[1]):
            h += dh
            crossed = (hit < 0) & (chunk[:, j] >= level)
            hit[crossed] = h
        cur = chunk[:, -1]
    return hit


def euler_r_log(dt: float, t: float, rng, delta: float = 1e-3) -> np.ndarray:
    """Euler scheme for dR = dB + (1/R)(1/2 + 1/log R) ds from R_0 = 1 + delta.

    Only a consistency probe: the drift is singular at the true start
    R_0 = 1, which is why production sampling goes through the time-change
    representation.
    """
    m = int(round(t / dt))
    r = np.empty(m + 1)
    r[0] = 1.0 + delta
    sq = math.sqrt(dt)
    for i in range(m):
        drift = (0.5 + 1.0 / math.log(r[i])) / r[i]
        r[i + 1] = max(r[i] + sq * rng.normal() + drift * dt, 1.0 + 1e-12)
    return r
