"""Nonnegative functions vanishing at a reference point and harmonic elsewhere.

Closed forms for the catalog chains, the Green-difference series
S_N(x) = sum_{k<=N} [P_{x0}(X_k = x0) - P_x(X_k = x0)] whose limit is such
a function, an exact-residual harmonicity checker, and the asymptotic
equivalence falsifier used to compare two candidates.

The Z^2 closed form is the lattice potential kernel, kept exact as
``a + b/pi`` with rational a, b: the table is filled column by column from
the seeds a(0,0)=0, a(1,0)=1 and the diagonal series
a(n,n) = (4/pi) * (1 + 1/3 + ... + 1/(2n-1)), using the mean-value
relation at off-origin points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .chain import MarkovKernel, catalog, delta, propagate
from .errors import ConfigurationError, ResourceBudgetError


@dataclass(frozen=True)
class HarmonicFn:
    """A function phi >= 0 with phi(x0) = 0, harmonic off x0.

    ``func`` evaluates exactly (Fraction, int, or QPi for Z^2); harmonicity
    off the reference point is a certified property, checked by
    :func:`check_harmonic` on finite windows.
    """

    kernel: MarkovKernel
    x0: object
    name: str
    func: Callable

    def __call__(self, state):
        return self.func(state)


@dataclass(frozen=True)
class QPi:
    """Exact number of the form q + qpi / pi with rational coefficients."""

    q: Fraction
    qpi: Fraction

    def __add__(self, other):
        if isinstance(other, QPi):
            return QPi(self.q + other.q, self.qpi + other.qpi)
        return QPi(self.q + Fraction(other), self.qpi)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, QPi) else QPi(-Fraction(other), Fraction(0)))

    def __rsub__(self, other):
        return QPi(Fraction(other), Fraction(0)) - self

    def __neg__(self):
        return QPi(-self.q, -self.qpi)

    def __mul__(self, other):
        f = Fraction(other)
        return QPi(self.q * f, self.qpi * f)

    __rmul__ = __mul__

    def __float__(self):
        return float(self.q) + float(self.qpi) / math.pi

    def is_zero(self) -> bool:
        return self.q == 0 and self.qpi == 0


class PotentialKernelZ2:
    """Exact potential-kernel table for the symmetric walk on Z^2.

    Values are :class:`QPi`.  The table covers the triangle
    0 <= n <= m <= radius and is extended on demand; all other points are
    reached through the dihedral symmetries a(m,n) = a(|m|,|n|) = a(n,m).
    """

    def __init__(self, max_radius: int = 4096):
        self.max_radius = max_radius
        self._cols: list[dict[int, QPi]] = [
            {0: QPi(Fraction(0), Fraction(0))},
            {0: QPi(Fraction(1), Fraction(0)), 1: QPi(Fraction(0), Fraction(4))},
        ]
        self._diag = [Fraction(0), Fraction(4)]  # qpi coefficient of a(n,n)

    def _extend_to(self, m: int) -> None:
        if m > self.max_radius:
            raise ResourceBudgetError(
                f"potential-kernel radius {m} exceeds budget {self.max_radius}")
        while len(self._cols) <= m:
            mm = len(self._cols)  # building column mm from mm-1, mm-2
            prev, prev2 = self._cols[mm - 1], self._cols[mm - 2]
            col: dict[int, QPi] = {}
            self._diag.append(self._diag[-1] + Fraction(4, 2 * mm - 1))
            col[mm] = QPi(Fraction(0), self._diag[mm])
            # relation at (mm-1, mm-1): 2 a(mm, mm-1) + 2 a(mm-2, mm-1) = 4 a(mm-1, mm-1)
            col[mm - 1] = 2 * self._cols[mm - 1][mm - 1] - prev[mm - 2] if mm >= 2 else None
            for n in range(mm - 2, -1, -1):
                below = prev[n - 1] if n >= 1 else prev[1]
                col[n] = 4 * prev[n] - prev2[n] - prev[n + 1] - below
            self._cols.append(col)

    def value(self, xy) -> QPi:
        m, n = sorted((abs(xy[0]), abs(xy[1])), reverse=True)
        self._extend_to(m)
        return self._cols[m][n]


def _tree_phi(a_seq: tuple[int, ...]):
    def phi(node: tuple[int, ...]) -> int:
        p = len(node)
        for i, bit in enumerate(node):
            ref = a_seq[i] if i < len(a_seq) else 0
            if bit != ref:
                p = i
                break
        return 2 ** p - 1
    return phi


def phi_closed(kernel: MarkovKernel, variant: str = "default",
               a_seq: tuple[int, ...] = ()) -> HarmonicFn:
    """Closed-form catalog harmonic function for ``kernel``.

    Variants: srw_z supports ``abs`` (default), ``pos``, ``neg``;
    bang_bang has the single variant 2^x - 1; binary_tree takes the
    defining bit sequence ``a_seq`` (a finite prefix, extended by zeros);
    srw_z2 has the exact potential kernel (variant ``potential``).
    """
    name = kernel.name
    if name == "srw_z":
        table = {
            "default": ("abs(x)", lambda x: abs(x)),
            "abs": ("abs(x)", lambda x: abs(x)),
            "pos": ("x_+", lambda x: max(x, 0)),
            "neg": ("x_-", lambda x: max(-x, 0)),
        }
        if variant not in table:
            raise ConfigurationError(f"srw_z has no variant {variant!r}")
        label, fn = table[variant]
        return HarmonicFn(kernel, 0, f"srw_z:{label}", fn)
    if name == "bang_bang":
        if variant not in ("default", "exp"):
            raise ConfigurationError(f"bang_bang has no variant {variant!r}")
        return HarmonicFn(kernel, 0, "bang_bang:2^x-1", lambda x: 2 ** x - 1)
    if name == "binary_tree":
        if variant not in ("default", "ray"):
            raise ConfigurationError(f"binary_tree has no variant {variant!r}")
        seq = tuple(a_seq)
        if any(b not in (0, 1) for b in seq):
            raise ConfigurationError("a_seq must be a 0/1 sequence")
        return HarmonicFn(kernel, (), f"tree:ray{seq}", _tree_phi(seq))
    if name == "srw_z2":
        if variant not in ("default", "potential"):
            raise ConfigurationError(f"srw_z2 has no variant {variant!r}")
        pk = PotentialKernelZ2()
        return HarmonicFn(kernel, (0, 0), "srw_z2:potential-kernel", pk.value)
    raise ConfigurationError(f"no closed-form harmonic function for {name!r}")


def check_harmonic(kernel: MarkovKernel, fn, window) -> dict:
    """Residual E_x[fn(X_1)] - fn(x) for every x != x0 in the window.

    Exact (Fraction / QPi) when fn evaluates exactly; the reference point,
    if present in the window, is skipped.
    """
    x0 = getattr(fn, "x0", None)
    func = fn if callable(fn) and not isinstance(fn, HarmonicFn) else fn.func
    residuals = {}
    for x in window:
        if x == x0:
            continue
        residuals[x] = kernel.expectation(x, func) - func(x)
    return residuals


def _return_prob_1d(d: int, ks: np.ndarray) -> np.ndarray:
    """P(S_k = -d) for the symmetric walk on Z, vectorised over k."""
    out = np.zeros(len(ks))
    d = abs(d)
    mask = (ks >= d) & ((ks - d) % 2 == 0)
    k = ks[mask].astype(float)
    j = (ks[mask] - d) // 2
    logp = (gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)
            - k * math.log(2.0))
    out[mask] = np.exp(logp)
    return out


def return_probabilities(kernel: MarkovKernel, x, x0, N: int,
                         propagate_budget: int = 4000) -> np.ndarray:
    """P_x(X_k = x0) for k = 0..N.

    Closed binomial forms for srw_z and srw_z2 (the two coordinates of the
    plane walk along the diagonals are independent walks on Z); exact float
    propagation for the other chains, feasible only for small N.
    """
    ks = np.arange(N + 1)
    if kernel.name == "srw_z":
        return _return_prob_1d(x - x0, ks)
    if kernel.name == "srw_z2":
        du = (x[0] + x[1]) - (x0[0] + x0[1])
        dv = (x[0] - x[1]) - (x0[0] - x0[1])
        return _return_prob_1d(du, ks) * _return_prob_1d(dv, ks)
    if N > propagate_budget:
        raise ResourceBudgetError(
            f"no closed form for {kernel.name}: propagation capped at N={propagate_budget}")
    probs = np.zeros(N + 1)
    dist = delta(x)
    probs[0] = 1.0 if x == x0 else 0.0
    dist = {k: float(v) for k, v in dist.items()}
    for k in range(1, N + 1):
        dist = propagate(kernel, dist, 1, float_mode=True)
        probs[k] = dist.get(x0, 0.0)
    return probs


@dataclass(frozen=True)
class GreenSeriesResult:
    value: float
    partials: tuple  # partial sums at N/4, N/2, N
    increment_ratio: float | None

    @property
    def err_ratio_4n(self) -> float | None:
        """Estimated factor by which the truncation error shrinks from N to 4N."""
        if self.increment_ratio is None or self.increment_ratio <= 0:
            return None
        return self.increment_ratio ** 2

    def extrapolate(self) -> float:
        rho = self.increment_ratio
        if rho is None or not 0 < rho < 1:
            return self.value
        return self.value + (self.partials[2] - self.partials[1]) * rho / (1 - rho)


def phi_green_series(kernel: MarkovKernel, x0, x, N: int) -> GreenSeriesResult:
    """Partial sum S_N = sum_{k<=N} [P_{x0}(X_k=x0) - P_x(X_k=x0)].

    Returns the value together with an empirical convergence-rate estimate
    taken from the last dyadic doubling (no proven truncation bound: the
    rate is a diagnostic).  N is rounded down to an even value so that the
    parity oscillation of the summands does not pollute the dyadic rate.
    """
    if N < 4:
        raise ConfigurationError("N must be >= 4")
    N -= N % 2
    p0 = return_probabilities(kernel, x0, x0, N)
    px = return_probabilities(kernel, x, x0, N)
    sums = np.cumsum(p0 - px)
    quarters = [N // 4 - (N // 4) % 2, N // 2, N]
    partials = tuple(float(sums[q]) for q in quarters)
    d1 = partials[1] - partials[0]
    d2 = partials[2] - partials[1]
    ratio = d2 / d1 if d1 != 0 and (d1 > 0) == (d2 > 0) else None
    return GreenSeriesResult(partials[2], partials, ratio)


@dataclass(frozen=True)
class EquivalenceReport:
    worst_ratio: object
    worst_state: object
    tested: int

    def __float__(self):
        return float(self.worst_ratio)


def equivalent(fn1, fn2, threshold, window) -> EquivalenceReport:
    """Worst symmetric ratio deviation max(|f1/f2 - 1|, |f2/f1 - 1|) on
    {x in window : f1(x) + f2(x) >= threshold}.

    A falsifier, not a proof: the asymptotic-equivalence relation
    quantifies over the whole space, so a decreasing sequence of these
    maxima as the threshold grows is only a practical certificate.
    """
    worst = None
    worst_state = None
    tested = 0
    for x in window:
        v1, v2 = fn1(x), fn2(x)
        if v1 + v2 < threshold:
            continue
        tested += 1
        if v1 == 0 or v2 == 0:
            dev = math.inf
        else:
            dev = max(abs(Fraction(v1, v2) - 1), abs(Fraction(v2, v1) - 1)) \
                if isinstance(v1, (int, Fraction)) and isinstance(v2, (int, Fraction)) \
                else max(abs(v1 / v2 - 1), abs(v2 / v1 - 1))
        if worst is None or dev > worst:
            worst, worst_state = dev, x
    if tested == 0:
        raise ConfigurationError(
            f"no states in window with fn1 + fn2 >= {threshold}")
    return EquivalenceReport(worst, worst_state, tested)


def unboundedness_witness(fn: HarmonicFn, candidates, target) -> object:
    """First state among ``candidates`` with fn >= target (None if absent)."""
    for x in candidates:
        v = fn(x)
        if (float(v) if isinstance(v, QPi) else v) >= target:
            return x
    return None
