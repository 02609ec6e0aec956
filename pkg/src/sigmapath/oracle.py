"""Brute-force exact expectations of path functionals.

This module is the trust anchor for the exact test suites: every derived
value elsewhere can be recomputed here by full path enumeration or by
exact distribution propagation over (state, counter) pairs.  The two
backends are deliberately redundant so each validates the other.  All
arithmetic is exact rational; no float path exists in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .chain import MarkovKernel, PathRecord, delta, propagate
from .errors import ConfigurationError, ResourceBudgetError


@dataclass(frozen=True)
class CounterFunctional:
    """A path functional that only reads (final state, local-time counters).

    ``fn(state, counts)`` receives the counts of visits (times 0..n
    inclusive) to ``tracked`` sites.  Functionals of this shape can be
    evaluated by both oracle backends.  ``cap`` declares that the
    functional does not distinguish counts above the bound (e.g. survival
    indicators need cap=1), which keeps the propagation support small.
    """

    tracked: tuple
    fn: Callable
    description: str = ""
    cap: int | None = None

    def __call__(self, state, counts):
        if self.cap is not None:
            counts = tuple(min(c, self.cap) for c in counts)
        return self.fn(state, counts)


def _enumerate_expectation(kernel: MarkovKernel, x, n: int, functional,
                           leaf_budget: int) -> Fraction:
    branching = max(len(kernel.neighbors(x)), 2)
    if branching ** n > leaf_budget:
        raise ResourceBudgetError(
            f"enumeration needs up to {branching ** n} leaves, budget {leaf_budget}")
    counter_mode = isinstance(functional, CounterFunctional)
    tracked = tuple(getattr(functional, "tracked", ()))

    total = Fraction(0)
    # Depth-first over the full path tree, sharing the prefix buffer.
    path = [x]
    counts = [tuple(1 if x == s else 0 for s in tracked)]
    stack = [(iter(kernel.neighbors(x) if n > 0 else ()), Fraction(1))]
    if n == 0:
        if counter_mode:
            return Fraction(functional(x, counts[0]))
        return Fraction(functional(PathRecord([x], tracked=tracked)))
    while stack:
        it, prob = stack[-1]
        advanced = False
        for nxt, p in it:
            path.append(nxt)
            if counter_mode:
                counts.append(tuple(
                    c + 1 if nxt == s else c
                    for c, s in zip(counts[-1], tracked)))
            if len(path) == n + 1:
                if counter_mode:
                    total += prob * p * Fraction(functional(nxt, counts[-1]))
                    counts.pop()
                else:
                    rec = PathRecord(list(path), tracked=tracked)
                    total += prob * p * Fraction(functional(rec))
                path.pop()
            else:
                stack.append((iter(kernel.neighbors(nxt)), prob * p))
                advanced = True
                break
        if not advanced:
            stack.pop()
            path.pop()
            if counter_mode and counts:
                counts.pop()
    return total


def _propagate_expectation(kernel: MarkovKernel, x, n: int,
                           functional: CounterFunctional) -> Fraction:
    tracked = functional.tracked
    dist = propagate(kernel, delta(x, tracked), n, tracked=tracked,
                     counter_cap=functional.cap)
    total = Fraction(0)
    for key, mass in dist.items():
        state, counts = key if tracked else (key, ())
        value = functional(state, counts)
        if value:
            total += mass * Fraction(value)
    return total


def exact_expectation(kernel: MarkovKernel, x, n: int, functional,
                      method: str = "auto",
                      leaf_budget: int = 10_000_000) -> Fraction:
    """Exact E_x[functional] over length-n paths.

    ``functional`` is either a :class:`CounterFunctional` (both backends
    apply) or a callable on :class:`PathRecord` (enumeration only; attach
    tracked sites via ``functional.tracked`` if needed).
    """
    if n < 0:
        raise ConfigurationError("n must be >= 0")
    counter_mode = isinstance(functional, CounterFunctional)
    if method == "auto":
        method = "propagate" if counter_mode else "enumerate"
    if method == "propagate":
        if not counter_mode:
            raise ConfigurationError(
                "propagation backend needs a CounterFunctional")
        return _propagate_expectation(kernel, x, n, functional)
    if method == "enumerate":
        if not counter_mode and not callable(functional):
            raise ConfigurationError("functional must be callable")
        return _enumerate_expectation(kernel, x, n, functional, leaf_budget)
    raise ConfigurationError(f"unknown oracle method {method!r}")


@dataclass(frozen=True)
class ProbeResult:
    limit: float | None
    rate: float | None
    tag: str


def limit_probe(values) -> ProbeResult:
    """Richardson-style extrapolation from three values at N, 2N, 4N.

    Assumes a geometric (or power-law, which looks geometric on dyadic
    samples) tail.  Never a ground truth: only a divergence flag.
    """
    v1, v2, v3 = [Fraction(v) if isinstance(v, int) else v for v in values]
    d1 = v2 - v1
    d2 = v3 - v2
    if d1 == 0 and d2 == 0:
        return ProbeResult(float(v3), 0.0, "converged")
    if d1 == 0 or (d1 > 0) != (d2 > 0) or abs(d2) >= abs(d1):
        return ProbeResult(None, None, "non-monotone")
    ratio = d2 / d1
    limit = v3 + d2 * ratio / (1 - ratio)
    return ProbeResult(float(limit), float(ratio), "geometric")
