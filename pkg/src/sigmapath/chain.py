"""Locally finite recurrent Markov chains on countable state spaces.

States are plain hashable encodings: ``int`` for the walks on Z and N,
``(int, int)`` pairs for Z^2, and tuples of bits for binary-tree nodes
(the empty tuple is the root).  Transition probabilities are exact
``Fraction`` values; floats only appear inside the Monte-Carlo sampler
``step``.

The four catalog chains:

* ``srw_z``       -- symmetric nearest-neighbour walk on Z.
* ``bang_bang``   -- walk on N pushed towards 0: p(0,1)=1, p(y,y+1)=1/3,
                     p(y,y-1)=2/3 for y>=1.
* ``binary_tree`` -- walk on the rooted binary tree: from the root each
                     child w.p. 1/2; elsewhere parent w.p. 1/2, each child
                     w.p. 1/4.
* ``srw_z2``      -- symmetric nearest-neighbour walk on Z^2.

Recurrence is a catalog-level assertion, not something checked at run
time: the Z and Z^2 walks are recurrent by the classical random-walk
criteria, the bang-bang walk has strictly negative drift above 0, and the
tree walk projects onto a reflected symmetric walk through its distance
to the root (up-probability 1/2), which returns to 0 infinitely often.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping

from .errors import ConfigurationError, ResourceBudgetError

State = Hashable

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)
QUARTER = Fraction(1, 4)


@dataclass(frozen=True)
class MarkovKernel:
    """A locally finite transition kernel plus bookkeeping metadata.

    ``neighbors(s)`` returns the finite list of ``(state, probability)``
    pairs with exact rational probabilities summing to 1.  Kernels are
    immutable and safe to share between threads.
    """

    name: str
    space: str
    origin: State
    neighbor_fn: Callable[[State], tuple[tuple[State, Fraction], ...]]

    def neighbors(self, state: State) -> tuple[tuple[State, Fraction], ...]:
        return self.neighbor_fn(state)

    def expectation(self, state: State, fn: Callable[[State], object]):
        """One-step expectation E_state[fn(X_1)], exact if fn is exact."""
        total = None
        for nxt, p in self.neighbors(state):
            term = p * fn(nxt)
            total = term if total is None else total + term
        return total


def _srw_z_neighbors(x: int):
    return ((x - 1, HALF), (x + 1, HALF))


def _bang_bang_neighbors(y: int):
    if y == 0:
        return ((1, Fraction(1)),)
    return ((y + 1, THIRD), (y - 1, Fraction(2, 3)))


def _binary_tree_neighbors(node: tuple[int, ...]):
    if node == ():
        return (((0,), HALF), ((1,), HALF))
    return ((node[:-1], HALF), (node + (0,), QUARTER), (node + (1,), QUARTER))


def _srw_z2_neighbors(xy: tuple[int, int]):
    x, y = xy
    return (((x - 1, y), QUARTER), ((x + 1, y), QUARTER),
            ((x, y - 1), QUARTER), ((x, y + 1), QUARTER))


_CATALOG = {
    "srw_z": MarkovKernel("srw_z", "Z", 0, _srw_z_neighbors),
    "bang_bang": MarkovKernel("bang_bang", "N", 0, _bang_bang_neighbors),
    "binary_tree": MarkovKernel("binary_tree", "tree", (), _binary_tree_neighbors),
    "srw_z2": MarkovKernel("srw_z2", "Z2", (0, 0), _srw_z2_neighbors),
}


def catalog(name: str) -> MarkovKernel:
    """Return one of the four catalog kernels by name."""
    try:
        return _CATALOG[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown chain {name!r}; available: {sorted(_CATALOG)}") from None


def step(kernel: MarkovKernel, state: State, rng) -> State:
    """Sample one transition with the kernel's exact probabilities.

    ``rng`` is a ``numpy.random.Generator``; this is the only place in the
    chain layer where probabilities are converted to floats.
    """
    nbrs = kernel.neighbors(state)
    if len(nbrs) == 1:
        return nbrs[0][0]
    u = rng.random()
    acc = 0.0
    for nxt, p in nbrs:
        acc += float(p)
        if u < acc:
            return nxt
    return nbrs[-1][0]


def delta(state: State, tracked: tuple[State, ...] = ()) -> dict:
    """Point-mass initial distribution, with local-time counters started.

    Counters follow the convention that the visit at time 0 counts: the
    local time of site y at time k is #{m <= k : X_m = y}.
    """
    if not tracked:
        return {state: Fraction(1)}
    counts = tuple(1 if state == site else 0 for site in tracked)
    return {(state, counts): Fraction(1)}


def propagate(kernel: MarkovKernel, dist: Mapping, n: int,
              tracked: tuple[State, ...] = (), float_mode: bool = False,
              support_budget: int = 2_000_000,
              counter_cap: int | None = None) -> dict:
    """Exact n-step pushforward of a distribution over augmented states.

    With ``tracked`` empty, keys are plain states.  Otherwise keys are
    ``(state, counts)`` where ``counts[i]`` is the running local time at
    ``tracked[i]`` (visits at times 0..k inclusive).  Masses stay exact
    rationals unless ``float_mode`` is set.  ``counter_cap`` saturates the
    counters, which keeps the augmented support small for functionals that
    only distinguish counts up to a bound.
    """
    if n < 0:
        raise ConfigurationError("n must be >= 0")
    current = dict(dist)
    if float_mode:
        current = {k: float(v) for k, v in current.items()}
    for _ in range(n):
        nxt: dict = defaultdict(float if float_mode else Fraction)
        for key, mass in current.items():
            if tracked:
                state, counts = key
            else:
                state, counts = key, None
            for target, p in kernel.neighbors(state):
                prob = float(p) if float_mode else p
                if tracked:
                    new_counts = tuple(
                        c + 1 if target == site else c
                        for c, site in zip(counts, tracked))
                    if counter_cap is not None:
                        new_counts = tuple(min(c, counter_cap)
                                           for c in new_counts)
                    nxt[(target, new_counts)] += mass * prob
                else:
                    nxt[target] += mass * prob
        if len(nxt) > support_budget:
            raise ResourceBudgetError(
                f"propagate support {len(nxt)} exceeds budget {support_budget}")
        current = dict(nxt)
    return current


@dataclass
class PathRecord:
    """A finite trajectory with visit bookkeeping at tracked sites.

    For each tracked site y the record keeps the list of visit times
    (all m >= 0 with X_m = y).  Derived quantities follow the conventions:

    * local time  L_k^y = #{m <= k : X_m = y}, with L_{-1}^y = 0;
    * hitting times tau_k^y enumerate the visits at times m >= 1, so that
      tau_1 is the first return when X_0 = y and the first hit otherwise
      (a first hit from elsewhere can only happen at m >= 1 anyway);
    * g_y^(n) is the last visit time <= n, or None if the site was never
      visited.
    """

    states: list
    tracked: tuple = ()
    visit_times: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.visit_times:
            self.visit_times = {site: [] for site in self.tracked}
            for m, s in enumerate(self.states):
                if s in self.visit_times:
                    self.visit_times[s].append(m)

    @property
    def n(self) -> int:
        return len(self.states) - 1

    def append(self, state) -> None:
        self.states.append(state)
        if state in self.visit_times:
            self.visit_times[state].append(len(self.states) - 1)

    def local_time(self, site, k: int | None = None) -> int:
        times = self.visit_times[site]
        if k is None:
            return len(times)
        if k < 0:
            return 0
        lo, hi = 0, len(times)
        while lo < hi:
            mid = (lo + hi) // 2
            if times[mid] <= k:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def tau(self, site, k: int) -> int | None:
        """k-th visit time among m >= 1 (None if fewer than k such visits)."""
        times = [m for m in self.visit_times[site] if m >= 1]
        return times[k - 1] if 1 <= k <= len(times) else None

    def last_visit(self, site, n: int | None = None) -> int | None:
        horizon = self.n if n is None else n
        last = None
        for m in self.visit_times[site]:
            if m <= horizon:
                last = m
        return last


def states_within(kernel: MarkovKernel, center: State, radius: int,
                  budget: int = 500_000) -> list:
    """All states reachable from ``center`` in <= radius steps (BFS order)."""
    seen = {center}
    frontier = deque([(center, 0)])
    out = [center]
    while frontier:
        state, d = frontier.popleft()
        if d == radius:
            continue
        for nxt, _ in kernel.neighbors(state):
            if nxt not in seen:
                seen.add(nxt)
                out.append(nxt)
                if len(out) > budget:
                    raise ResourceBudgetError(
                        f"window size exceeds budget {budget}")
                frontier.append((nxt, d + 1))
    return out
