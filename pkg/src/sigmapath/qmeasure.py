"""Penalised-weight engine for recurrent chains.

Given a catalog chain, a reference point x0 and a nonnegative function phi
vanishing at x0 and harmonic elsewhere, the weight

    psi_r(x) = r/(1-r) * c + phi(x),        c = E_{x0}[phi(X_1)],

makes psi_r(X_n) r^{L_{n-1}^{x0}} a martingale; its constant expectation
defines a finite measure mu_x^(r) on paths, and reweighting by
(1/r)^{L_infty^{x0}} yields a sigma-finite measure Q_x that does not
depend on r.  This module evaluates Q_x-integrals of prefix functionals
with geometric tail factors in exact rational arithmetic, builds the
restricted weights phi^[y0] attached to any other site, solves the
discrete Sturm-Liouville equation psi_q = q * P psi_q for finitely
supported killing, exposes the martingales M_n = phi^[a](X_n) h(L_{n-1}^a)
+ K(a) * tail_h(L_{n-1}^a), and samples paths from the conditioned
(transient) h-walk decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .chain import MarkovKernel, PathRecord, catalog, delta, propagate, step
from .errors import (ConfigurationError, NumericalConsistencyError,
                     ResourceBudgetError)
from .harmonic import HarmonicFn, phi_closed
from .oracle import limit_probe


@dataclass(frozen=True)
class PenalisedWeight:
    """Chain + harmonic function + penalty strength r in (0,1), all exact."""

    kernel: MarkovKernel
    phi: HarmonicFn
    r: Fraction
    c: object  # E_{x0}[phi(X_1)] > 0, Fraction (or exact a + b/pi on Z^2)

    @property
    def x0(self):
        return self.phi.x0


def penalised_weight(kernel: MarkovKernel, phi: HarmonicFn, r) -> PenalisedWeight:
    r = Fraction(r)
    if not 0 < r < 1:
        raise ConfigurationError("r must lie strictly between 0 and 1")
    if phi.kernel.name != kernel.name:
        raise ConfigurationError("phi was built for a different kernel")
    c = kernel.expectation(phi.x0, phi.func)
    if hasattr(c, "qpi"):  # exact a + b/pi value: demote if purely rational
        c = c.q if c.qpi == 0 else c
    if not float(c) > 0:
        raise ConfigurationError("E_{x0}[phi(X_1)] must be positive")
    return PenalisedWeight(kernel, phi, r, c if not isinstance(c, int) else Fraction(c))


def default_weight(name: str, r=Fraction(1, 2), **phi_kwargs) -> PenalisedWeight:
    kernel = catalog(name)
    return penalised_weight(kernel, phi_closed(kernel, **phi_kwargs), r)


def psi_r(weight: PenalisedWeight, x):
    """The weight psi_r(x) = r/(1-r) * c + phi(x), exact."""
    return weight.r / (1 - weight.r) * weight.c + weight.phi(x)


# ---------------------------------------------------------------------------
# Exact finite-horizon engine
# ---------------------------------------------------------------------------

def _backward_weighted(kernel: MarkovKernel, q: Callable, steps: int,
                       terminal: Callable, states) -> dict:
    """chi^k(y) = E_y[terminal(X_k) * prod_{m<k} q(X_m)] for y in states.

    The recursion chi^{k+1} = q * (P chi^k) runs on the reachability ball,
    which stays finite by local finiteness.
    """
    ball = [set(states)]
    for _ in range(steps):
        nxt = set()
        for s in ball[-1]:
            nxt.update(z for z, _ in kernel.neighbors(s))
        ball.append(nxt)
    values = {s: Fraction(terminal(s)) for s in ball[steps]}
    for k in range(steps - 1, -1, -1):
        values = {
            s: q(s) * sum(p * values[z] for z, p in kernel.neighbors(s))
            for s in ball[k]
        }
    return values


def _single_site_factor(x0, u: Fraction) -> Callable:
    one = Fraction(1)
    return lambda s: u if s == x0 else one


def _prefix_atoms(kernel: MarkovKernel, x, F, n: int, x0,
                  leaf_budget: int = 2_000_000) -> list:
    """All weighted prefixes: (end state, P(w) * F(w), L_{n-1}^{x0}(w)).

    F is a callable on the tuple of states (X_0..X_n); zero-weight
    prefixes are dropped.
    """
    branching = 4
    if branching ** n > leaf_budget:
        raise ResourceBudgetError(f"prefix enumeration of depth {n} over budget")
    atoms = []
    stack = [((x,), Fraction(1))]
    while stack:
        path, prob = stack.pop()
        if len(path) == n + 1:
            fval = F(path)
            if fval:
                lt = sum(1 for s in path[:-1] if s == x0)
                atoms.append((path[-1], prob * Fraction(fval), lt))
            continue
        for z, p in kernel.neighbors(path[-1]):
            stack.append((path + (z,), prob * p))
    return atoms


def _finite_horizon(weight: PenalisedWeight, x, F, n: int, N: int,
                    u: Fraction, terminal: Callable) -> Fraction:
    """E_x[F_n * u^{L_{N-1}^{x0}} * terminal(X_N)], exact.

    F is a callable on state tuples of length n+1 (or None for F == 1
    with n forced to 0).
    """
    if N < n:
        raise ConfigurationError("horizon N must be >= n")
    x0 = weight.x0
    if F is None:
        if n != 0:
            raise ConfigurationError("F=None requires n=0")
        atoms = [(x, Fraction(1), 0)]  # L_{-1} = 0 by convention
    else:
        atoms = _prefix_atoms(weight.kernel, x, F, n, x0)
    if not atoms:
        return Fraction(0)
    end_states = {a[0] for a in atoms}
    chi = _backward_weighted(weight.kernel, _single_site_factor(x0, u),
                             N - n, terminal, end_states)
    total = Fraction(0)
    for state, mass, lt in atoms:
        total += mass * u ** lt * chi[state]
    return total


def mu_expectation(weight: PenalisedWeight, x, F, n: int, N: int,
                   s=Fraction(1)) -> Fraction:
    """mu_x^(r)[F_n * s^{L_{N-1}^{x0}}] = E_x[F_n (rs)^{L_{N-1}} psi_r(X_N)].

    With F == 1 and s == 1 this is the total mass psi_r(x) for every
    horizon N (the martingale identity); with s < 1 it is the N-th
    approximant of the corresponding tail-weighted integral.
    """
    s = Fraction(s)
    term = lambda z: psi_r(weight, z)
    return _finite_horizon(weight, x, F, n, N, weight.r * s, term)


def q_expectation(weight: PenalisedWeight, x, F, n: int, s,
                  horizon: int | None = None) -> Fraction:
    """Exact Q_x[F_n * s^{L_infty^{x0}}] for 0 < s < 1.

    Evaluates the finite-horizon approximant
    A_N = E_x[F_n s^{L_{N-1}} psi_r(X_N)] and adds the closed-form tail

        c (s - r) / ((1-r)(1-s)) * E_x[F_n s^{L_{N-1}}],

    which follows from the one-step drift of the approximants plus the
    fact that, by recurrence, sum_{m>=N} s^{L_{m-1}} 1{X_m=x0} equals
    s^{L_{N-1}} / (1-s) along every path.  The result is exactly
    independent of both r and the horizon.
    """
    s = Fraction(s)
    if not 0 < s < 1:
        raise ConfigurationError("tail factor s must lie in (0,1)")
    N = horizon if horizon is not None else n + 8
    a_n = _finite_horizon(weight, x, F, n, N, s, lambda z: psi_r(weight, z))
    survive = _finite_horizon(weight, x, F, n, N, s, lambda z: Fraction(1))
    r = weight.r
    tail = weight.c * (s - r) / ((1 - r) * (1 - s))
    return a_n + tail * survive


# ---------------------------------------------------------------------------
# Restricted weights and the local-time law
# ---------------------------------------------------------------------------

def _hit_before(kernel: MarkovKernel, y0, x0) -> Callable:
    """p(y) = P_y(hit y0 before x0), hits counted from time 0.

    Exact closed forms per catalog chain; the two nearest-neighbour chains
    use the gambler's-ruin solve between the two sites, the tree projects
    onto the root-to-y0 geodesic.
    """
    name = kernel.name
    if name == "srw_z":
        lo, hi = min(x0, y0), max(x0, y0)
        span = hi - lo

        def p(y):
            t = min(max(y, lo), hi)
            frac = Fraction(t - x0, y0 - x0) if y0 > x0 else Fraction(x0 - t, x0 - y0)
            return frac
        return p
    if name == "bang_bang":
        if x0 != 0:
            raise ConfigurationError("bang_bang reference point must be 0")

        def p(y):
            if y >= y0:
                return Fraction(1)
            return Fraction(2 ** y - 1, 2 ** y0 - 1)
        return p
    if name == "binary_tree":
        if x0 != ():
            raise ConfigurationError("tree reference point must be the root")
        m = len(y0)

        def p(y):
            lcp = 0
            for a, b in zip(y, y0):
                if a != b:
                    break
                lcp += 1
            if lcp == m:  # y0 itself or a descendant: must pass through y0
                return Fraction(1)
            return Fraction(2 ** lcp - 1, 2 ** m - 1)
        return p
    raise ConfigurationError(
        f"no exact two-point absorption solve for {name!r}")


def phi_restricted(weight: PenalisedWeight, y0) -> HarmonicFn:
    """The weight phi^[y0] attached to the barrier site y0.

    phi^[y0](y0) = 0, harmonic off y0, asymptotically equivalent to phi;
    built from the absorption probabilities p(y) = P_y(hit y0 before x0)
    and q = P_{x0}(return to x0 before hitting y0):

        phi^[y0](y) = c * (1 - p(y)) / (1 - q) + phi(y) - phi(y0).

    For y0 = x0 this returns phi itself.
    """
    if y0 == weight.x0:
        return weight.phi
    kernel = weight.kernel
    p = _hit_before(kernel, y0, weight.x0)
    q = 1 - kernel.expectation(weight.x0, p)
    if q >= 1:
        raise ConfigurationError("y0 unreachable from x0")
    scale = weight.c / (1 - q)
    phi = weight.phi
    phi_y0 = phi(y0)

    def fn(y):
        return scale * (1 - p(y)) + phi(y) - phi_y0

    return HarmonicFn(kernel, y0, f"{phi.name}|[{y0}]", fn)


def q_local_time_law(weight: PenalisedWeight, x, y0) -> tuple:
    """Image of Q_x under the total local time at y0.

    Returns ``(atom_at_0, plateau)``: Q_x[L_infty^{y0} = 0] = phi^[y0](x)
    and Q_x[L_infty^{y0} = k] = E_{y0}[phi^[y0](X_1)] for every k >= 1.
    """
    restricted = phi_restricted(weight, y0)
    plateau = weight.kernel.expectation(y0, restricted.func)
    return restricted(x), plateau


# ---------------------------------------------------------------------------
# Sturm-Liouville solutions psi_q
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KillingFn:
    """A map q: E -> [0,1] equal to 1 outside a finite explicit support."""

    values: Mapping

    def __post_init__(self):
        for s, v in self.values.items():
            v = Fraction(v)
            if not 0 <= v <= 1:
                raise ConfigurationError(f"q({s}) = {v} outside [0,1]")
        if not any(Fraction(v) < 1 for v in self.values.values()):
            raise ConfigurationError("q must be < 1 somewhere ({q<1} nonempty)")

    def __call__(self, state) -> Fraction:
        return Fraction(self.values.get(state, 1))

    @property
    def support(self) -> tuple:
        return tuple(s for s, v in self.values.items() if Fraction(v) < 1)


@dataclass
class PsiQResult:
    table: dict
    residuals: dict
    method_gap: Fraction | float
    iterate_values: tuple


def _solve_window_1d(weight: PenalisedWeight, q: KillingFn, lo: int, hi: int) -> dict:
    """Exact rational solve of psi = q * P psi on [lo, hi].

    Outside the window q = 1 and psi is harmonic, so psi - phi is constant
    on each unbounded side; the boundary closure substitutes
    psi(out) = psi(edge) + phi(out) - phi(edge).  Gaussian elimination
    over Fractions.
    """
    kernel, phi = weight.kernel, weight.phi
    states = list(range(lo, hi + 1))
    index = {s: i for i, s in enumerate(states)}
    m = len(states)
    A = [[Fraction(0)] * m for _ in range(m)]
    b = [Fraction(0) for _ in range(m)]
    for s in states:
        i = index[s]
        A[i][i] += 1
        qs = q(s)
        for z, p in kernel.neighbors(s):
            if z in index:
                A[i][index[z]] -= qs * p
            else:
                # closure through the nearer edge
                edge = hi if z > hi else lo
                A[i][index[edge]] -= qs * p
                b[i] += qs * p * (phi(z) - phi(edge))
    # Gaussian elimination with partial pivoting (exact).
    for col in range(m):
        piv = max(range(col, m), key=lambda r: abs(A[r][col]))
        if A[piv][col] == 0:
            raise NumericalConsistencyError("singular psi_q system")
        A[col], A[piv] = A[piv], A[col]
        b[col], b[piv] = b[piv], b[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        b[col] *= inv
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [vr - f * vc for vr, vc in zip(A[r], A[col])]
                b[r] -= f * b[col]
    return {s: b[index[s]] for s in states}


def psi_q_solve(weight: PenalisedWeight, q: KillingFn, pad: int = 12,
                iterate_horizon: int = 24, gap_tol: float = 1e-8) -> PsiQResult:
    """Solve psi_q(x) = q(x) E_x[psi_q(X_1)] with psi_q ~ phi at infinity.

    Two routes, kept independent and cross-checked:

    * a windowed exact linear solve with harmonic (affine) closure beyond
      the window, supported on the chains whose ends are one-dimensional
      (srw_z, bang_bang);
    * the exact-propagation iterates chi^{r,N}(y) = E_y[psi_r(X_N)
      prod_{m<N} q(X_m)].  When the killing is concentrated at x0 the
      iterates admit an exact closed-form tail and the comparison is at
      tolerance ``gap_tol``; otherwise the iterates at dyadic horizons are
      extrapolated and the solve must fall inside their convergence
      envelope.

    Disagreement raises :class:`NumericalConsistencyError`; there is no
    silent averaging.
    """
    kernel = weight.kernel
    if kernel.name not in ("srw_z", "bang_bang"):
        raise ConfigurationError(
            f"psi_q_solve supports one-dimensional chains, not {kernel.name!r}")
    support = set(q.support) | {weight.x0} | set(q.values)
    lo = min(support) - pad
    hi = max(support) + pad
    if kernel.name == "bang_bang":
        lo = 0
    table = _solve_window_1d(weight, q, lo, hi)

    residuals = {}
    for s in range(lo + 1, hi):
        expect = sum(p * table[z] for z, p in kernel.neighbors(s))
        residuals[s] = table[s] - q(s) * expect

    probe_states = sorted(support)
    x0 = weight.x0
    single_site = set(q.support) == {x0}
    if single_site:
        s_val = q(x0)
        if s_val == 0:
            # killed on any visit: psi_q = phi^[x0] = phi
            exact = {y: weight.phi(y) for y in probe_states}
            iterate_values = tuple(exact[y] for y in probe_states)
        else:
            exact = {}
            for y in probe_states:
                exact[y] = q_expectation(weight, y, None, 0, s_val,
                                         horizon=iterate_horizon)
            iterate_values = tuple(exact[y] for y in probe_states)
        gap = max(abs(table[y] - exact[y]) for y in probe_states)
        if gap > gap_tol:
            raise NumericalConsistencyError(
                f"psi_q solve vs exact-tail iterates differ by {float(gap):.3g}")
    else:
        qfun = lambda s: q(s)
        gaps = []
        for y in probe_states:
            vals = []
            for N in (iterate_horizon, 2 * iterate_horizon, 4 * iterate_horizon):
                chi = _backward_weighted(kernel, qfun, N,
                                         lambda z: psi_r(weight, z), [y])
                vals.append(chi[y])
            probe = limit_probe(vals)
            envelope = abs(vals[2] - vals[1]) * 4 + Fraction(1, 10 ** 9)
            centre = probe.limit if probe.limit is not None else float(vals[2])
            gaps.append(abs(float(table[y]) - centre) - float(envelope))
            iterate_values = tuple(vals)
        if max(gaps) > gap_tol:
            raise NumericalConsistencyError(
                "psi_q solve falls outside the iterate convergence envelope")
        gap = max(gaps)
    return PsiQResult(table, residuals, gap, iterate_values)


# ---------------------------------------------------------------------------
# Martingales attached to tail functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummableH:
    """h: N -> R_+ with a finite, exactly known tail sum."""

    fn: Callable
    tail_fn: Callable  # tail_fn(l) = sum_{k >= l+1} h(k), exact

    def __call__(self, k: int):
        return self.fn(k)

    def tail(self, l: int):
        return self.tail_fn(l)


def geometric_h(base) -> SummableH:
    """h(k) = base^k with exact geometric tails (requires 0 < base < 1)."""
    base = Fraction(base)
    if not 0 < base < 1:
        raise ConfigurationError("geometric h needs base in (0,1) to be summable")
    return SummableH(lambda k: base ** k,
                     lambda l: base ** (l + 1) / (1 - base))


def martingale_M(weight: PenalisedWeight, a, h: SummableH, state, ell: int):
    """M_n for the tail functional h(L_infty^a), given X_n and L_{n-1}^a.

    M_n = phi^[a](X_n) h(L_{n-1}^a) + K(a) sum_{k >= L_{n-1}^a + 1} h(k),
    with K(a) the local-time plateau at a.  One-step conditional
    expectations reproduce M_n exactly.
    """
    restricted = phi_restricted(weight, a)
    plateau = weight.kernel.expectation(a, restricted.func)
    return restricted(state) * h(ell) + plateau * h.tail(ell)


def martingale_M_step(weight: PenalisedWeight, a, h: SummableH, state, ell: int):
    """Exact E[M_{n+1} | X_n = state, L_{n-1}^a = ell]."""
    new_ell = ell + (1 if state == a else 0)
    return weight.kernel.expectation(
        state, lambda z: martingale_M(weight, a, h, z, new_ell))


# ---------------------------------------------------------------------------
# Transient h-walks and the conditioned-path sampler
# ---------------------------------------------------------------------------

def transient_kernel(weight: PenalisedWeight, y0) -> MarkovKernel:
    """Doob transform by phi^[y0]: pbar(x,z) = p(x,z) phi^[y0](z)/phi^[y0](x).

    Defined on {phi^[y0] > 0}; rows sum to one there and the barrier y0 is
    never entered.
    """
    restricted = phi_restricted(weight, y0)
    base = weight.kernel

    def neighbors(x):
        px = restricted(x)
        if not px > 0:
            raise ConfigurationError(
                f"transient kernel undefined at {x!r}: phi^[y0] vanishes")
        out = tuple((z, p * Fraction(restricted(z), 1) / px)
                    for z, p in base.neighbors(x) if restricted(z) > 0)
        return out

    return MarkovKernel(f"{base.name}|transient[{y0}]", base.space, y0, neighbors)


@dataclass
class DecomposedPath:
    record: PathRecord
    mass: Fraction  # sigma-finite mass of the conditioned component
    switch_time: int  # last visit to y0 (-1 when k = 0 and y != y0)


def sample_decomposed(weight: PenalisedWeight, y, y0, k: int, rng,
                      step_budget: int = 1_000_000,
                      tail_steps: int = 64) -> DecomposedPath:
    """One path from Q_y conditioned on {L_infty^{y0} = k}, normalised.

    For k >= 1: run the base chain from y until the k-th visit to y0
    (visits counted from time 0), then continue with the transient h-walk,
    whose first step is the normalised no-return measure.  For k = 0 the
    h-walk runs from y directly and requires phi^[y0](y) > 0.  The
    sigma-finite mass of the component is returned alongside: phi^[y0](y)
    for k = 0 and the plateau E_{y0}[phi^[y0](X_1)] for k >= 1.
    """
    if k < 0:
        raise ConfigurationError("k must be >= 0")
    restricted = phi_restricted(weight, y0)
    tkernel = transient_kernel(weight, y0)
    base = weight.kernel
    record = PathRecord([y], tracked=(y0,))
    if k == 0:
        if not restricted(y) > 0:
            raise ConfigurationError(
                "k=0 component has zero mass: phi^[y0](y) = 0")
        mass = Fraction(restricted(y))
        state = y
        for _ in range(tail_steps):
            state = step(tkernel, state, rng)
            record.append(state)
        return DecomposedPath(record, mass, -1)

    visits = 1 if y == y0 else 0
    state = y
    steps = 0
    while visits < k:
        state = step(base, state, rng)
        record.append(state)
        steps += 1
        if state == y0:
            visits += 1
        if steps > step_budget:
            raise ResourceBudgetError(
                f"step budget {step_budget} exhausted before visit {k} to {y0!r}")
    switch = record.n
    # normalised first step of the no-return measure
    plateau = base.expectation(y0, restricted.func)
    u = rng.random()
    acc = Fraction(0)
    first = None
    for z, p in base.neighbors(y0):
        acc += p * Fraction(restricted(z)) / plateau
        if u < float(acc):
            first = z
            break
    if first is None:
        first = base.neighbors(y0)[-1][0]
    record.append(first)
    state = first
    for _ in range(tail_steps - 1):
        state = step(tkernel, state, rng)
        record.append(state)
    return DecomposedPath(record, Fraction(plateau), switch)
