"""Coordinate selection rules.

A rule is prepared once per run (binding it to the problem and, for the
stochastic ones, to a PRNG stream) and then asked for a coordinate each
iteration.  ``select`` returns ``(i, alpha)`` where alpha is None unless the
rule itself determines the step (maximum improvement does).  Greedy rules
read the tracker's maintained scores via ``peek``; the stochastic ones never
touch the gradient.

Randomness: numpy's PCG64 (``default_rng``).  Discrete sampling uses the
inverse CDF — a single uniform draw looked up in the cumulative probability
vector — so a rule consumes exactly one draw per iteration.
"""

import numpy as np

from .problems import CompositeProblem
from .tracker import GradScorer, ProxScorer


def approx_gs_select(gradient, eps, regime, benign=False):
    """Pick a coordinate admissible for inexact greedy selection.

    Admissible means |grad_i| >= ||grad||_inf * (1 - eps) (regime
    "mult") or |grad_i| >= ||grad||_inf - eps (regime "add").  The benign
    mode returns the exact greedy coordinate (always admissible); otherwise
    this is an adversarial simulator returning the WORST admissible
    coordinate — smallest |grad_i|, ties broken to the LARGEST index — to
    stress convergence bounds from below.
    """
    g = np.abs(gradient)
    top = g.max()
    if benign:
        return int(np.argmax(g))
    if regime == "mult":
        if not 0.0 <= eps < 1.0:
            raise ValueError("multiplicative error must lie in [0, 1)")
        thr = top * (1.0 - eps)
    elif regime == "add":
        if eps < 0.0:
            raise ValueError("additive error must be nonnegative")
        thr = top - eps
    else:
        raise ValueError(f"unknown approximation regime: {regime!r}")
    idx = np.flatnonzero(g >= thr)
    order = np.lexsort((-idx, g[idx]))
    return int(idx[order[0]])


def max_improvement_select(x, problem):
    """(i, alpha) giving the largest exact single-coordinate decrease.

    Evaluates exact_coord_min for every coordinate — O(n) full objective
    evaluations — so this is a reference rule, not a fast one.  Ties go to
    the smallest index; at a minimiser every step is ~0 and whichever
    coordinate wins the (noise-level) comparison is returned.
    """
    f0 = problem.eval(x)
    best_i, best_alpha, best_dec = 0, 0.0, -np.inf
    xt = x.copy()
    for i in range(problem.n):
        new = problem.exact_coord_min(x, i)
        xt[i] = new
        dec = f0 - problem.eval(xt)
        xt[i] = x[i]
        if dec > best_dec:
            best_i, best_alpha, best_dec = i, new - x[i], dec
    return best_i, best_alpha


class Rule:
    """Base selection rule; subclasses override prepare/scorer/select."""

    name = ""
    is_stochastic = False

    def prepare(self, problem, rng=None):
        pass

    def scorer(self, problem):
        """Score the tracker must maintain for this rule (None if unused)."""
        return None

    def select(self, tracker, k):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class UniformRule(Rule):
    name = "uniform"
    is_stochastic = True

    def prepare(self, problem, rng=None):
        self.n = problem.n
        self.rng = rng if rng is not None else np.random.default_rng()

    def select(self, tracker, k):
        return min(int(self.rng.random() * self.n), self.n - 1), None


class CyclicRule(Rule):
    name = "cyclic"

    def prepare(self, problem, rng=None):
        self.n = problem.n

    def select(self, tracker, k):
        return k % self.n, None


class LipschitzRule(Rule):
    """Sample i with probability L_i / sum(L)."""

    name = "lipschitz"
    is_stochastic = True

    def prepare(self, problem, rng=None):
        L = np.asarray(problem.L_per_coord, dtype=np.float64)
        total = L.sum()
        if total <= 0:
            raise ValueError("Lipschitz sampling needs a positive L_i")
        self.cum = np.cumsum(L / total)
        self.cum[-1] = 1.0
        self.rng = rng if rng is not None else np.random.default_rng()

    def select(self, tracker, k):
        return int(np.searchsorted(self.cum, self.rng.random(), side="right")), None


class GreedyRule(Rule):
    """Largest |grad_i| (name "gs") or largest |grad_i|/sqrt(L_i) ("gsl")."""

    def __init__(self, weighted=False):
        self.weighted = weighted
        self.name = "gsl" if weighted else "gs"

    def scorer(self, problem):
        if self.weighted:
            L = np.asarray(problem.L_per_coord, dtype=np.float64)
            w = 1.0 / np.sqrt(np.where(L > 0, L, 1.0))
            return GradScorer(weights=w)
        return GradScorer()

    def select(self, tracker, k):
        return tracker.peek(), None


class ApproxGreedyRule(Rule):
    """Inexact greedy selection with a per-iteration error budget.

    ``eps`` is a constant or a callable k -> eps_k (k is 1-based, matching
    the error sequence the accumulated bounds integrate).  Worst-admissible
    by default; benign=True returns the exact greedy coordinate.
    """

    def __init__(self, regime, eps, benign=False):
        if regime not in ("mult", "add"):
            raise ValueError(f"unknown approximation regime: {regime!r}")
        self.regime = regime
        self.eps = eps
        self.benign = benign
        self.name = f"gs-approx-{regime}"

    def eps_at(self, k):
        return float(self.eps(k)) if callable(self.eps) else float(self.eps)

    def select(self, tracker, k):
        i = approx_gs_select(tracker.gradient, self.eps_at(k + 1),
                             self.regime, benign=self.benign)
        return i, None


class MaxImprovementRule(Rule):
    name = "mi"

    def prepare(self, problem, rng=None):
        self.problem = problem

    def select(self, tracker, k):
        i, alpha = max_improvement_select(tracker.x, self.problem)
        return i, alpha


class ProxWorkRule(Rule):
    """Greedy rules for composite problems, built on prox candidates.

    mode "s": largest minimal-subgradient magnitude; mode "r": longest prox
    step |d_i|; mode "q": best model decrease (argmin V_i).  With
    per_coord=True the candidates (and the steps the driver takes) use L_i
    in place of L.
    """

    def __init__(self, mode, per_coord=False):
        if mode not in ("s", "r", "q"):
            raise ValueError(f"unknown prox rule mode: {mode!r}")
        if mode == "s" and per_coord:
            raise ValueError("the subgradient-residual rule has no per-coordinate variant")
        self.mode = mode
        self.per_coord = per_coord
        self.name = ("gsl-" if per_coord else "gs-") + mode

    def scorer(self, problem):
        if not isinstance(problem, CompositeProblem):
            raise ValueError(f"rule {self.name} needs a composite problem")
        L_used = problem.L_per_coord if self.per_coord else problem.L
        return ProxScorer(problem, L_used, self.mode)

    def select(self, tracker, k):
        return tracker.peek(), None


_FACTORIES = {
    "uniform": UniformRule,
    "cyclic": CyclicRule,
    "lipschitz": LipschitzRule,
    "gs": lambda: GreedyRule(weighted=False),
    "gsl": lambda: GreedyRule(weighted=True),
    "mi": MaxImprovementRule,
    "gs-s": lambda: ProxWorkRule("s"),
    "gs-r": lambda: ProxWorkRule("r"),
    "gs-q": lambda: ProxWorkRule("q"),
    "gsl-q": lambda: ProxWorkRule("q", per_coord=True),
    "gsl-r": lambda: ProxWorkRule("r", per_coord=True),
}

RULE_NAMES = tuple(_FACTORIES) + ("gs-approx-mult", "gs-approx-add")


def make_rule(name, eps=0.0, benign=False):
    """Rule object from its command-line name."""
    if name == "gs-approx-mult":
        return ApproxGreedyRule("mult", eps, benign=benign)
    if name == "gs-approx-add":
        return ApproxGreedyRule("add", eps, benign=benign)
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise ValueError(f"unknown rule {name!r}; expected one of {', '.join(RULE_NAMES)}")
