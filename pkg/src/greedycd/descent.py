"""The coordinate descent driver: runs, traces, and races.

A run wires a selection rule to an incremental tracker, applies one
coordinate update per iteration, and records a trace row per iterate.  Two
runtime guards watch every iteration: a divergence guard (any objective
increase beyond 1e-6 aborts) and a sufficient-decrease certificate — the
realised drop must cover the model decrease the step size promises, up to
float slack.  Traces serialise to CSV with shortest-round-trip floats so a
written file parses back bit-for-bit.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .nns import BallTreeIndex
from .problems import CompositeProblem, term_value
from .rules import Rule, make_rule
from .tracker import make_tracker

TRACE_HEADER = ("k,objective,coord,step,resid_inf,elapsed_ns,"
                "touched_rows,touched_grads,heap_ops")

STEP_MODES = ("auto", "const", "const-coord", "exact")


@dataclass
class RunTrace:
    """One row per iterate, k = 0 being the starting point (coord -1)."""

    k: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    coord: list = field(default_factory=list)
    step: list = field(default_factory=list)
    resid_inf: list = field(default_factory=list)
    elapsed_ns: list = field(default_factory=list)
    touched_rows: list = field(default_factory=list)
    touched_grads: list = field(default_factory=list)
    heap_ops: list = field(default_factory=list)
    rule: str = field(default="", compare=False)
    converged: bool = field(default=False, compare=False)
    final_x: np.ndarray = field(default=None, compare=False, repr=False)

    def append(self, k, objective, coord, step, resid_inf, elapsed_ns,
               touched_rows, touched_grads, heap_ops):
        self.k.append(int(k))
        self.objective.append(float(objective))
        self.coord.append(int(coord))
        self.step.append(float(step))
        self.resid_inf.append(float(resid_inf))
        self.elapsed_ns.append(int(elapsed_ns))
        self.touched_rows.append(int(touched_rows))
        self.touched_grads.append(int(touched_grads))
        self.heap_ops.append(int(heap_ops))

    def __len__(self):
        return len(self.k)

    def same_path(self, other):
        """Equality ignoring wall-clock times (for determinism checks)."""
        return (self.k == other.k and self.objective == other.objective
                and self.coord == other.coord and self.step == other.step
                and self.resid_inf == other.resid_inf
                and self.touched_rows == other.touched_rows
                and self.touched_grads == other.touched_grads
                and self.heap_ops == other.heap_ops)

    def to_csv(self):
        lines = [TRACE_HEADER]
        for j in range(len(self.k)):
            lines.append(",".join((
                str(self.k[j]), repr(self.objective[j]), str(self.coord[j]),
                repr(self.step[j]), repr(self.resid_inf[j]),
                str(self.elapsed_ns[j]), str(self.touched_rows[j]),
                str(self.touched_grads[j]), str(self.heap_ops[j]))))
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text):
        lines = [ln for ln in text.splitlines() if ln]
        if not lines or lines[0] != TRACE_HEADER:
            raise ValueError("not a trace file: bad or missing header")
        trace = cls()
        for ln in lines[1:]:
            f = ln.split(",")
            if len(f) != 9:
                raise ValueError(f"bad trace row: {ln!r}")
            trace.append(int(f[0]), float(f[1]), int(f[2]), float(f[3]),
                         float(f[4]), int(f[5]), int(f[6]), int(f[7]),
                         int(f[8]))
        return trace

    @classmethod
    def read_csv(cls, path):
        with open(path) as fh:
            return cls.from_csv(fh.read())


def _resolve_step(composite, rule, step):
    """Step mode plus the curvature vector steps and residuals use."""
    if step not in STEP_MODES:
        raise ValueError(f"unknown step mode {step!r}; expected one of {STEP_MODES}")
    if step == "auto":
        per_coord = getattr(rule, "per_coord", composite is None)
        step = "const-coord" if per_coord else "const"
    return step


def run(problem, rule, *, step="auto", x0=None, max_iters=None, tol=1e-8,
        backend="heap", refresh_every=10000, rng=None, seed=None,
        check_descent=True):
    """Minimise ``problem`` with one-coordinate updates; returns a RunTrace.

    ``rule`` is a rule name or Rule instance.  ``step`` picks the update:
    "const" moves -grad_i/L (prox under that curvature for composite
    problems), "const-coord" uses L_i instead, "exact" minimises the
    coordinate function, and "auto" follows the rule (per-coordinate for the
    per-coordinate prox rules and plain smooth problems, global L
    otherwise).  Stops when the residual (gradient sup-norm, or prox-step
    sup-norm for composite problems) drops to ``tol``, or after
    ``max_iters`` updates (default 50 n).
    """
    composite = problem if isinstance(problem, CompositeProblem) else None
    smooth = problem.smooth if composite is not None else problem
    n = smooth.n
    if isinstance(rule, str):
        rule = make_rule(rule)
    elif not isinstance(rule, Rule):
        raise TypeError("rule must be a name or a Rule")
    if max_iters is None:
        max_iters = 50 * n
    if x0 is None:
        x0 = np.zeros(n)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")

    if rng is None:
        rng = np.random.default_rng(seed)
    rule.prepare(problem, rng=rng)
    index = None
    if backend == "nns":
        if rule.name not in ("gs", "gsl"):
            raise ValueError("the nns backend serves the gs and gsl rules only")
        if composite is not None or getattr(smooth, "tracker_kind", "") != "h1":
            raise ValueError("the nns backend needs a least-squares or "
                             "logistic problem without composite terms")
        index = BallTreeIndex(smooth,
                              mode="biased" if rule.name == "gs" else "gsl")
        tracker = make_tracker(problem, x0, scorer=None, backend="scan",
                               refresh_every=refresh_every)
    else:
        tracker = make_tracker(problem, x0, scorer=rule.scorer(problem),
                               backend=backend, refresh_every=refresh_every)

    mode = _resolve_step(composite, rule, step)
    L_per = np.asarray(smooth.L_per_coord, dtype=np.float64)
    L_vec = L_per if mode in ("const-coord", "exact") else np.full(n, smooth.L)
    L_safe = np.where(L_vec > 0, L_vec, 1.0)

    obj = tracker.objective()
    if composite is not None:
        g_sum = float(composite.g_values(tracker.x).sum())
        if not np.isfinite(g_sum):
            raise ValueError("x0 is infeasible for the composite terms")
        obj += g_sum

    def residual():
        if composite is None:
            return tracker.grad_inf_norm()
        d = composite.prox_steps(tracker.x, tracker.gradient, L_safe)[0]
        return float(np.abs(d).max()) if n else 0.0

    trace = RunTrace(rule=rule.name)
    resid = residual()
    trace.append(0, obj, -1, 0.0, resid, 0, 0, 0, 0)
    t0 = time.perf_counter_ns()

    for t in range(max_iters):
        if resid <= tol:
            trace.converged = True
            break
        if index is not None:
            i, alpha = index.select(tracker), None
        else:
            i, alpha = rule.select(tracker, t)
        g_i = float(tracker.gradient[i])
        xi_old = float(tracker.x[i])
        if composite is not None:
            d1, V1, _ = composite.prox_steps(tracker.x, tracker.gradient,
                                             L_safe, idx=np.array([i]))
            if alpha is None:
                if mode == "exact":
                    alpha = composite.exact_coord_min(
                        tracker.x, i, grad_i=g_i) - xi_old
                else:
                    alpha = float(d1[0])
            promised = float(V1[0])
        else:
            if alpha is None:
                if mode == "exact":
                    alpha = smooth.exact_coord_min(tracker.x, i) - xi_old
                else:
                    alpha = -g_i / L_safe[i] if L_vec[i] > 0 else 0.0
            promised = -g_i * g_i / (2.0 * L_safe[i]) if L_vec[i] > 0 else 0.0

        stats = tracker.apply_update(i, alpha)
        delta = tracker.last_obj_delta
        if composite is not None:
            delta += (term_value(composite.terms[i], xi_old + alpha)
                      - term_value(composite.terms[i], xi_old))
        if delta > 1e-6:
            raise RuntimeError(
                f"diverging: objective rose by {delta:.3e} at iteration "
                f"{t + 1} (coordinate {i}, step {alpha:.3e})")
        if check_descent:
            slack = 1e-10 * max(1.0, abs(obj)) + 1e-14
            if delta > promised + slack:
                raise RuntimeError(
                    f"descent certificate violated at iteration {t + 1}: "
                    f"drop {delta:.6e} exceeds promised {promised:.6e} "
                    f"(coordinate {i}, step {alpha:.3e})")
        obj += delta
        resid = residual()
        trace.append(t + 1, obj, i, alpha, resid, time.perf_counter_ns() - t0,
                     stats.touched_rows, stats.touched_grads, stats.heap_ops)
    else:
        trace.converged = resid <= tol

    trace.final_x = tracker.x.copy()
    return trace


def race(problem, rules, iters, master_seed=0, **run_kwargs):
    """Run several rules on one problem with independent PRNG streams.

    Streams are spawned from a single SeedSequence so adding or reordering
    rules never changes another rule's draws, and the whole race replays
    from ``master_seed``.  Returns one trace per rule, in order.
    """
    streams = np.random.SeedSequence(master_seed).spawn(len(rules))
    traces = []
    for spec, stream in zip(rules, streams):
        rule = make_rule(spec) if isinstance(spec, str) else spec
        traces.append(run(problem, rule, max_iters=iters,
                          rng=np.random.default_rng(stream), **run_kwargs))
    return traces
