"""The nested sampling loop, its stopping rules, run merging and dynamic refinement.

Random numbers come from streams addressed by ``(seed, namespace, iteration,
slot)``.  Candidates are generated by the coordinator; worker threads only
evaluate likelihoods, so a run is bit-identical for any worker count.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import kernels
from .core import LOG_ZERO, RngStream, RunTrace, TraceError, log_add, log_sub, log_sum
from .samplers import (SamplerConfig, SamplerExhausted, SamplerStats, make_sampler)

__all__ = ["DynamicGoal", "RunConfig", "EngineState", "init_state", "iterate",
           "should_stop", "finalize", "run", "merge", "run_dynamic",
           "parallel_speedup_model", "importance", "WINDOW_FRACTION"]

# stream namespaces
_INIT, _ITER, _REFRESH, _DYN = 0, 1, 2, 3

# injection window: contours whose importance is within this fraction of the peak
WINDOW_FRACTION = 0.1

_FINALIZE = ("kill_one_by_one", "remainder_estimate")
_PLATEAU = ("A", "B", "naive")


@dataclass
class DynamicGoal:
    """Where extra threads go: ``posterior_weight`` 1 targets the posterior bulk, 0 the evidence."""

    posterior_weight: float = 1.0
    budget: int = 0
    batch: int = 100

    def __post_init__(self):
        if not 0.0 <= self.posterior_weight <= 1.0:
            raise ValueError("posterior_weight must lie in [0, 1]")
        if self.budget < 0 or self.batch < 1:
            raise ValueError("budget must be >= 0 and batch >= 1")


@dataclass
class RunConfig:
    """Run settings.

    ``plateau`` selects how tied minimum likelihoods are removed: ``"A"``
    removes the whole tie group at once, ``"B"`` first tops the live set up
    so ``nlive - 1`` points lie above the tie, ``"naive"`` removes one tied
    point per iteration and books it as an ordinary death (biased; kept for
    comparison).  ``stop_tol <= 0`` switches to optimization mode.
    """

    nlive: int = 500
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    stop_tol: float = 1e-3
    finalize: str = "kill_one_by_one"
    max_iterations: int | None = None
    seed: int = 0
    workers: int = 1
    dynamic: DynamicGoal | None = None
    plateau: str = "A"

    def __post_init__(self):
        if isinstance(self.sampler, dict):
            self.sampler = SamplerConfig(**self.sampler)
        if isinstance(self.dynamic, dict):
            self.dynamic = DynamicGoal(**self.dynamic)
        if int(self.nlive) != self.nlive or self.nlive < 2:
            raise ValueError(f"nlive must be an integer >= 2, got {self.nlive}")
        if self.finalize not in _FINALIZE:
            raise ValueError(f"finalize must be one of {_FINALIZE}")
        if self.plateau not in _PLATEAU:
            raise ValueError(f"plateau must be one of {_PLATEAU}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if math.isnan(self.stop_tol):
            raise ValueError("stop_tol must be a number")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def iteration_cap(self, d: int) -> int:
        return self.max_iterations or 100 * self.nlive * d

    def fingerprint(self) -> str:
        s = self.sampler
        parts = [f"nlive={self.nlive}", f"sampler={s.kind}", f"enlargement={s.enlargement}",
                 f"steps={s.steps}", f"step_scale={s.step_scale}", f"tune={s.tune}",
                 f"block={s.candidate_block}", f"stop_tol={self.stop_tol}",
                 f"finalize={self.finalize}", f"plateau={self.plateau}", f"seed={self.seed}"]
        if self.dynamic is not None:
            g = self.dynamic
            parts.append(f"dynamic=G{g.posterior_weight}/budget{g.budget}/batch{g.batch}")
        return ";".join(parts)

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["sampler"] = self.sampler.as_dict()
        out["dynamic"] = None if self.dynamic is None else vars(self.dynamic).copy()
        return out


@dataclass
class EngineState:
    """Mutable loop state owned by the coordinator."""

    live_u: np.ndarray
    live_theta: np.ndarray
    live_ll: np.ndarray
    live_birth: np.ndarray
    live_ins: np.ndarray
    live_key: np.ndarray
    root: RngStream
    sampler: object
    nlive: int
    dead: dict = field(default_factory=lambda: {k: [] for k in
                                                ("ll", "birth", "n", "ins", "theta", "u")})
    log_x: float = 0.0
    log_z: float = LOG_ZERO
    stats: SamplerStats = field(default_factory=SamplerStats)
    iteration: int = 0
    n_calls: int = 0
    next_key: int = 0
    last_contour: float = LOG_ZERO
    done: bool = False
    best: list = field(default_factory=list)
    queue: deque = field(default_factory=deque)
    refresh_every: int = 1
    evaluate: object = None

    @property
    def n_live(self) -> int:
        return len(self.live_ll)


def _evaluator(problem, executor, workers):
    if executor is None or workers <= 1:
        return problem.loglike_u_batch

    def evaluate(u):
        if len(u) < 2:
            return problem.loglike_u_batch(u)
        chunks = np.array_split(u, min(workers, len(u)))
        return np.concatenate(list(executor.map(problem.loglike_u_batch, chunks)))
    return evaluate


def init_state(problem, config: RunConfig, executor=None, initial=None,
               root: RngStream | None = None) -> EngineState:
    """Draw the initial live set from the prior (or adopt ``initial``).

    ``initial`` is ``(u, log_like, birth)`` for threads started above log 0.
    """
    d = problem.ndim
    root = root or RngStream(config.seed)
    evaluate = _evaluator(problem, executor, config.workers)
    if initial is None:
        u = root.child(_INIT).generator().random((config.nlive, d))
        ll = np.asarray(evaluate(u), dtype=float)
        birth = np.full(len(u), LOG_ZERO)
        calls = len(u)
    else:
        u, ll, birth = (np.asarray(a, dtype=float) for a in initial)
        calls = 0
    if np.any(np.isnan(ll)):
        raise ValueError("likelihood returned NaN")
    n = len(u)
    sampler = make_sampler(config.sampler, d)
    refresh = config.sampler.refresh_every or max(1, config.nlive // 10)
    st = EngineState(u.copy(), np.asarray(problem.prior(u)).reshape(n, d), ll.copy(),
                     birth.copy(), np.full(n, -1, dtype=np.int64), np.arange(n),
                     root, sampler, config.nlive, n_calls=calls, next_key=n,
                     refresh_every=refresh, evaluate=evaluate)
    if n > 0:
        st.last_contour = float(np.max(birth)) if initial is not None else LOG_ZERO
    return st


# -----------------------------------------------------------------------------
# one iteration

def _record_death(state, idx, n_active):
    d = state.dead
    d["ll"].append(float(state.live_ll[idx]))
    d["birth"].append(float(state.live_birth[idx]))
    d["n"].append(int(n_active))
    d["ins"].append(int(state.live_ins[idx]))
    d["theta"].append(state.live_theta[idx].copy())
    d["u"].append(state.live_u[idx].copy())
    new_x = state.log_x - 1.0 / n_active
    ll = float(state.live_ll[idx])
    if ll != LOG_ZERO:
        state.log_z = log_add(state.log_z, ll + log_sub(state.log_x, new_x))
    state.log_x = new_x


def _draw(state, problem, config, threshold, pool_u, pool_ll, count, slot0=0):
    """Draw ``count`` particles with log L > threshold from the snapshot ``pool``."""
    sampler = state.sampler
    out = []
    it_stats = SamplerStats()
    if not sampler.is_step:
        for r in range(count):
            while state.queue and state.queue[0][1] <= threshold:
                state.queue.popleft()
            if state.queue:
                out.append(state.queue.popleft())
                continue
            gen = state.root.child(_ITER, state.iteration, slot0 + r).generator()
            valid, st = sampler.draw(problem, pool_u, pool_ll, threshold, gen,
                                     state.evaluate)
            it_stats += st
            out.append(valid[0])
            state.queue.extend(valid[1:])
            while len(state.queue) > 4 * 64:
                state.queue.popleft()
    else:
        def one(r):
            gen = state.root.child(_ITER, state.iteration, slot0 + r).generator()
            return sampler.draw(problem, pool_u, pool_ll, threshold, gen)
        ex = getattr(state, "_executor", None)
        results = list(ex.map(one, range(count))) if ex is not None and count > 1 \
            else [one(r) for r in range(count)]
        for valid, st in results:
            it_stats += st
            out.append(valid[0])
    for u, ll in out:
        if not ll > threshold:
            raise AssertionError(f"sampler returned log L {ll} <= threshold {threshold}")
    state.n_calls += it_stats.likelihood_calls
    return out, it_stats


def _maybe_refresh(state):
    if state.iteration % state.refresh_every == 0:
        gen = state.root.child(_REFRESH, state.iteration).generator()
        state.sampler.refresh(state.live_u, state.live_ll, gen)


def _rank(surv_ll, ll):
    return int(np.count_nonzero(surv_ll < ll))


def iterate(state: EngineState, problem, config: RunConfig) -> EngineState:
    """Remove the lowest contour and replace it; see :class:`RunConfig` for tie handling."""
    if state.n_live == 0:
        state.done = True
        return state
    _maybe_refresh(state)
    lam = float(np.min(state.live_ll))
    tied = np.flatnonzero(state.live_ll == lam)
    tied = tied[np.argsort(state.live_key[tied], kind="stable")]
    if len(tied) == state.n_live:
        # terminal plateau: nothing lies above, finalization takes everything
        state.done = True
        return state

    if config.plateau == "B" and len(tied) > 1:
        _iterate_topup(state, problem, config)
        state.iteration += 1
        state.best.append(float(np.max(state.live_ll)))
        return state

    if config.plateau == "naive":
        tied = tied[:1]
    survivors = np.ones(state.n_live, dtype=bool)
    survivors[tied] = False
    pool_u, pool_ll = state.live_u[survivors], state.live_ll[survivors]
    new, it_stats = _draw(state, problem, config, lam, pool_u, pool_ll, len(tied))

    n = state.n_live
    for j, idx in enumerate(tied):
        _record_death(state, idx, n if config.plateau == "naive" else n - j)
    for idx, (u, ll) in zip(tied, new):
        state.live_ins[idx] = _rank(pool_ll, ll)
        state.live_u[idx] = u
        state.live_theta[idx] = problem.prior(u)
        state.live_ll[idx] = ll
        state.live_birth[idx] = lam
        state.live_key[idx] = state.next_key
        state.next_key += 1
    state.stats += it_stats
    state.sampler.after_iteration(it_stats, state.iteration)
    state.last_contour = lam
    state.iteration += 1
    state.best.append(float(np.max(state.live_ll)))
    return state


def _append_live(state, problem, items, birth):
    k = len(items)
    u = np.array([it[0] for it in items])
    ll = np.array([it[1] for it in items])
    state.live_ins = np.concatenate([state.live_ins,
                                     [_rank(state.live_ll, x) for x in ll]]).astype(np.int64)
    state.live_u = np.concatenate([state.live_u, u])
    state.live_theta = np.concatenate([state.live_theta,
                                       np.asarray(problem.prior(u)).reshape(k, -1)])
    state.live_ll = np.concatenate([state.live_ll, ll])
    state.live_birth = np.concatenate([state.live_birth, np.full(k, birth)])
    state.live_key = np.concatenate([state.live_key, state.next_key + np.arange(k)])
    state.next_key += k


def _iterate_topup(state, problem, config):
    # add draws above the previous contour until nlive - 1 points clear the tie
    slot = 0
    prev = state.last_contour
    while True:
        lam = float(np.min(state.live_ll))
        q = int(np.count_nonzero(state.live_ll == lam))
        if state.n_live - q >= state.nlive - 1:
            break
        new, st = _draw(state, problem, config, prev, state.live_u, state.live_ll, 1, slot)
        slot += 1
        state.stats += st
        _append_live(state, problem, new, prev)
    tied = np.flatnonzero(state.live_ll == lam)
    tied = tied[np.argsort(state.live_key[tied], kind="stable")]
    n = state.n_live
    for j, idx in enumerate(tied):
        _record_death(state, idx, n - j)
    keep = np.ones(n, dtype=bool)
    keep[tied] = False
    for name in ("live_u", "live_theta", "live_ll", "live_birth", "live_ins", "live_key"):
        setattr(state, name, getattr(state, name)[keep])
    missing = state.nlive - state.n_live
    if missing > 0:
        new, st = _draw(state, problem, config, lam, state.live_u, state.live_ll, missing,
                        slot)
        state.stats += st
        _append_live(state, problem, new, lam)
    state.last_contour = lam


# -----------------------------------------------------------------------------
# stopping and finalization

def should_stop(state: EngineState, config: RunConfig) -> bool:
    """Remaining-evidence rule ``mean(L_live) * X <= stop_tol * Z``.

    With ``stop_tol <= 0`` the run stops once the best live log-likelihood
    has improved by less than 1e-10 over the last ``nlive`` iterations.
    """
    if state.done or state.n_live == 0:
        return True
    tol = config.stop_tol
    if tol == math.inf:
        return state.iteration >= 1
    if tol <= 0:
        b = state.best
        return len(b) > state.nlive and b[-1] - b[-1 - state.nlive] < 1e-10
    log_rem = log_sum(state.live_ll) - math.log(state.n_live) + state.log_x
    if state.log_z == LOG_ZERO:
        return log_rem == LOG_ZERO and state.iteration >= 1
    return log_rem - state.log_z <= math.log(tol)


def _kill_all(state):
    order = np.lexsort((state.live_key, state.live_ll))
    n = state.n_live
    for j, idx in enumerate(order):
        _record_death(state, idx, n - j)
    for name in ("live_u", "live_theta", "live_ll", "live_birth", "live_ins", "live_key"):
        setattr(state, name, getattr(state, name)[:0])


def finalize(state: EngineState, config: RunConfig, problem=None, stop_reason="",
             truncated=False) -> RunTrace:
    """Close the run and return its trace.

    ``kill_one_by_one`` removes the remaining live points in likelihood
    order with live counts n, n-1, ..., 1; ``remainder_estimate`` keeps them as
    final live points, each carrying an equal share of the last volume.
    """
    final = {}
    if config.finalize == "kill_one_by_one":
        _kill_all(state)
    else:
        order = np.lexsort((state.live_key, state.live_ll))
        final = dict(final_log_like=state.live_ll[order],
                     final_birth_log_like=state.live_birth[order],
                     final_insertion_index=state.live_ins[order],
                     final_theta=state.live_theta[order], final_u=state.live_u[order])
    d = state.dead
    ndim = state.live_u.shape[1]
    trace = RunTrace(
        np.array(d["ll"]), np.array(d["birth"]), np.array(d["n"], dtype=np.int64),
        np.array(d["ins"], dtype=np.int64),
        np.array(d["theta"]).reshape(-1, ndim), np.array(d["u"]).reshape(-1, ndim),
        config_fingerprint=config.fingerprint(),
        problem_fingerprint=problem.fingerprint if problem is not None else "",
        nlive=config.nlive, n_like_calls=state.n_calls, truncated=truncated,
        stop_reason=stop_reason, **final)
    if config.plateau == "B" and len(trace):
        _, ins, _ = kernels.replay(trace.log_like, trace.birth_log_like,
                                   trace.final_log_like, trace.final_birth_log_like)
        trace.insertion_index = ins[:len(trace)]
        trace.final_insertion_index = ins[len(trace):]
    s = state.stats
    trace.meta.update(iterations=state.iteration, proposals=s.proposals, accepts=s.accepts,
                      jitter_events=s.jitter_events, stale_walks=s.stale_walks,
                      backend=kernels.BACKEND)
    if hasattr(state.sampler, "scale"):
        trace.meta["final_step_scale"] = state.sampler.scale
    return trace


def _loop(state, problem, config, stop_fn):
    cap = config.iteration_cap(problem.ndim)
    reason, truncated = "", False
    try:
        while True:
            iterate(state, problem, config)
            if state.done:
                reason = "terminal plateau"
                break
            if stop_fn(state):
                reason = "converged"
                break
            if state.iteration >= cap:
                reason = "max_iterations"
                warnings.warn(f"run stopped at the iteration cap ({cap})", RuntimeWarning)
                break
    except SamplerExhausted as err:
        warnings.warn(f"sampler exhausted: {err}; returning a truncated trace",
                      RuntimeWarning)
        reason, truncated = "sampler exhausted", True
    return reason, truncated


def run(problem, config: RunConfig) -> RunTrace:
    """Run nested sampling on ``problem``; dispatches to :func:`run_dynamic` if asked."""
    if config.dynamic is not None:
        return run_dynamic(problem, config)
    if config.nlive <= problem.ndim:
        warnings.warn(f"nlive={config.nlive} does not exceed the dimension "
                      f"{problem.ndim}", RuntimeWarning)
    with _pool(config.workers) as ex:
        state = init_state(problem, config, ex)
        state._executor = ex
        reason, truncated = _loop(state, problem, config,
                                  lambda s: should_stop(s, config))
        return finalize(state, config, problem, reason, truncated)


class _pool:
    def __init__(self, workers):
        self.ex = ThreadPoolExecutor(workers) if workers > 1 else None

    def __enter__(self):
        return self.ex

    def __exit__(self, *exc):
        if self.ex is not None:
            self.ex.shutdown()


# -----------------------------------------------------------------------------
# merging

def _closed(trace: RunTrace) -> RunTrace:
    """Turn final live points into dead points killed in likelihood order."""
    if trace.n_final == 0:
        return trace
    fu = trace.final_u
    u = None
    if trace.u is not None and fu is not None:
        u = np.concatenate([trace.u, fu])
    n = trace.n_final
    return trace.copy(
        log_like=trace.all_log_like(), birth_log_like=trace.all_birth(),
        n_active=np.concatenate([trace.n_active, np.arange(n, 0, -1)]),
        insertion_index=np.concatenate([trace.insertion_index, trace.final_insertion_index]),
        theta=trace.all_theta(), u=u, final_log_like=np.empty(0),
        final_birth_log_like=np.empty(0), final_insertion_index=np.empty(0, np.int64),
        final_theta=None, final_u=None)


def merge(traces) -> RunTrace:
    """Weave runs into one by pooling their birth/death records.

    Live-point counts and insertion ranks of the result come from replaying
    the pooled births and deaths.
    """
    traces = list(traces)
    if not traces:
        raise TraceError("nothing to merge")
    fps = {t.problem_fingerprint for t in traces}
    if len(fps) > 1:
        raise TraceError(f"cannot merge runs of different problems: {sorted(fps)}")
    if len(traces) == 1 and traces[0].n_final == 0:
        return traces[0].copy()
    closed = [_closed(t) for t in traces]
    ll = np.concatenate([t.log_like for t in closed])
    src = np.concatenate([np.full(len(t), k) for k, t in enumerate(closed)])
    pos = np.concatenate([np.arange(len(t)) for t in closed])
    order = np.lexsort((pos, src, ll))
    birth = np.concatenate([t.birth_log_like for t in closed])[order]
    theta = np.concatenate([t.theta for t in closed])[order]
    u = None
    if all(t.u is not None for t in closed):
        u = np.concatenate([t.u for t in closed])[order]
    ll = ll[order]
    n_act, ins, _ = kernels.replay(ll, birth, np.empty(0), np.empty(0))
    return RunTrace(ll, birth, n_act, ins, theta, u,
                    config_fingerprint=" + ".join(t.config_fingerprint for t in traces),
                    problem_fingerprint=traces[0].problem_fingerprint,
                    nlive=sum(t.nlive for t in traces),
                    dynamic=any(t.dynamic for t in traces),
                    n_like_calls=sum(t.n_like_calls for t in traces),
                    truncated=any(t.truncated for t in traces),
                    stop_reason="merged", meta={"merged": len(traces)})


# -----------------------------------------------------------------------------
# dynamic refinement

def importance(trace: RunTrace, posterior_weight: float) -> np.ndarray:
    """Per-dead-point importance, mixing posterior mass and remaining evidence.

    Both parts are normalized to unit sum before mixing.
    """
    from .estimators import assign_volumes, log_point_weights
    vol = assign_volumes(trace, "mean_log")
    lw = log_point_weights(trace, vol)[:len(trace)]
    lz = log_sum(lw)
    post = np.exp(lw - lz)
    # evidence still to come at each contour, as a fraction of the total
    rem = np.cumsum(post[::-1])[::-1]
    imp = posterior_weight * post / post.sum() + (1 - posterior_weight) * rem / rem.sum()
    return imp


def _window(trace, goal):
    imp = importance(trace, goal.posterior_weight)
    inside = np.flatnonzero(imp >= (1 - WINDOW_FRACTION) * imp.max())
    i0, i1 = int(inside[0]), int(inside[-1])
    start = float(trace.log_like[i0 - 1]) if i0 > 0 else LOG_ZERO
    return start, float(trace.log_like[i1])


def _thread_batch(problem, config, trace, lam_start, lam_end, batch, root, ex):
    """New threads born at ``lam_start`` and run until all have passed ``lam_end``."""
    d = problem.ndim
    cfg = RunConfig(**{**config.as_dict(), "nlive": batch, "dynamic": None,
                       "finalize": "kill_one_by_one", "plateau": "A"})
    if lam_start == LOG_ZERO:
        st = init_state(problem, cfg, ex, root=root)
    else:
        ll_all = trace.all_log_like()
        mask = (trace.all_birth() < lam_start) & (ll_all > lam_start)
        pool_u = np.concatenate([trace.u, trace.final_u])[mask] \
            if trace.n_final and trace.final_u is not None else trace.u[mask[:len(trace)]]
        pool_ll = ll_all[mask]
        sampler = make_sampler(cfg.sampler, d)
        sampler.refresh(pool_u, pool_ll, root.child(_REFRESH, 1 << 30).generator())
        items = []
        calls = 0
        evaluate = _evaluator(problem, ex, config.workers)
        queue = deque()
        for r in range(batch):
            while queue and queue[0][1] <= lam_start:
                queue.popleft()
            if queue:
                items.append(queue.popleft())
                continue
            gen = root.child(_INIT, r).generator()
            valid, s = sampler.draw(problem, pool_u, pool_ll, lam_start, gen, evaluate)
            calls += s.likelihood_calls
            items.append(valid[0])
            queue.extend(valid[1:])
        u = np.array([it[0] for it in items]).reshape(batch, d)
        ll = np.array([it[1] for it in items])
        st = init_state(problem, cfg, ex, initial=(u, ll, np.full(batch, lam_start)),
                        root=root)
        st.n_calls = calls
    st._executor = ex
    _loop(st, problem, cfg, lambda s: float(np.min(s.live_ll)) > lam_end
          if s.n_live else True)
    return finalize(st, cfg, problem, "thread batch")


def run_dynamic(problem, config: RunConfig) -> RunTrace:
    """Exploratory run followed by batches of threads injected where importance peaks.

    The window is every contour whose importance reaches
    ``(1 - WINDOW_FRACTION)`` of the maximum; each batch is born at the contour
    just before the window and killed once it has passed the window's end.
    """
    goal = config.dynamic or DynamicGoal()
    base = RunConfig(**{**config.as_dict(), "dynamic": None,
                        "finalize": "kill_one_by_one"})
    trace = run(problem, base)
    if goal.budget == 0:
        return trace
    if goal.budget < goal.batch:
        warnings.warn("dynamic budget is smaller than one batch; returning the "
                      "exploratory run", RuntimeWarning)
        return trace
    used = 0
    k = 0
    windows = []
    with _pool(config.workers) as ex:
        while used < goal.budget:
            lam_start, lam_end = _window(trace, goal)
            windows.append((lam_start, lam_end))
            root = RngStream(config.seed, (_DYN, k))
            extra = _thread_batch(problem, config, trace, lam_start, lam_end,
                                  goal.batch, root, ex)
            used += extra.n_like_calls
            trace = merge([trace, extra])
            k += 1
    trace.dynamic = True
    trace.nlive = config.nlive
    trace.config_fingerprint = config.fingerprint()
    trace.stop_reason = "dynamic budget"
    trace.meta.update(batches=k, extra_calls=used, windows=windows)
    return trace


def parallel_speedup_model(ncpu: int, nlive: int, efficiency: float) -> dict:
    """Predicted speed-ups of the two parallel schemes.

    ``discard``: ``min(ncpu, 1/efficiency)`` when surplus valid candidates are
    thrown away; ``defer``: ``nlive * log(1 + ncpu/nlive)`` when they are kept
    for later iterations.
    """
    if ncpu <= 0 or nlive <= 0 or efficiency <= 0:
        raise ValueError("ncpu, nlive and efficiency must be positive")
    return {"discard": min(float(ncpu), 1.0 / efficiency),
            "defer": nlive * math.log1p(ncpu / nlive)}
