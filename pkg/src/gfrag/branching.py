"""Event-driven branching particle system for growth-fragmentation dynamics.

A particle of size x grows deterministically at rate c x^(alpha+1) with
c = b + int (1-y) K(dy), and splits at rate x^alpha |K| into two children of
sizes y x and (1-y) x with y drawn from K/|K|.  Both the growth flow and the
next-split time are available in closed form, so the simulation is a pure
discrete-event loop on a binary heap keyed by absolute event time.

Requires a = 0 and |K| < infinity: outside that regime the particle system
has no elementary construction.  Particles falling below the freeze floor
stop evolving (they are retained in snapshots at their frozen size); the
event cap truncates the run.  Both caps exist because the self-similar
system can explode: event counts ahead of some random time are unbounded,
and no floor removes that (the sub-floor cascade is supercritical), so a
capped trace is an expected outcome, flagged rather than hidden.

An optional interval watcher tracks how many particles currently have sizes
inside a fixed interval, using exact crossing times of the growth flow; the
explosion experiment is built on it.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DriftConditionFailed, TruncatedTrace, UnsupportedRegime
from .kappa_core import DislocationMeasure, ModelParams, malthus_roots, validate_model
from .rng import RngStream

END_SPLIT = 0
END_HORIZON = 1
END_FROZEN = 2
END_CAPPED = 3
_REASONS = ("split", "horizon", "frozen_small", "capped")

_EV_SPLIT = 0
_EV_ENTER = 1
_EV_EXIT = 2
_EV_BLOWUP = 3

_EXP_OVERFLOW = 700.0


# ---------------------------------------------------------------------------
# closed-form growth and split-time inversion
# ---------------------------------------------------------------------------

def growth_flow(x0: float, t: float, c: float, alpha: float) -> float:
    """Size after time t of the flow dx = c x^(alpha+1) dt started at x0.

    Returns +inf at and after the blowup time (alpha > 0, c > 0) and 0.0 at
    and after the extinction time (alpha < 0, c < 0).
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if alpha == 0.0:
        return x0 * math.exp(c * t)
    base = x0 ** (-alpha) - c * alpha * t
    if base <= 0.0:
        return math.inf if alpha > 0.0 else 0.0
    return base ** (-1.0 / alpha)


def blowup_time(x0: float, c: float, alpha: float) -> float | None:
    """Finite blowup time of the growth flow, or None when it never blows up."""
    if alpha > 0.0 and c > 0.0:
        return x0 ** (-alpha) / (c * alpha)
    return None


def next_split_time(
    x0: float, c: float, alpha: float, total_rate: float, exp_draw: float
) -> float:
    """Waiting time until the first split of a growing particle.

    Inverts the integrated rate Lambda(t) = |K| int_0^t x(s)^alpha ds at a
    unit-exponential draw, in closed form for every (c, alpha) combination.
    The integrated rate always diverges for these power-law flows, so a
    split time is always finite (it may exceed any horizon of interest).
    """
    if total_rate <= 0.0:
        return math.inf
    if exp_draw < 0.0:
        raise ValueError("exp_draw must be nonnegative")
    if alpha == 0.0:
        return exp_draw / total_rate
    if c == 0.0:
        return exp_draw / (total_rate * x0 ** alpha)
    z = -c * alpha * exp_draw / total_rate
    if z > _EXP_OVERFLOW:
        return math.inf
    return -(x0 ** (-alpha)) / (c * alpha) * math.expm1(z)


def _crossing_time(s: float, level: float, c: float, alpha: float) -> float:
    """Time for the growth flow from s to reach level (requires c > 0, s < level)."""
    if alpha == 0.0:
        return math.log(level / s) / c
    return (s ** (-alpha) - level ** (-alpha)) / (c * alpha)


# ---------------------------------------------------------------------------
# caps, watcher, trace
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimCaps:
    max_events: int = 10_000_000
    min_size: float = 1e-8
    horizon: float = 1.0

    def __post_init__(self):
        if self.max_events <= 0 or self.min_size <= 0.0 or self.horizon <= 0.0:
            raise ValueError("all caps must be positive")

    def to_json(self) -> dict:
        return {
            "max_events": self.max_events,
            "min_size": self.min_size,
            "horizon": self.horizon,
        }


@dataclass(frozen=True)
class WatchSpec:
    """Track the number of particles currently sized inside [lo, hi]."""

    lo: float
    hi: float
    thresholds: tuple[int, ...] = ()
    stop_when: int | None = None


@dataclass(frozen=True)
class ParticleRecord:
    id: int
    parent_id: int | None
    birth_time: float
    birth_size: float
    end_time: float
    end_reason: str
    child_ids: tuple[int, int] | None


@dataclass
class PopulationTrace:
    """Array-backed genealogical record of one branching run."""

    model: ModelParams
    caps: SimCaps
    seed_echo: tuple[int, int]
    growth_rate: float
    birth_time: np.ndarray
    birth_size: np.ndarray
    parent: np.ndarray
    end_time: np.ndarray
    end_reason: np.ndarray
    first_child: np.ndarray
    n_events: int
    truncated: bool = False
    truncated_at: float | None = None
    blowup_at: float | None = None
    watch_report: dict | None = None

    @property
    def n_particles(self) -> int:
        return self.birth_time.size

    def records(self) -> list[ParticleRecord]:
        out = []
        for i in range(self.n_particles):
            fc = int(self.first_child[i])
            out.append(
                ParticleRecord(
                    id=i,
                    parent_id=None if self.parent[i] < 0 else int(self.parent[i]),
                    birth_time=float(self.birth_time[i]),
                    birth_size=float(self.birth_size[i]),
                    end_time=float(self.end_time[i]),
                    end_reason=_REASONS[int(self.end_reason[i])],
                    child_ids=None if fc < 0 else (fc, fc + 1),
                )
            )
        return out

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["id", "parent_id", "birth_time", "birth_size",
                 "end_time", "end_reason", "child0", "child1"]
            )
            for i in range(self.n_particles):
                fc = int(self.first_child[i])
                writer.writerow([
                    i,
                    "" if self.parent[i] < 0 else int(self.parent[i]),
                    repr(float(self.birth_time[i])),
                    repr(float(self.birth_size[i])),
                    repr(float(self.end_time[i])),
                    _REASONS[int(self.end_reason[i])],
                    "" if fc < 0 else fc,
                    "" if fc < 0 else fc + 1,
                ])


# ---------------------------------------------------------------------------
# main event loop
# ---------------------------------------------------------------------------

def _split_fraction_sampler(K: DislocationMeasure, gen: np.random.Generator):
    """Return a nullary callable drawing y from K normalised to a probability."""
    atom_y = np.array([y for y, _ in K.atoms])
    atom_w = np.array([w for _, w in K.atoms])
    dens_mass = 0.0
    if K.has_density:
        beta = K.density.beta
        if beta >= 1.0:
            raise UnsupportedRegime("density with beta >= 1 has infinite total mass")
        e = 1.0 - beta
        half_pow = 0.5 ** e
        dens_mass = K.density.coefficient * half_pow / e
    total = atom_w.sum() + dens_mass

    if atom_y.size == 1 and dens_mass == 0.0:
        y0 = float(atom_y[0])
        return lambda: y0

    cum = np.concatenate([np.cumsum(atom_w), [total]])
    buf = {"u": gen.random(8192), "i": 0}

    def draw_u() -> float:
        i = buf["i"]
        if i >= buf["u"].size:
            buf["u"] = gen.random(8192)
            i = 0
        buf["i"] = i + 1
        return float(buf["u"][i])

    def draw() -> float:
        u = draw_u() * total
        idx = int(np.searchsorted(cum, u, side="right"))
        if idx < atom_y.size:
            return float(atom_y[idx])
        # density component: u = 1-y has density prop. to u^(-beta) on (0, 1/2]
        v = draw_u()
        u1my = (v * half_pow) ** (1.0 / e)
        return 1.0 - u1my

    return draw


def simulate_population(
    p: ModelParams,
    x0: float,
    caps: SimCaps,
    rng: RngStream,
    record: bool = True,
    watch: WatchSpec | None = None,
) -> PopulationTrace:
    """Run the branching system from a single particle of size x0.

    ``record=False`` keeps only counters and the watcher report (the
    genealogy arrays stay empty), which is what the explosion experiment
    uses for capped runs.
    """
    validate_model(p)
    if p.a != 0.0:
        raise UnsupportedRegime("branching simulation requires a = 0")
    total_rate = p.K.total_mass()
    if not math.isfinite(total_rate):
        raise UnsupportedRegime("branching simulation requires |K| < infinity")
    if x0 <= 0.0:
        raise ValueError("x0 must be positive")
    c = p.b + p.K.first_moment()
    alpha = p.alpha
    horizon = caps.horizon
    min_size = caps.min_size
    max_events = caps.max_events

    if watch is not None and c <= 0.0:
        raise ValueError("the interval watcher assumes strictly increasing sizes (c > 0)")

    gen = rng.generator()
    draw_y = _split_fraction_sampler(p.K, gen)

    # hot-loop locals: exponent bookkeeping reuses s^(-alpha) between the
    # split-time inversion, the growth flow and the watcher crossing times
    neg_alpha = -alpha
    inv_alpha = (-1.0 / alpha) if alpha != 0.0 else 0.0
    ca = c * alpha
    rate_scale = -ca / total_rate if total_rate > 0.0 else 0.0
    exp_buf = gen.exponential(size=16384)
    exp_n = exp_buf.size
    exp_i = 0
    m_expm1 = math.expm1
    m_exp = math.exp

    birth_time: list[float] = []
    birth_size: list[float] = []
    parent: list[int] = []
    end_time: list[float] = []
    end_reason: list[int] = []
    first_child: list[int] = []

    pending: dict[int, tuple[float, float, float]] = {}  # uid -> (tb, s, s^-alpha)
    heap: list[tuple[float, int, int]] = []
    push = heapq.heappush
    pop = heapq.heappop

    watching = watch is not None
    if watching:
        lo, hi = watch.lo, watch.hi
        lo_pow = lo ** neg_alpha if alpha != 0.0 else math.log(lo)
        hi_pow = hi ** neg_alpha if alpha != 0.0 else math.log(hi)
        thresholds = tuple(sorted(watch.thresholds))
        first_exceed: dict[int, float | None] = {thr: None for thr in thresholds}
        thr_idx = 0
        n_thr = len(thresholds)
        stop_when = watch.stop_when if watch.stop_when is not None else -1
        inside: set[int] = set()
        count = 0
        max_count = 0
        max_count_t = 0.0

    n_events = 0
    n_frozen = 0
    uid = 0
    truncated = False
    truncated_at: float | None = None
    blowup_at: float | None = None
    stopped_early = False
    has_blowup = alpha > 0.0 and c > 0.0

    def spawn(tb: float, s: float, par: int) -> None:
        nonlocal uid, n_frozen, exp_buf, exp_i, count, max_count, max_count_t
        nonlocal thr_idx, stopped_early, truncated, truncated_at
        u = uid
        uid += 1
        if record:
            birth_time.append(tb)
            birth_size.append(s)
            parent.append(par)
            first_child.append(-1)
        if s < min_size:
            n_frozen += 1
            if record:
                end_time.append(tb)
                end_reason.append(END_FROZEN)
            return
        if exp_i >= exp_n:
            exp_buf = gen.exponential(size=16384)
            exp_i = 0
        e_draw = exp_buf[exp_i]
        exp_i += 1

        if alpha == 0.0:
            s_pow = math.log(s)  # log-size doubles as the "power" cache
            t_split = tb + e_draw / total_rate
        else:
            s_pow = s ** neg_alpha
            if ca == 0.0:
                t_split = tb + e_draw * s_pow / total_rate  # c == 0: rate |K| s^alpha
            else:
                z = rate_scale * e_draw
                t_split = tb + (-s_pow / ca) * m_expm1(z) if z <= _EXP_OVERFLOW else math.inf

        t_stop = t_split if t_split < horizon else horizon
        t_blow = None
        if has_blowup:
            t_blow = tb + s_pow / ca if alpha != 0.0 else None
            if t_blow is not None and t_blow <= t_stop:
                push(heap, (t_blow, _EV_BLOWUP, u))
                t_stop = t_blow
        if record:
            end_time.append(math.nan)
            end_reason.append(END_SPLIT)
        pending[u] = (tb, s, s_pow)
        if t_split < horizon and (t_blow is None or t_split < t_blow):
            push(heap, (t_split, _EV_SPLIT, u))
        elif record:
            end_time[u] = horizon
            end_reason[u] = END_HORIZON

        if watching and s <= hi:
            if s >= lo:
                inside.add(u)
                count += 1
                if count > max_count:
                    max_count = count
                    max_count_t = tb
                    while thr_idx < n_thr and count >= thresholds[thr_idx]:
                        first_exceed[thresholds[thr_idx]] = tb
                        thr_idx += 1
                    if 0 <= stop_when <= count:
                        stopped_early = True
                        truncated = True
                        truncated_at = tb
            else:
                t_enter = tb + ((lo_pow - s_pow) / c if alpha == 0.0
                                else (s_pow - lo_pow) / ca)
                if t_enter < t_stop:
                    push(heap, (t_enter, _EV_ENTER, u))
            if s < hi:
                t_exit = tb + ((hi_pow - s_pow) / c if alpha == 0.0
                               else (s_pow - hi_pow) / ca)
                if t_exit < t_stop:
                    push(heap, (t_exit, _EV_EXIT, u))

    spawn(0.0, x0, -1)

    while heap and not truncated:
        t, kind, u = pop(heap)
        if kind == _EV_SPLIT:
            if u not in pending:
                continue
            if n_events >= max_events:
                truncated = True
                truncated_at = t
                break
            n_events += 1
            tb, s, s_pow = pending.pop(u)
            if watching and u in inside:
                inside.discard(u)
                count -= 1
            if alpha == 0.0:
                x = s * m_exp(c * (t - tb))
            else:
                base = s_pow - ca * (t - tb)
                x = base ** inv_alpha if base > 0.0 else math.inf
            y = draw_y()
            if record:
                end_time[u] = t
                end_reason[u] = END_SPLIT
                first_child[u] = uid
            # the complement child is x - y*x, not (1-y)*x, so the two birth
            # sizes sum to the parent size exactly in floating point
            child = y * x
            spawn(t, child, u)
            spawn(t, x - child, u)
        elif kind == _EV_ENTER:
            if u in pending and u not in inside:
                inside.add(u)
                count += 1
                if count > max_count:
                    max_count = count
                    max_count_t = t
                    while thr_idx < n_thr and count >= thresholds[thr_idx]:
                        first_exceed[thresholds[thr_idx]] = t
                        thr_idx += 1
                    if 0 <= stop_when <= count:
                        stopped_early = True
                        truncated = True
                        truncated_at = t
        elif kind == _EV_EXIT:
            if u in pending and u in inside:
                inside.discard(u)
                count -= 1
        else:  # _EV_BLOWUP
            if u in pending:
                truncated = True
                truncated_at = t
                blowup_at = t

    if truncated and record:
        for u in pending:
            end_time[u] = truncated_at
            end_reason[u] = END_CAPPED

    watch_report = None
    if watching:
        watch_report = {
            "lo": lo,
            "hi": hi,
            "max_count": max_count,
            "max_count_time": max_count_t,
            "first_exceed": {str(thr): first_exceed[thr] for thr in thresholds},
            "stopped_early": stopped_early,
        }

    return PopulationTrace(
        model=p,
        caps=caps,
        seed_echo=(rng.seed, rng.stream_id),
        growth_rate=c,
        birth_time=np.asarray(birth_time),
        birth_size=np.asarray(birth_size),
        parent=np.asarray(parent, dtype=np.int64),
        end_time=np.asarray(end_time),
        end_reason=np.asarray(end_reason, dtype=np.int8),
        first_child=np.asarray(first_child, dtype=np.int64),
        n_events=n_events,
        truncated=truncated,
        truncated_at=truncated_at,
        blowup_at=blowup_at,
        watch_report=watch_report,
    )


# ---------------------------------------------------------------------------
# trace queries
# ---------------------------------------------------------------------------

def _check_time(trace: PopulationTrace, t: float) -> None:
    if t < 0.0 or t > trace.caps.horizon:
        raise ValueError(f"t = {t} outside [0, horizon]")
    if trace.truncated and t > trace.truncated_at:
        raise TruncatedTrace(
            f"trace truncated at {trace.truncated_at}; cannot query t = {t}"
        )
    if not trace.birth_time.size:
        raise TruncatedTrace("trace carries no records (run with record=True)")


def snapshot(trace: PopulationTrace, t: float) -> np.ndarray:
    """Sizes of particles alive at time t, growth flow applied from birth.

    Frozen particles are retained at their frozen size.  A particle that
    splits at t is replaced by its children at exactly t.
    """
    _check_time(trace, t)
    born = trace.birth_time <= t
    frozen = trace.end_reason == END_FROZEN
    open_end = (trace.end_reason == END_SPLIT) & (t < trace.end_time)
    at_end = (trace.end_reason != END_SPLIT) & (t <= trace.end_time)
    alive = born & (frozen | open_end | at_end)
    sizes = np.array(trace.birth_size[alive])
    dt = t - trace.birth_time[alive]
    grow = ~frozen[alive]
    if grow.any():
        c, alpha = trace.growth_rate, trace.model.alpha
        if alpha == 0.0:
            sizes[grow] = sizes[grow] * np.exp(c * dt[grow])
        else:
            base = sizes[grow] ** (-alpha) - c * alpha * dt[grow]
            sizes[grow] = np.where(base > 0.0, base, np.nan) ** (-1.0 / alpha)
    return sizes


def count_in_interval(trace: PopulationTrace, t: float, lo: float, hi: float) -> int:
    sizes = snapshot(trace, t)
    return int(((sizes >= lo) & (sizes <= hi)).sum())


def empirical_moment(trace: PopulationTrace, t: float, q: float) -> float:
    """Sum of size^q over the particles alive at t."""
    sizes = snapshot(trace, t)
    return float(np.sum(sizes ** q))


# ---------------------------------------------------------------------------
# explosion experiment
# ---------------------------------------------------------------------------

def _log_moments(K: DislocationMeasure) -> tuple[float, float]:
    """(E[log Y], E[log(1-Y)]) under K normalised to a probability."""
    total = K.total_mass()
    m_y = sum(w * math.log(y) for y, w in K.atoms)
    m_1y = sum(w * math.log1p(-y) for y, w in K.atoms)
    if K.has_density:
        from scipy import integrate as _int

        C, beta = K.density.coefficient, K.density.beta
        f1, _ = _int.quad(lambda y: math.log(y) * (1 - y) ** (-beta), 0.5, 1.0)
        f2, _ = _int.quad(lambda y: math.log1p(-y) * (1 - y) ** (-beta), 0.5, 1.0)
        m_y += C * f1
        m_1y += C * f2
    return m_y / total, m_1y / total


def explosion_experiment(
    K: DislocationMeasure,
    c: float,
    alpha: float,
    interval: tuple[float, float],
    thresholds: tuple[int, ...],
    caps: SimCaps,
    rng: RngStream,
    runs: int = 100,
    x0: float = 1.0,
    stop_at_top_threshold: bool = True,
) -> dict:
    """Seeded replicas of the watcher experiment on a compact size interval.

    Preconditions mirror the explosive regime: K is a probability measure,
    alpha < 0 and E[log(1-Y)] + c < 0 < E[log Y] + c (so one child drifts
    down, the other up).  In this regime inf kappa > 0 (no Malthusian root),
    which the report includes next to the per-run counts.
    """
    total = K.total_mass()
    if abs(total - 1.0) > 1e-9:
        raise DriftConditionFailed(f"K must be a probability measure, |K| = {total}")
    if alpha >= 0.0:
        raise DriftConditionFailed("the experiment requires alpha < 0")
    m_y, m_1y = _log_moments(K)
    if not (m_1y + c < 0.0 < m_y + c):
        raise DriftConditionFailed(
            f"need E[log(1-Y)] + c < 0 < E[log Y] + c, got {m_1y + c:.4g}, {m_y + c:.4g}"
        )

    p = ModelParams(a=0.0, b=c - K.first_moment(), alpha=alpha, K=K)
    roots = malthus_roots(p)

    lo, hi = interval
    thresholds = tuple(sorted(thresholds))
    stop_when = thresholds[-1] if (stop_at_top_threshold and thresholds) else None
    run_rows = []
    for i in range(runs):
        trace = simulate_population(
            p, x0, caps, rng.substream("run", i), record=False,
            watch=WatchSpec(lo=lo, hi=hi, thresholds=thresholds, stop_when=stop_when),
        )
        w = trace.watch_report
        run_rows.append({
            "run": i,
            "max_count": w["max_count"],
            "max_count_time": w["max_count_time"],
            "first_exceed": w["first_exceed"],
            "events": trace.n_events,
            "capped": trace.truncated and not w["stopped_early"],
            "blowup": trace.blowup_at is not None,
        })

    n_exceeded = {
        str(thr): sum(1 for r in run_rows if r["first_exceed"][str(thr)] is not None)
        for thr in thresholds
    }
    return {
        "drift_condition": {"E_log_y_plus_c": m_y + c, "E_log_1my_plus_c": m_1y + c},
        "inf_kappa": roots.inf_value,
        "inf_kappa_argmin": roots.argmin,
        "interval": [lo, hi],
        "thresholds": list(thresholds),
        "caps": caps.to_json(),
        "runs": runs,
        "n_exceeded": n_exceeded,
        "per_run": run_rows,
    }
