"""Customised NSGA-II over subsequence-of-interest chromosomes.

A chromosome is ``(start, end, ref_idx)``: the half-open SoI ``[start, end)``
and the index of the reference that guides its values. Variation only touches
the interval; every offspring is then expanded over all references.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .objectives import evaluate
from .reference import SAME_LABEL_DISTANCE, NoReferenceError, ReferenceSet, select_references
from .soigen import generate_many
from .timeseries import Dataset


class Chromosome(NamedTuple):
    start: int
    end: int
    ref_idx: int

    @property
    def length(self) -> int:
        return self.end - self.start

    def is_valid(self, m: int, K: int | None = None) -> bool:
        ok = 0 <= self.start < self.end <= m
        if K is not None:
            ok = ok and 0 <= self.ref_idx < K
        return ok


@dataclass
class RunConfig:
    """Search settings. ``tau=None`` disables the length-ratio bias of mutation."""

    pop_size: int = 50
    generations: int = 50
    p_crossover: float = 0.7
    p_mutation: float = 0.7
    n_references: int = 4
    tau: float | None = 0.4
    ar_order: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError(f"pop_size must be an even number >= 2, got {self.pop_size}")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("p_crossover", "p_mutation"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.n_references < 1:
            raise ValueError("n_references must be >= 1")
        if self.tau is not None and not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1) or be null")
        if self.ar_order < 1:
            raise ValueError("ar_order must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown RunConfig fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FrontPartition:
    fronts: list  # index arrays, best front first
    ranks: np.ndarray
    crowding: np.ndarray


@dataclass(frozen=True)
class Candidate:
    chrom: Chromosome
    series: np.ndarray
    f1: float
    f2: float


@dataclass
class ExplainResult:
    target: np.ndarray
    target_label: int
    references: ReferenceSet
    candidates: list
    n_dropped_invalid: int = 0
    scores: list = field(default_factory=list)  # per-candidate metric dicts

    @property
    def objectives(self) -> np.ndarray:
        return np.array([[c.f1, c.f2] for c in self.candidates]).reshape(-1, 2)

    @property
    def series(self) -> np.ndarray:
        return np.array([c.series for c in self.candidates]).reshape(-1, self.target.shape[0])


def init_population(N: int, m: int, K: int, rng) -> list:
    """Uniform random chromosomes: start in [0, m-2], end in [start+1, m], ref in [0, K-1]."""
    if m < 2:
        raise ValueError("series length must be >= 2")
    pop = []
    for _ in range(N):
        start = int(rng.integers(0, m - 1))
        end = int(rng.integers(start + 1, m + 1))
        pop.append(Chromosome(start, end, int(rng.integers(0, K))))
    return pop


def _tournament_index(ranks, crowding, rng) -> int:
    i, j = (int(v) for v in rng.integers(0, ranks.shape[0], size=2))
    if ranks[j] < ranks[i]:
        return j
    if ranks[j] == ranks[i] and crowding[j] > crowding[i]:
        return j
    return i


def tournament_select(population, partition: FrontPartition, rng) -> Chromosome:
    """Binary tournament: lower rank wins, then larger crowding, then the first draw."""
    return Chromosome(*population[_tournament_index(partition.ranks, partition.crowding, rng)])


def crossover(a, b, p_cx: float, rng):
    """Recombine two SoIs so the offspring overlap as little as possible.

    ``ref_idx`` is carried over from the respective parent.
    """
    a, b = Chromosome(*a), Chromosome(*b)
    if not rng.random() < p_cx:
        return a, b
    alpha = sorted({a.start, a.end, b.start, b.end})
    if len(alpha) == 4:
        A = abs(a.start - b.start) + abs(a.end - b.end)
        B = abs(a.start - b.end) + abs(a.end - b.start)
        if A <= B:
            s1, e1 = sorted((a.start, b.start))
            s2, e2 = sorted((a.end, b.end))
        else:
            s1, e1 = sorted((a.start, b.end))
            s2, e2 = sorted((a.end, b.start))
    elif len(alpha) == 3:
        s1, e1 = alpha[0], alpha[1]
        s2, e2 = alpha[1], alpha[2]
    else:
        lo, hi = alpha
        if hi - lo < 2:
            return a, b
        split = int(rng.integers(lo + 1, hi))
        s1, e1, s2, e2 = lo, split, split, hi
    return Chromosome(s1, e1, a.ref_idx), Chromosome(s2, e2, b.ref_idx)


def extension_probability(length: int, m: int, tau: float | None) -> float:
    """Binomial success rate ``exp(ln(0.5) / tau * length / m)``; 0.5 when tau is off.

    Written as ``0.5 ** (length / (tau * m))`` so it is exactly 0.5 at
    ``length == tau * m``.
    """
    if tau is None or not 0.0 < tau < 1.0:
        return 0.5
    return 0.5 ** (length / (tau * m))


def sample_length(length: int, m: int, tau: float | None, rng) -> int:
    """Draw from Binomial(2 * length, extension_probability(length, m, tau))."""
    return int(rng.binomial(2 * length, extension_probability(length, m, tau)))


def mutate(x, p_mu: float, tau: float | None, m: int, rng) -> Chromosome:
    """Rescale the SoI length by a binomial draw, moving one endpoint only."""
    x = Chromosome(*x)
    if not rng.random() < p_mu:
        return x
    grow_right = rng.random() < 0.5
    new_len = sample_length(x.end - x.start, m, tau, rng)
    if grow_right:
        return Chromosome(x.start, min(max(x.start + new_len, x.start + 1), m), x.ref_idx)
    return Chromosome(max(min(x.end - new_len, x.end - 1), 0), x.end, x.ref_idx)


def expand(x, K: int) -> list:
    """One copy of ``x`` per reference index ``0..K-1``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return [Chromosome(x[0], x[1], k) for k in range(K)]


def fast_nondominated_sort(points) -> FrontPartition:
    """Pareto fronts (minimisation) plus per-front crowding distance."""
    if len(points) == 0:
        return FrontPartition([], np.zeros(0, dtype=np.int64), np.zeros(0))
    F = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(len(points), -1))
    ranks = np.asarray(kernels.nondominated_ranks(F))
    crowding = np.asarray(kernels.crowding_distance(F, ranks))
    fronts = [np.flatnonzero(ranks == r) for r in range(int(ranks.max()) + 1)]
    return FrontPartition(fronts, ranks, crowding)


def survive(points, N: int):
    """Indices of the ``N`` survivors by rank, then descending crowding, then index.

    Returns ``(indices, partition)`` where ``partition`` describes the full pool.
    """
    part = fast_nondominated_sort(points)
    chosen = []
    for front in part.fronts:
        if len(chosen) + front.size <= N:
            chosen.extend(front.tolist())
            if len(chosen) == N:
                break
            continue
        order = np.argsort(-part.crowding[front], kind="stable")
        chosen.extend(front[order[: N - len(chosen)]].tolist())
        break
    return np.array(chosen, dtype=np.int64), part


class _Evaluator:
    def __init__(self, target, refs, f, p, memoize):
        self.target = target
        self.refs = refs
        self.f = f
        self.p = p
        self.cache = {} if memoize else None
        self.n_generated = 0

    def __call__(self, chroms: np.ndarray):
        if self.cache is None:
            series = generate_many(self.target, self.refs.series, chroms, self.p)
            self.n_generated += chroms.shape[0]
        else:
            keys = [tuple(int(v) for v in row) for row in chroms]
            missing = sorted({k for k in keys if k not in self.cache})
            if missing:
                fresh = generate_many(self.target, self.refs.series, np.array(missing), self.p)
                self.n_generated += len(missing)
                self.cache.update(zip(missing, fresh))
            series = np.array([self.cache[k] for k in keys]).reshape(len(keys), -1)
        return series, evaluate(series, self.target, self.refs, self.f)


def run_explain(
    target,
    f,
    pool: Dataset,
    config: RunConfig | None = None,
    *,
    pool_probs=None,
    memoize: bool = False,
    on_generation: Callable | None = None,
) -> ExplainResult:
    """Search for Pareto-optimal counterfactuals of ``target`` under classifier ``f``.

    References come from ``pool`` (typically the training set). The returned
    candidates are the non-dominated members of the final population that flip
    the prediction; non-flipping members of that front are counted in
    ``n_dropped_invalid``. Raises :class:`NoReferenceError` when no pool series
    is predicted to another class.
    """
    from .metrics import score_candidates

    config = config or RunConfig()
    target = np.ascontiguousarray(target, dtype=np.float64)
    m = target.shape[0]
    if m != pool.length:
        raise ValueError(f"target length {m} does not match pool length {pool.length}")
    rng = np.random.default_rng(config.seed)
    N = config.pop_size

    refs = select_references(target, pool, f, config.n_references, pool_probs=pool_probs)
    if len(refs) == 0:
        raise NoReferenceError(
            f"no reference: every pool series is predicted as class {refs.target_label}"
        )
    K = len(refs)
    evaluator = _Evaluator(target, refs, f, config.ar_order, memoize)

    pop = np.array(init_population(N, m, K, rng), dtype=np.int64)
    series, F = evaluator(pop)
    part = fast_nondominated_sort(F)
    ranks, crowd = part.ranks, part.crowding

    for gen in range(config.generations):
        children = []
        for _ in range(N):
            a = pop[_tournament_index(ranks, crowd, rng)]
            b = pop[_tournament_index(ranks, crowd, rng)]
            children.extend(crossover(a, b, config.p_crossover, rng))
        children = [mutate(c, config.p_mutation, config.tau, m, rng) for c in children]
        offspring = np.array([e for c in children for e in expand(c, K)], dtype=np.int64)
        off_series, off_F = evaluator(offspring)

        pool_chroms = np.concatenate([pop, offspring])
        pool_F = np.concatenate([F, off_F])
        pool_series = np.concatenate([series, off_series])
        keep, part = survive(pool_F, N)
        pop, F, series = pool_chroms[keep], pool_F[keep], pool_series[keep]
        ranks, crowd = part.ranks[keep], part.crowding[keep]
        if on_generation is not None:
            on_generation(gen, pop, F)

    final = fast_nondominated_sort(F)
    front = final.fronts[0]
    valid = front[F[front, 0] < SAME_LABEL_DISTANCE]
    candidates = [
        Candidate(Chromosome(*(int(v) for v in pop[i])), series[i], float(F[i, 0]), float(F[i, 1]))
        for i in valid
    ]
    result = ExplainResult(
        target=target,
        target_label=refs.target_label,
        references=refs,
        candidates=candidates,
        n_dropped_invalid=int(front.size - valid.size),
    )
    result.scores = score_candidates(target, result.series, f)
    return result
