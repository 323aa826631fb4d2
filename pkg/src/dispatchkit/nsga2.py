"""NSGA-II exploration over penalty matrices and weighting schemes.

A genome is K^2+1 reals: the penalty matrix row-major in [0, 100]
(diagonal genes exist but are ignored at decode) plus a weighting-scheme
selector in [0, 3). Each individual's fitness is one full head training
plus system evaluation, so evaluations are farmed out to a process pool;
per-individual seeds derive from (master seed, generation, index), which
keeps runs bit-identical regardless of worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .evaluation import CostModel, EvalPoint, cost_model_for, dominates, hypervolume_2d
from .evaluation import evaluate_system
from .head import TrainConfig, TrainingDiverged, head_cost_mflops, init_head, train_head
from .losses import PENALTY_MAX, LossConfig, WeightingScheme, WeightingSpec
from .oracle import oracle_relabel
from .scenario import Scenario

SCHEME_ORDER = (WeightingScheme.INS, WeightingScheme.ISNS, WeightingScheme.ENS)
SELECTOR_MAX = 3.0


@dataclass(frozen=True)
class MoeaConfig:
    population: int = 50
    generations: int = 50
    sbx_eta: float = 20.0
    crossover_prob: float = 0.9
    mutation_eta: float = 25.0
    mutation_prob: float | None = None  # default 1/(K^2+1)
    penalty_step: float = 0.5
    ens_beta: float = 0.999
    seed: int = 0

    def __post_init__(self):
        if self.population < 1 or self.generations < 0:
            raise ValueError("population >= 1 and generations >= 0 required")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must be in [0, 1]")
        if not 0.5 <= self.penalty_step <= 1.0:
            raise ValueError("penalty_step must be in [0.5, 1]")


def genome_length(num_models: int) -> int:
    return num_models * num_models + 1


def gene_bounds(num_models: int) -> tuple[np.ndarray, np.ndarray]:
    k2 = num_models * num_models
    low = np.zeros(k2 + 1)
    high = np.concatenate([np.full(k2, PENALTY_MAX), [SELECTOR_MAX]])
    return low, high


def decode_genome(
    genes: np.ndarray, num_models: int, penalty_step: float = 0.5, ens_beta: float = 0.999
) -> tuple[np.ndarray, WeightingSpec]:
    """Genome -> (penalty matrix, weighting spec).

    Penalty genes quantize to the nearest multiple of penalty_step, the
    diagonal is forced to 0, and the selector maps by floor to
    INS/ISNS/ENS (exactly 3 clamps to ENS).
    """
    genes = np.asarray(genes, dtype=float)
    k = num_models
    if genes.shape != (genome_length(k),):
        raise ValueError(f"genome length {genes.shape} != {genome_length(k)}")
    p = np.round(genes[: k * k] / penalty_step) * penalty_step
    p = np.clip(p, 0.0, PENALTY_MAX).reshape(k, k)
    np.fill_diagonal(p, 0.0)
    sel = min(int(np.floor(genes[-1])), len(SCHEME_ORDER) - 1)
    return p, WeightingSpec(scheme=SCHEME_ORDER[sel], beta=ens_beta)


def encode_genome(penalties: np.ndarray, weighting: WeightingSpec) -> np.ndarray:
    """Inverse of decode up to quantization: decode(encode(decode(g))) = decode(g)."""
    sel = SCHEME_ORDER.index(weighting.scheme) + 0.5
    return np.concatenate([np.asarray(penalties, dtype=float).ravel(), [sel]])


def sbx_crossover(
    p1: np.ndarray, p2: np.ndarray, cfg: MoeaConfig, rng: np.random.Generator,
    low: np.ndarray, high: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover; children clamped to gene bounds.

    With probability 1 - crossover_prob the pair passes through
    unchanged; otherwise each gene is crossed with probability 0.5 using
    a spread factor drawn with distribution index sbx_eta. Before
    clamping, child means equal parent means exactly.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError("parent genomes differ in length")
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() > cfg.crossover_prob:
        return c1, c2
    cross = rng.random(len(p1)) < 0.5
    u = rng.random(len(p1))
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (cfg.sbx_eta + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (cfg.sbx_eta + 1.0)),
    )
    a = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    b = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    c1[cross] = a[cross]
    c2[cross] = b[cross]
    return np.clip(c1, low, high), np.clip(c2, low, high)


def polynomial_mutation(
    genes: np.ndarray, cfg: MoeaConfig, rng: np.random.Generator,
    low: np.ndarray, high: np.ndarray,
) -> np.ndarray:
    """Bounded polynomial mutation with distribution index mutation_eta."""
    genes = np.asarray(genes, dtype=float)
    prob = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / len(genes)
    out = genes.copy()
    mutate = rng.random(len(genes)) < prob
    u = rng.random(len(genes))
    span = high - low
    d1 = (genes - low) / span
    d2 = (high - genes) / span
    exp = 1.0 / (cfg.mutation_eta + 1.0)
    delta = np.where(
        u < 0.5,
        (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (cfg.mutation_eta + 1.0)) ** exp - 1.0,
        1.0
        - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (cfg.mutation_eta + 1.0)) ** exp,
    )
    out[mutate] = genes[mutate] + delta[mutate] * span[mutate]
    return np.clip(out, low, high)


def fast_nondominated_sort(points: list[EvalPoint]) -> list[list[int]]:
    """NSGA-II front decomposition; front 0 is the non-dominated set."""
    n = len(points)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = np.zeros(n, dtype=int)
    for i in range(n):
        for j in range(n):
            if i != j and dominates(points[i], points[j]):
                dominated_by[i].append(j)
    for i in range(n):
        for j in dominated_by[i]:
            domination_count[j] += 1
    fronts = [[i for i in range(n) if domination_count[i] == 0]]
    while fronts[-1]:
        nxt = []
        for i in fronts[-1]:
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    nxt.append(j)
        fronts.append(sorted(nxt))
    fronts.pop()
    return fronts


def crowding_distance(points: list[EvalPoint]) -> np.ndarray:
    """Per-point crowding distance; boundary points get infinity."""
    n = len(points)
    if n == 0:
        raise ValueError("empty front")
    dist = np.zeros(n)
    for key in (lambda p: p.accuracy, lambda p: p.mflops_per_image):
        values = np.array([key(p) for p in points])
        order = np.argsort(values, kind="stable")
        dist[order[0]] = dist[order[-1]] = np.inf
        span = values[order[-1]] - values[order[0]]
        if span <= 0 or n <= 2:
            continue
        for r in range(1, n - 1):
            dist[order[r]] += (values[order[r + 1]] - values[order[r - 1]]) / span
    return dist


@dataclass
class Individual:
    genes: np.ndarray
    fitness: EvalPoint | None = None
    rank: int = -1
    crowding: float = 0.0


@dataclass
class ArchiveEntry:
    point: EvalPoint
    genes: np.ndarray
    penalties: np.ndarray
    scheme: WeightingScheme


@dataclass
class Nsga2Result:
    population: list[Individual]
    archive: list[ArchiveEntry]
    hypervolume_log: list[float]
    transcript: list[dict]
    hypervolume_reference: tuple[float, float]


@dataclass(frozen=True)
class _EvalContext:
    train_features: np.ndarray
    train_labels: np.ndarray
    counts: np.ndarray
    scenario: Scenario
    fitness_split: str
    cost: CostModel
    moea: MoeaConfig
    train_cfg: TrainConfig


def _derive_seed(master_seed: int, generation: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, generation, index]).generate_state(1)[0])


def _evaluate_one(args) -> EvalPoint:
    ctx, genes, generation, index = args
    k = ctx.scenario.num_models
    penalties, wspec = decode_genome(genes, k, ctx.moea.penalty_step, ctx.moea.ens_beta)
    cfg_loss = LossConfig.from_counts(penalties, ctx.counts, wspec)
    seed = _derive_seed(ctx.moea.seed, generation, index)
    head0 = init_head(ctx.scenario.feature_dim, k, seed)
    tag = f"g{generation}i{index}"
    try:
        head, _ = train_head(
            head0, ctx.train_features, ctx.train_labels, cfg_loss,
            replace(ctx.train_cfg, seed=seed),
        )
    except TrainingDiverged:
        return EvalPoint(accuracy=0.0, mflops_per_image=max(ctx.cost.model_mflops), tag=tag)
    return evaluate_system(head, ctx.scenario, ctx.fitness_split, ctx.cost, tag=tag)


def _evaluate_population(
    ctx: _EvalContext, genomes: list[np.ndarray], generation: int, workers: int
) -> list[EvalPoint]:
    tasks = [(ctx, g, generation, i) for i, g in enumerate(genomes)]
    if workers <= 1:
        return [_evaluate_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate_one, tasks, chunksize=1))


def _assign_rank_crowding(pop: list[Individual]) -> None:
    points = [ind.fitness for ind in pop]
    for rank, front in enumerate(fast_nondominated_sort(points)):
        front_points = [points[i] for i in front]
        dists = crowding_distance(front_points)
        for i, d in zip(front, dists):
            pop[i].rank = rank
            pop[i].crowding = float(d)


def _tournament(pop: list[Individual], rng: np.random.Generator) -> Individual:
    i, j = rng.integers(0, len(pop), size=2)
    a, b = pop[int(i)], pop[int(j)]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a


def _environmental_selection(pop: list[Individual], size: int) -> list[Individual]:
    points = [ind.fitness for ind in pop]
    survivors: list[Individual] = []
    for front in fast_nondominated_sort(points):
        if len(survivors) + len(front) <= size:
            survivors.extend(pop[i] for i in front)
        else:
            dists = crowding_distance([points[i] for i in front])
            # crowding descending, index ascending for determinism
            order = sorted(range(len(front)), key=lambda r: (-dists[r], front[r]))
            survivors.extend(pop[front[r]] for r in order[: size - len(survivors)])
            break
    return survivors


def _update_archive(
    archive: list[ArchiveEntry], pop: list[Individual], moea: MoeaConfig, k: int
) -> list[ArchiveEntry]:
    merged = archive + [
        ArchiveEntry(
            point=ind.fitness,
            genes=ind.genes.copy(),
            penalties=decode_genome(ind.genes, k, moea.penalty_step, moea.ens_beta)[0],
            scheme=decode_genome(ind.genes, k, moea.penalty_step, moea.ens_beta)[1].scheme,
        )
        for ind in pop
    ]
    points = [e.point for e in merged]
    keep = [
        not any(dominates(q, p) for q in points) for p in points
    ]
    return [e for e, k_ in zip(merged, keep) if k_]


def run_nsga2(
    scenario: Scenario,
    cfg: MoeaConfig,
    train_cfg: TrainConfig | None = None,
    fitness_split: str = "test",
    workers: int = 1,
) -> Nsga2Result:
    """Full generational NSGA-II loop over penalty/weighting genomes.

    Evaluation of an individual = decode genome, build the loss config
    from training-split oracle-label counts, train the head for
    train_cfg.epochs, score on the fitness split with full dispatcher
    overhead. Training divergence demotes the individual to worst-case
    fitness instead of aborting. Deterministic in cfg.seed.
    """
    train_cfg = train_cfg or TrainConfig()
    k = scenario.num_models
    low, high = gene_bounds(k)

    train_idx = scenario.split_indices("train")
    train_labels = oracle_relabel(scenario.correctness[train_idx])
    counts = np.bincount(train_labels, minlength=k)
    counts = np.maximum(counts, 1)  # a tier absent from training still needs a weight

    ctx = _EvalContext(
        train_features=scenario.features[train_idx],
        train_labels=train_labels,
        counts=counts,
        scenario=scenario,
        fitness_split=fitness_split,
        cost=cost_model_for(scenario, head_cost_mflops(scenario.feature_dim, k)),
        moea=cfg,
        train_cfg=train_cfg,
    )
    hv_ref = (
        0.0,
        ctx.cost.extractor_mflops + ctx.cost.head_mflops + max(ctx.cost.model_mflops),
    )

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xDECADE]))
    genomes = [rng.uniform(low, high) for _ in range(cfg.population)]
    pop = [Individual(genes=g) for g in genomes]
    for ind, fit in zip(pop, _evaluate_population(ctx, genomes, 0, workers)):
        ind.fitness = fit
    _assign_rank_crowding(pop)

    archive = _update_archive([], pop, cfg, k)
    hv_log = [hypervolume_2d([e.point for e in archive], hv_ref)]
    transcript = [_transcript_row(0, i, ind) for i, ind in enumerate(pop)]

    for generation in range(1, cfg.generations + 1):
        offspring_genomes: list[np.ndarray] = []
        while len(offspring_genomes) < cfg.population:
            pa, pb = _tournament(pop, rng), _tournament(pop, rng)
            c1, c2 = sbx_crossover(pa.genes, pb.genes, cfg, rng, low, high)
            offspring_genomes.append(polynomial_mutation(c1, cfg, rng, low, high))
            if len(offspring_genomes) < cfg.population:
                offspring_genomes.append(polynomial_mutation(c2, cfg, rng, low, high))
        offspring = [Individual(genes=g) for g in offspring_genomes]
        for ind, fit in zip(
            offspring, _evaluate_population(ctx, offspring_genomes, generation, workers)
        ):
            ind.fitness = fit
        combined = pop + offspring
        pop = _environmental_selection(combined, cfg.population)
        _assign_rank_crowding(pop)
        archive = _update_archive(archive, offspring, cfg, k)
        hv_log.append(hypervolume_2d([e.point for e in archive], hv_ref))
        transcript.extend(_transcript_row(generation, i, ind) for i, ind in enumerate(pop))

    return Nsga2Result(
        population=pop,
        archive=archive,
        hypervolume_log=hv_log,
        transcript=transcript,
        hypervolume_reference=hv_ref,
    )


def _transcript_row(generation: int, index: int, ind: Individual) -> dict:
    return {
        "generation": generation,
        "individual": index,
        "genome": ind.genes.tolist(),
        "accuracy": ind.fitness.accuracy,
        "mflops": ind.fitness.mflops_per_image,
        "rank": ind.rank,
        "crowding": ind.crowding,
    }
