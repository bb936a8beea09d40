"""(mu+lambda) NSGA-II over fixed-layout genomes.

Variation is single-point crossover plus Gaussian weight mutation with a
structural add/remove-one-connection move.  Survivor selection is elitist:
parents and offspring compete together, filled by non-domination rank and
split by crowding distance.  All objectives follow the maximization
convention.
"""

from dataclasses import dataclass, field

import numpy as np

from .genome import Genome, connection_count


@dataclass
class Individual:
    """Genome plus its objective vector and NSGA-II bookkeeping."""

    genome: Genome
    objectives: np.ndarray
    rank: int = 0
    crowding: float = 0.0
    # cached fitness components, maintained by the run harness
    task_fitness: float = 0.0
    penalty: float = 0.0

    @property
    def revised_fitness(self) -> float:
        return self.task_fitness - self.penalty


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 100
    crossover_prob: float = 0.6
    mutation_prob: float = 0.4
    per_gene_prob: float = 0.1
    structural_prob: float = 0.1
    gaussian_sigma: float = 1.0
    init_fraction: float = 0.1
    master_seed: int = 0

    def __post_init__(self):
        for name in ("crossover_prob", "mutation_prob", "per_gene_prob", "structural_prob", "init_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.population_size < 1:
            raise ValueError("population_size must be positive")


# --------------------------------------------------------------------------
# variation
# --------------------------------------------------------------------------


def crossover_at(a: Genome, b: Genome, point: int) -> tuple[Genome, Genome]:
    """Swap weights and mask beyond a fixed cut point; exposed for testing."""
    n = a.weights.shape[0]
    if b.weights.shape[0] != n:
        raise ValueError("genome length mismatch in crossover")
    if not 1 <= point <= n - 1:
        raise ValueError(f"cut point {point} outside [1, {n - 1}]")
    w1 = np.concatenate([a.weights[:point], b.weights[point:]])
    m1 = np.concatenate([a.mask[:point], b.mask[point:]])
    w2 = np.concatenate([b.weights[:point], a.weights[point:]])
    m2 = np.concatenate([b.mask[:point], a.mask[point:]])
    return Genome(w1, m1, a.topology), Genome(w2, m2, a.topology)


def single_point_crossover(a: Genome, b: Genome, rng: np.random.Generator) -> tuple[Genome, Genome]:
    """Cut at a uniform point in [1, L-1]; both children stay valid genomes."""
    point = int(rng.integers(1, a.weights.shape[0]))
    return crossover_at(a, b, point)


def gaussian_mutate(genome: Genome, rng: np.random.Generator, config: EvolutionConfig) -> Genome:
    """Perturb active weights gene-wise and occasionally toggle one connection.

    Each mask-active gene is hit with probability per_gene_prob by adding a
    N(0, sigma) draw.  Independently, with probability structural_prob one
    uniformly chosen position is toggled: an active connection is removed
    (its weight stays stored but decodes to zero), an inactive one is added
    with a fresh N(0, sigma) weight.
    """
    weights = genome.weights.copy()
    mask = genome.mask.copy()
    n = weights.shape[0]
    hits = (rng.random(n) < config.per_gene_prob) & mask
    k = int(hits.sum())
    if k:
        weights[hits] += rng.standard_normal(k) * config.gaussian_sigma
    if rng.random() < config.structural_prob:
        pos = int(rng.integers(n))
        if mask[pos]:
            mask[pos] = False
        else:
            mask[pos] = True
            weights[pos] = rng.standard_normal() * config.gaussian_sigma
    return Genome(weights, mask, genome.topology)


# --------------------------------------------------------------------------
# non-dominated sorting and crowding
# --------------------------------------------------------------------------


def dominates(a, b) -> bool:
    """True iff a is at least as good everywhere and strictly better somewhere."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"objective arity mismatch: {a.shape} vs {b.shape}")
    return bool((a >= b).all() and (a > b).any())


def fast_non_dominated_sort(objectives) -> tuple[list, np.ndarray]:
    """Partition objective vectors into non-dominated fronts.

    Returns (fronts, ranks) where fronts is a list of index lists in rank
    order and ranks[i] is the front number of vector i.
    """
    objs = np.asarray(objectives, dtype=np.float64)
    if objs.ndim != 2:
        objs = objs.reshape(len(objs), -1)
    n = objs.shape[0]
    # dom[i, j] == True iff i dominates j
    dom = (objs[:, None, :] >= objs[None, :, :]).all(-1) & (objs[:, None, :] > objs[None, :, :]).any(-1)
    n_dominators = dom.sum(axis=0)
    ranks = np.full(n, -1, dtype=np.int64)
    fronts = []
    current = np.flatnonzero(n_dominators == 0)
    level = 0
    while current.size:
        fronts.append([int(i) for i in current])
        ranks[current] = level
        n_dominators = n_dominators - dom[current].sum(axis=0)
        n_dominators[current] = -1
        level += 1
        current = np.flatnonzero(n_dominators == 0)
    return fronts, ranks


def crowding_distance(front_objectives) -> np.ndarray:
    """NSGA-II crowding distances for the members of one front.

    Boundary members per objective get +inf; interior members accumulate
    normalized neighbour gaps.  Objectives with zero range contribute
    nothing, so duplicated vectors stay finite instead of dividing by zero.
    """
    objs = np.asarray(front_objectives, dtype=np.float64)
    if objs.ndim != 2:
        objs = objs.reshape(len(objs), -1)
    n = objs.shape[0]
    if n == 0:
        raise ValueError("empty front")
    if n <= 2:
        return np.full(n, np.inf)
    d = np.zeros(n)
    for j in range(objs.shape[1]):
        v = objs[:, j]
        order = np.argsort(v, kind="stable")
        d[order[0]] = d[order[-1]] = np.inf
        span = v[order[-1]] - v[order[0]]
        if span == 0.0:
            continue
        for t in range(1, n - 1):
            d[order[t]] += (v[order[t + 1]] - v[order[t - 1]]) / span
    return d


def nsga2_select(candidates: list, mu: int) -> list:
    """Pick mu survivors by (rank, crowding); deterministic via index tiebreak.

    Sets rank and crowding on every candidate it touches and returns the
    selected individuals in rank order.
    """
    if len(candidates) < mu:
        raise ValueError(f"cannot select {mu} from {len(candidates)} candidates")
    objs = np.stack([ind.objectives for ind in candidates])
    fronts, ranks = fast_non_dominated_sort(objs)
    for ind, rank in zip(candidates, ranks):
        ind.rank = int(rank)
    selected = []
    for front in fronts:
        dists = crowding_distance(objs[front])
        for idx, dist in zip(front, dists):
            candidates[idx].crowding = float(dist)
        if len(selected) + len(front) <= mu:
            selected.extend(front)
        else:
            room = mu - len(selected)
            order = sorted(range(len(front)), key=lambda t: (-dists[t], front[t]))
            selected.extend(front[t] for t in order[:room])
        if len(selected) >= mu:
            break
    return [candidates[i] for i in selected]


def binary_tournament(pop: list, rng: np.random.Generator) -> Individual:
    """Two uniform draws; lower rank wins, then higher crowding, then first."""
    a = pop[int(rng.integers(len(pop)))]
    b = pop[int(rng.integers(len(pop)))]
    if (b.rank, -b.crowding) < (a.rank, -a.crowding):
        return b
    return a


def evolve_generation(pop: list, objective_fn, config: EvolutionConfig, rng: np.random.Generator) -> list:
    """One (mu+lambda) generation: variation, evaluation, elitist selection.

    objective_fn maps a Genome to a fully scored Individual; parents in pop
    must already carry objective vectors of the same arity.  Produces
    len(pop) offspring and selects len(pop) survivors from the union.
    """
    offspring = []
    for _ in range(len(pop)):
        parent = binary_tournament(pop, rng)
        genome = parent.genome
        if rng.random() < config.crossover_prob:
            other = binary_tournament(pop, rng)
            genome = single_point_crossover(genome, other.genome, rng)[0]
        if rng.random() < config.mutation_prob:
            genome = gaussian_mutate(genome, rng, config)
        offspring.append(objective_fn(genome))
    return nsga2_select(pop + offspring, len(pop))
