"""The five reinforcement-learning tasks and the seeded evaluation protocol.

Each task ships with pinned reference dynamics (see kernels.py) so runs are
reproducible without any external environment library.  A fitness evaluation
rolls the policy out from five seeded starting positions, averages the raw
returns and maps them onto [0, 1] with per-task bounds obtained from
single-task calibration runs.  Default bounds live in data/default_bounds.cfg
and can be regenerated with ``evowp calibrate``.
"""

import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from . import kernels
from .config import parse_config_text
from .genome import Genome, Topology, decode
from .network import RnnParameters

TASK_IDS = ("cart_pole", "pendulum", "acrobot", "mountain_car", "agent_orientation")

EVAL_SEED_OFFSETS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class Discrete:
    n: int


@dataclass(frozen=True)
class Box:
    bounds: tuple  # ((low, high), ...) per signal


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    obs_size: int
    action_kind: Discrete | Box
    episode_cap: int
    raw_min: float
    raw_max: float
    eval_seeds: tuple

    def __post_init__(self):
        if self.raw_min >= self.raw_max:
            raise ValueError(f"{self.task_id}: raw_min must be below raw_max")


@dataclass
class EpisodeResult:
    raw_return: float
    steps: int
    terminated_early: bool


# observation sizes, action spaces and episode caps follow the task envelope;
# raw bounds come from the packaged calibration defaults below
_TASK_SHAPE = {
    "cart_pole": (4, Discrete(2), 200),
    "pendulum": (3, Box(((-kernels.PEND_MAX_TORQUE, kernels.PEND_MAX_TORQUE),)), 200),
    "acrobot": (6, Discrete(3), 500),
    "mountain_car": (2, Discrete(3), 200),
    "agent_orientation": (5, Discrete(3), 400),
}


def _load_default_bounds() -> dict:
    text = resources.files("evowp").joinpath("data/default_bounds.cfg").read_text()
    return parse_config_text(text)


_DEFAULT_BOUNDS = _load_default_bounds()


def make_task(task_id: str, master_seed: int = 0, overrides: dict | None = None) -> TaskSpec:
    """Build a TaskSpec with evaluation seeds derived from the master seed.

    ``overrides`` accepts raw_min, raw_max, episode_cap and seeds keys, as
    parsed from a run configuration's ``task.<name>.*`` entries.
    """
    if task_id not in _TASK_SHAPE:
        raise ValueError(f"unknown task id {task_id!r}; expected one of {TASK_IDS}")
    obs_size, action_kind, cap = _TASK_SHAPE[task_id]
    overrides = overrides or {}
    raw_min = float(overrides.get("raw_min", _DEFAULT_BOUNDS[f"task.{task_id}.raw_min"]))
    raw_max = float(overrides.get("raw_max", _DEFAULT_BOUNDS[f"task.{task_id}.raw_max"]))
    cap = int(overrides.get("episode_cap", cap))
    if "seeds" in overrides:
        seeds = overrides["seeds"]
        if isinstance(seeds, str):
            seeds = tuple(int(tok) for tok in seeds.split(","))
        else:
            seeds = tuple(int(s) for s in seeds)
    else:
        seeds = tuple(master_seed + k for k in EVAL_SEED_OFFSETS)
    return TaskSpec(task_id, obs_size, action_kind, cap, raw_min, raw_max, seeds)


# --------------------------------------------------------------------------
# seeded initial conditions (drawn outside the kernels so compiled and
# fallback rollouts see identical trajectories)
# --------------------------------------------------------------------------


def _initial_conditions(task_id: str, seed: int):
    rng = np.random.default_rng(seed)
    if task_id == "cart_pole":
        return rng.uniform(-0.05, 0.05, 4), None, None
    if task_id == "pendulum":
        return np.array([rng.uniform(-math.pi, math.pi), rng.uniform(-1.0, 1.0)]), None, None
    if task_id == "acrobot":
        return rng.uniform(-0.1, 0.1, 4), None, None
    if task_id == "mountain_car":
        return np.array([rng.uniform(-0.6, -0.4), 0.0]), None, None
    if task_id == "agent_orientation":
        spawn_x = rng.uniform(
            kernels.CIRCLE_RADIUS,
            kernels.ARENA_WIDTH - kernels.CIRCLE_RADIUS,
            kernels.CIRCLES_PER_EPISODE,
        )
        spawn_dir = rng.choice(np.array([-1.0, 1.0]), kernels.CIRCLES_PER_EPISODE)
        state = np.array([kernels.ARENA_WIDTH * 0.5, spawn_x[0], kernels.ARENA_HEIGHT, spawn_dir[0]])
        return state, spawn_x, spawn_dir
    raise ValueError(f"unknown task id {task_id!r}")


# --------------------------------------------------------------------------
# stepwise environment interface
# --------------------------------------------------------------------------


@dataclass
class EnvState:
    """Single-owner mutable episode state for the stepwise interface."""

    task: TaskSpec
    s: np.ndarray
    t: int = 0
    done: bool = False
    # agent_orientation bookkeeping
    spawn_x: np.ndarray | None = None
    spawn_dir: np.ndarray | None = None
    circle_index: int = 0


def env_reset(task: TaskSpec, seed: int) -> tuple[EnvState, np.ndarray]:
    """Deterministic seeded reset; returns the env state and first observation."""
    s, spawn_x, spawn_dir = _initial_conditions(task.task_id, seed)
    env = EnvState(task, s, spawn_x=spawn_x, spawn_dir=spawn_dir)
    return env, _observe(env)


def _observe(env: EnvState) -> np.ndarray:
    tid = env.task.task_id
    s = env.s
    if tid == "cart_pole":
        return s.copy()
    if tid == "pendulum":
        return np.array([math.cos(s[0]), math.sin(s[0]), s[1]])
    if tid == "acrobot":
        return np.array([math.cos(s[0]), math.sin(s[0]), math.cos(s[1]), math.sin(s[1]), s[2], s[3]])
    if tid == "mountain_car":
        return s.copy()
    return kernels.orientation_sensors(s[0], s[1], s[2])


def _check_action(task: TaskSpec, action):
    kind = task.action_kind
    if isinstance(kind, Discrete):
        a = int(action)
        if a != action or not 0 <= a < kind.n:
            raise ValueError(f"{task.task_id}: discrete action {action!r} not in [0, {kind.n})")
        return a
    u = np.atleast_1d(np.asarray(action, dtype=np.float64))
    if u.shape[0] != len(kind.bounds):
        raise ValueError(f"{task.task_id}: expected {len(kind.bounds)} control signals")
    for v, (low, high) in zip(u, kind.bounds):
        if not low <= v <= high:
            raise ValueError(f"{task.task_id}: control {v} outside [{low}, {high}]")
    return u


def env_step(env: EnvState, action) -> tuple[np.ndarray, float, bool]:
    """Advance one timestep under the pinned dynamics; returns (obs, reward, done)."""
    if env.done:
        raise ValueError("episode already finished; reset before stepping")
    action = _check_action(env.task, action)
    tid = env.task.task_id
    s = env.s
    if tid == "cart_pole":
        x, xd, th, thd, done = kernels.cart_pole_step(s[0], s[1], s[2], s[3], action)
        env.s = np.array([x, xd, th, thd])
        reward = 1.0
    elif tid == "pendulum":
        th, thd, cost = kernels.pendulum_step(s[0], s[1], float(action[0]))
        env.s = np.array([th, thd])
        reward, done = -cost, False
    elif tid == "acrobot":
        th1, th2, v1, v2, done = kernels.acrobot_step(s[0], s[1], s[2], s[3], action)
        env.s = np.array([th1, th2, v1, v2])
        reward = 0.0 if done else -1.0
    elif tid == "mountain_car":
        pos, vel, done = kernels.mountain_car_step(s[0], s[1], action)
        env.s = np.array([pos, vel])
        reward = -1.0
    else:
        agent_x, cx, cy, cdir, landed = kernels.orientation_move(s[0], s[1], s[2], s[3], action)
        reward, done = 0.0, False
        if landed:
            reward = max(0.0, 1.0 - abs(agent_x - cx) / kernels.ARENA_WIDTH)
            env.circle_index += 1
            if env.circle_index >= len(env.spawn_x):
                done = True
            else:
                cx = env.spawn_x[env.circle_index]
                cy = kernels.ARENA_HEIGHT
                cdir = env.spawn_dir[env.circle_index]
        env.s = np.array([agent_x, cx, cy, cdir])
    env.t += 1
    if env.t >= env.task.episode_cap:
        done = True
    env.done = bool(done)
    return _observe(env), float(reward), env.done


# --------------------------------------------------------------------------
# policy evaluation
# --------------------------------------------------------------------------


def run_episode(params: RnnParameters, task: TaskSpec, seed: int) -> EpisodeResult:
    """Roll the policy out once from a seeded start using the fused kernels."""
    w = (params.w_in, params.w_hh, params.b_h, params.w_out, params.w_oo, params.b_o)
    s, spawn_x, spawn_dir = _initial_conditions(task.task_id, seed)
    tid = task.task_id
    cap = task.episode_cap
    if tid == "cart_pole":
        raw, steps, early = kernels.rollout_cart_pole(*w, s[0], s[1], s[2], s[3], cap)
    elif tid == "pendulum":
        raw, steps, early = kernels.rollout_pendulum(*w, s[0], s[1], cap)
    elif tid == "acrobot":
        raw, steps, early = kernels.rollout_acrobot(*w, s[0], s[1], s[2], s[3], cap)
    elif tid == "mountain_car":
        raw, steps, early = kernels.rollout_mountain_car(*w, s[0], s[1], cap)
    else:
        raw, steps, early = kernels.rollout_orientation(*w, spawn_x, spawn_dir, cap)
    return EpisodeResult(float(raw), int(steps), bool(early))


def normalize(raw: float, task: TaskSpec) -> float:
    """Clamp-linear map of a raw return onto [0, 1] using the task bounds."""
    v = (raw - task.raw_min) / (task.raw_max - task.raw_min)
    return min(max(v, 0.0), 1.0)


def evaluate_raw(genome: Genome, task: TaskSpec, topology: Topology | None = None) -> float:
    """Mean raw return over the task's five evaluation seeds."""
    params = decode(genome, topology)
    total = 0.0
    for seed in task.eval_seeds:
        ep = run_episode(params, task, seed)
        total += ep.raw_return if math.isfinite(ep.raw_return) else task.raw_min
    return total / len(task.eval_seeds)


def evaluate(genome: Genome, task: TaskSpec, topology: Topology | None = None) -> float:
    """Normalized fitness in [0, 1]: seeded episodes, averaged, then scaled."""
    return normalize(evaluate_raw(genome, task, topology), task)


# --------------------------------------------------------------------------
# bound calibration
# --------------------------------------------------------------------------


def calibrate_bounds(
    task_id: str,
    budget: int = 3,
    generations: int = 30,
    master_seed: int = 0,
    population_size: int = 100,
) -> tuple[float, float]:
    """Raw-return bounds from single-task evolutionary runs.

    raw_min is the worst mean return seen in any post-selection population,
    raw_max the best.  Deterministic for a fixed master seed.
    """
    from .evolution import EvolutionConfig, Individual, evolve_generation
    from .genome import random_genome

    if budget < 1:
        raise ValueError("budget must be at least one run")
    topology = Topology()
    lo, hi = math.inf, -math.inf
    for run in range(budget):
        seed = master_seed + run
        task = make_task(task_id, master_seed=seed)
        cfg = EvolutionConfig(population_size=population_size, master_seed=seed)
        rng = np.random.default_rng(seed)

        def as_individual(genome):
            raw = evaluate_raw(genome, task, topology)
            return Individual(genome, np.array([raw]), task_fitness=raw)

        pop = [
            as_individual(random_genome(topology, cfg.init_fraction, rng))
            for _ in range(population_size)
        ]
        for _ in range(generations + 1):
            for ind in pop:
                lo = min(lo, ind.task_fitness)
                hi = max(hi, ind.task_fitness)
            pop = evolve_generation(pop, as_individual, cfg, rng)
    return lo, hi
