"""Differential evolution and the inverse problem for the sequence generator.

The inverse problem: find an input distribution ``p`` whose simulated letter
frequencies match ``q``.  The objective is noisy, so by default every
evaluation uses the same generator seed (common random numbers), which makes
the objective a deterministic function of ``p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import optimize

from . import seqgen
from .analytic import LetterDensity, letter_density
from .errors import DomainError

STRATEGIES = {"rand/1/bin": "rand1bin", "best/1/bin": "best1bin"}
SEED_POLICIES = ("fixed", "per-generation")
IID_MODEL = 0  # elimination disabled


@dataclass
class DEConfig:
    population: int = 40
    weight: float = 0.6
    crossover: float = 0.9
    strategy: str = "rand/1/bin"
    generations: int = 200
    bounds: list[tuple[float, float]] | None = None
    eval_length: int = 10**6
    eval_seed_policy: str = "fixed"
    eval_seed: int = 12345
    workers: int = 1
    initial: np.ndarray | None = field(default=None, repr=False)

    def validate(self, dim: int | None = None) -> None:
        if self.population < 4:
            raise DomainError("population must be at least 4")
        if not 0 < self.weight < 2:
            raise DomainError("weight F must be in (0, 2)")
        if not 0 <= self.crossover <= 1:
            raise DomainError("crossover CR must be in [0, 1]")
        if self.strategy not in STRATEGIES:
            raise DomainError(f"strategy must be one of {sorted(STRATEGIES)}")
        if self.eval_seed_policy not in SEED_POLICIES:
            raise DomainError(f"eval_seed_policy must be one of {SEED_POLICIES}")
        if self.generations < 0:
            raise DomainError("generations must be >= 0")
        if self.bounds is not None:
            if dim is not None and len(self.bounds) != dim:
                raise DomainError(f"need {dim} bounds, got {len(self.bounds)}")
            if any(not lo < hi for lo, hi in self.bounds):
                raise DomainError("every bound needs lo < hi")


@dataclass
class DEResult:
    x: np.ndarray
    value: float
    history: list[float]
    evaluations: int


def _finite(f: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    # a non-finite objective value loses every comparison instead of poisoning the run
    def wrapped(x):
        try:
            v = float(f(x))
        except (ArithmeticError, ValueError):
            return math.inf
        return v if math.isfinite(v) else math.inf

    return wrapped


def de_minimize(
    objective: Callable[[np.ndarray], float],
    config: DEConfig,
    seed: int,
    on_generation: Callable[[int], None] | None = None,
) -> DEResult:
    """Classic DE (mutation, binomial crossover, greedy selection) on a box.

    Deterministic in ``(config, seed)``; ``history[g]`` is the best value
    after generation ``g`` (entry 0 is the initial population) and never
    increases.  ``on_generation(g)`` is called before generation ``g`` is
    evaluated.
    """
    if config.bounds is None:
        raise DomainError("DEConfig.bounds is required")
    dim = len(config.bounds)
    config.validate(dim)
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in config.bounds])
    hi = np.array([b[1] for b in config.bounds])
    init = rng.uniform(lo, hi, size=(config.population, dim))
    if config.initial is not None:
        seeded = np.atleast_2d(np.asarray(config.initial, dtype=float))[: config.population]
        init[: len(seeded)] = np.clip(seeded, lo, hi)

    g = _finite(objective)
    history: list[float] = []
    gen = [0]
    calls = [0]

    def f(x):
        # the first population-many calls score the initial population
        v = g(x)
        calls[0] += 1
        if calls[0] <= len(init):
            history[:] = [min(history[0], v)] if history else [v]
        return v

    def callback(intermediate_result):
        history.append(float(intermediate_result.fun))
        gen[0] += 1
        if on_generation is not None:
            on_generation(gen[0])

    if on_generation is not None:
        on_generation(0)
    if config.generations == 0:
        vals = np.array([f(x) for x in init])
        i = int(np.argmin(vals))
        return DEResult(init[i], float(vals[i]), [float(vals[i])], len(vals))

    # scipy's loop: maxiter generations after the initial population, no polishing
    res = optimize.differential_evolution(
        f,
        list(zip(lo, hi)),
        strategy=STRATEGIES[config.strategy],
        maxiter=config.generations,
        popsize=config.population,  # ignored when an init array is supplied
        init=init,
        mutation=config.weight,
        recombination=config.crossover,
        rng=np.random.default_rng(rng.integers(2**63)),
        # a negative atol means the population never counts as converged, so
        # every configured generation runs
        tol=0,
        atol=-1.0,
        polish=False,
        updating="deferred",
        workers=config.workers if config.workers > 1 else 1,
        callback=callback,
    )
    # keep the record monotone even if a per-generation reseed changed old energies
    history = [float(v) for v in np.minimum.accumulate(history)] if history else [float(res.fun)]
    return DEResult(np.asarray(res.x), float(res.fun), history, int(res.nfev))


# ---------------------------------------------------------------------------
# Inverse problem


def to_distribution(x) -> np.ndarray:
    """Clamp at zero and scale to sum 1."""
    p = np.clip(np.asarray(x, dtype=float), 0.0, None)
    s = p.sum()
    if s <= 0:
        raise DomainError("all weights are zero")
    return p / s


def simulate_marginals(model: int, p, length: int, seed: int) -> np.ndarray:
    if model == IID_MODEL:
        seq = seqgen.generate_iid(p, length, seed)
    else:
        seq = seqgen.generate(model, p, length, seed)
    return seqgen.empirical_marginals(seq)


def fit_objective(model: int, q: LetterDensity, length: int, seed: int | Callable[[], int]):
    """``p -> rms(simulated marginals - q)``; ``seed`` may be a callable for reseeding."""
    target = q.as_vector()

    def objective(x):
        s = seed() if callable(seed) else seed
        return seqgen.rms(simulate_marginals(model, to_distribution(x), length, s), target)

    return objective


def inverse_fit(
    model: int,
    q: LetterDensity | None,
    config: DEConfig,
    seed: int,
    log_scale: bool = True,
) -> tuple[np.ndarray, DEResult]:
    """Best normalized input distribution for ``model`` (0 = elimination disabled).

    ``config.bounds`` are in probability units (default ``[1e-10, 1]`` per
    letter).  With ``log_scale`` DE works on ``log10 p`` instead, which suits
    weights spread over many orders of magnitude.  Initial vectors in
    ``config.initial`` are given in probability units as well.
    """
    if model not in (IID_MODEL, *seqgen.MODELS):
        raise DomainError(f"model must be 0, 1 or 2, got {model!r}")
    q = q or letter_density()
    bounds = config.bounds or [(1e-10, 1.0)] * seqgen.N_LETTERS
    if len(bounds) != seqgen.N_LETTERS:
        raise DomainError(f"need {seqgen.N_LETTERS} bounds")
    if log_scale and any(lo <= 0 for lo, _ in bounds):
        raise DomainError("log-scale search needs positive lower bounds")
    if log_scale:
        decode = lambda x: 10.0 ** np.asarray(x)
        encode = lambda p: np.log10(np.clip(np.asarray(p, dtype=float), 1e-300, None))
    else:
        decode = encode = lambda x: np.asarray(x, dtype=float)
    search = replace(
        config,
        bounds=[tuple(encode([lo, hi])) for lo, hi in bounds],
        initial=None if config.initial is None else encode(config.initial),
    )
    current = [config.eval_seed]

    def reseed(g: int) -> None:
        if config.eval_seed_policy == "per-generation":
            current[0] = config.eval_seed + g

    inner = fit_objective(model, q, config.eval_length, lambda: current[0])
    result = de_minimize(lambda x: inner(decode(x)), search, seed, on_generation=reseed)
    result.x = decode(result.x)
    return to_distribution(result.x), result
