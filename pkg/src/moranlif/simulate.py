"""Spatial lag (SAR) field generation and the Monte Carlo LIF experiment."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import SingularSystem
from .influence import LifScores, influence_curve, lif_map
from .moran import standardize

__all__ = ["SarConfig", "SarRealization", "ExperimentSummary", "sar_generate", "mc_experiment"]

log = logging.getLogger(__name__)

DENSE_LIMIT = 2500
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class SarConfig:
    """Parameters of ``Z = (I - rho W)^-1 eps`` with ``eps ~ N(0, 1)``."""

    rho: float
    weights: object
    seed: int = 0
    replications: int = 1000
    noise: str = "normal"

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ValueError(f"|rho| must be < 1, got {self.rho}")
        if not self.weights.row_standardized:
            raise ValueError("SAR weights must be row-standardized")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.noise != "normal":
            raise ValueError(f"unsupported noise {self.noise!r}")

    def __getstate__(self):
        # the factorization holds a closure; workers rebuild it
        state = dict(self.__dict__)
        state.pop("_solver", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)

    @cached_property
    def _solver(self):
        n = self.weights.n
        a = sparse.identity(n, format="csc") - self.rho * self.weights.sparse.tocsc()
        try:
            if n <= DENSE_LIMIT:
                lu = scipy.linalg.lu_factor(a.toarray(), check_finite=True)
                solve = lambda b: scipy.linalg.lu_solve(lu, b)  # noqa: E731
            else:
                solve = splu(a).solve
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            raise SingularSystem(f"I - rho W could not be factorized: {exc}") from exc
        return a.tocsr(), solve


@dataclass(frozen=True, eq=False)
class SarRealization:
    field: np.ndarray
    seed_used: int
    replicate_index: int
    residual: float = 0.0
    noise: np.ndarray = field(default=None, repr=False)


def replicate_rng(seed, replicate):
    """Generator for replicate ``replicate`` of experiment ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _MASK64, int(replicate)]))


def sar_generate(config, replicate=0):
    """Draw one SAR field for ``(config.seed, replicate)``.

    The field is returned as solved, not standardized.
    """
    rng = replicate_rng(config.seed, replicate)
    eps = rng.standard_normal(config.weights.n)
    if config.rho == 0:
        z = eps.copy()
        residual = 0.0
    else:
        a, solve = config._solver
        with np.errstate(all="ignore"):
            z = solve(eps)
        if not np.all(np.isfinite(z)):
            raise SingularSystem("solve produced non-finite values")
        residual = float(np.linalg.norm(a @ z - eps))
        if residual > 1e-8 * max(1.0, float(np.linalg.norm(eps))):
            raise SingularSystem(f"residual {residual:.3g} too large")
    return SarRealization(z, int(config.seed), int(replicate), residual, eps)


@dataclass(frozen=True, eq=False)
class ExperimentSummary:
    """Aggregate of an LIF Monte Carlo run.

    ``curves`` holds four :class:`InfluenceCurve` objects computed on the
    final replication: ``mean_max``/``mean_min`` for the cells with the
    largest/smallest mean LIF over all replications, and
    ``final_max``/``final_min`` for the extremes of the final replication.
    """

    config: SarConfig
    mean_lif: np.ndarray
    sd_lif: np.ndarray
    mc_values: np.ndarray
    argmax_mean: int
    argmin_mean: int
    final_field: np.ndarray
    final_scores: LifScores
    curves: dict
    max_residual: float


def _run_chunk(config, replicates, half_width, form, exact):
    mcs, lifs, residual = [], [], 0.0
    for r in replicates:
        real = sar_generate(config, r)
        residual = max(residual, real.residual)
        z = standardize(real.field)
        scores = lif_map(z, config.weights, half_width, form, exact)
        mcs.append(scores.mc)
        lifs.append(scores.lif)
    return np.array(mcs), np.array(lifs), residual


def _chunks(total, parts):
    bounds = np.linspace(0, total, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def mc_experiment(config, half_width_sigmas=2.0, form="difference", exact=False, workers=1,
                  curve_points=201):
    """Generate, standardize and LIF-map every replication, then aggregate.

    Results are gathered in replicate order, so the output is the same for
    any ``workers`` count.
    """
    reps = config.replications
    workers = max(1, min(int(workers), reps))
    if workers == 1:
        parts = [_run_chunk(config, range(reps), half_width_sigmas, form, exact)]
    else:
        chunks = _chunks(reps, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chunk, config, c, half_width_sigmas, form, exact) for c in chunks
            ]
            parts = [f.result() for f in futures]
    mc_values = np.concatenate([p[0] for p in parts])
    lifs = np.concatenate([p[1] for p in parts], axis=0)
    max_residual = max(p[2] for p in parts)
    mean = lifs.mean(axis=0)
    sd = lifs.std(axis=0, ddof=1) if reps > 1 else np.zeros_like(mean)
    order = np.argsort(-mean, kind="stable")
    argmax_mean, argmin_mean = int(order[0]), int(order[-1])

    final = sar_generate(config, reps - 1)
    z = standardize(final.field)
    scores = lif_map(z, config.weights, half_width_sigmas, form, exact)
    curves = {}
    for key, loc in (
        ("mean_max", argmax_mean),
        ("mean_min", argmin_mean),
        ("final_max", scores.argmax_location),
        ("final_min", scores.argmin_location),
    ):
        curves[key] = influence_curve(
            z, config.weights, loc, curve_points, half_width_sigmas, form, exact
        )
    log.info(
        "mc_experiment: %d replications, mean MC %.4f, max-LIF cell %d, min-LIF cell %d",
        reps, mc_values.mean(), argmax_mean + 1, argmin_mean + 1,
    )
    return ExperimentSummary(
        config=config,
        mean_lif=mean,
        sd_lif=sd,
        mc_values=mc_values,
        argmax_mean=argmax_mean,
        argmin_mean=argmin_mean,
        final_field=final.field,
        final_scores=scores,
        curves=curves,
        max_residual=max_residual,
    )
