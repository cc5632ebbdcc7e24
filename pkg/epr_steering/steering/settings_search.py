"""
Steering radius search

R = max over measurement axes of the assemblage radius r. The outer problem is
maximized by a compass pattern search on the spherical angles (polar, azimuth)
of every axis, restarted from the canonical axes and from uniformly random
axes. Restarts are independent and may run in parallel; the merge is a
deterministic max with ties going to the lowest restart index.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from epr_steering.api.steering_errors import ParamError, SolverStall
from epr_steering.api.tasks import run_pool
from epr_steering.steering.assemblage import MeasurementSetting, build_assemblage
from epr_steering.steering.criteria import DIRECTIONS, canonical_settings, classify_by_radii
from epr_steering.steering.lhsm import DEFAULT_TOL, RadiusResult, SolverOptions, min_max_radius

logger = logging.getLogger(__name__)

MAX_SEARCH_SETTINGS = 3
# Two axes within one degree of parallel or antiparallel collide
COLLISION_COS = math.cos(math.radians(1.0))


@dataclass
class SearchConfig:
    restarts: int = 32
    max_iters: int = 400
    tol: float = 1e-4
    seed: int = 0
    include_canonical: bool = True
    threads: int = 1
    final_tol: float = DEFAULT_TOL
    initial_step: float = 0.3
    min_step: float = 1e-2
    solver: SolverOptions = field(default_factory=SolverOptions)

    def validate(self):
        if self.restarts < 1:
            raise ParamError(f"restarts must be >= 1, got {self.restarts}", field="restarts")
        if self.max_iters < 1:
            raise ParamError(f"max_iters must be >= 1, got {self.max_iters}", field="max_iters")
        if not 0 < self.min_step < self.initial_step:
            raise ParamError("need 0 < min_step < initial_step", field="min_step")
        self.solver.validate()
        return self

    @classmethod
    def from_settings(cls, settings, **overrides):
        values = dict(
            restarts=settings.restarts,
            max_iters=settings.search_max_iters,
            tol=settings.search_tol,
            seed=settings.seed,
            threads=settings.threads,
            final_tol=settings.tol,
            solver=SolverOptions(feas_tol=settings.feas_tol, max_iter=settings.max_iter),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values).validate()


@dataclass
class RestartTrace:
    index: int
    origin: str
    start: List[List[float]]
    settings: List[List[float]]
    r: float
    evaluations: int

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class SteeringRadiusReport:
    R: float
    best_settings: List[MeasurementSetting]
    direction: str
    k: int
    traces: List[RestartTrace]
    canonical_r: Optional[float] = None
    radius: Optional[RadiusResult] = None
    elapsed_s: float = 0.0

    @property
    def steerable(self):
        return self.R > 1

    def to_dict(self):
        data = {
            "R": self.R,
            "direction": self.direction,
            "k": self.k,
            "steerable": self.steerable,
            "best_settings": [s.to_list() for s in self.best_settings],
            "canonical_r": self.canonical_r,
            "restarts": [t.to_dict() for t in self.traces],
        }
        if self.radius is not None:
            data["solver"] = self.radius.to_dict()
        return data


def measuring_side(direction):
    """ab: Alice measures and steers Bob; ba: Bob measures and steers Alice"""
    if direction not in DIRECTIONS:
        raise ParamError(f"direction must be one of {DIRECTIONS}, got {direction!r}", field="direction")
    return "A" if direction == "ab" else "B"


def settings_radius(rho, settings, direction, tol=DEFAULT_TOL, options=None) -> RadiusResult:
    """Assemblage radius r for one tuple of axes"""
    asm = build_assemblage(rho, settings, measuring_side(direction))
    try:
        return min_max_radius(asm, tol, options)
    except SolverStall as e:
        e.context["settings"] = [s.to_list() for s in settings]
        e.context["direction"] = direction
        raise


def _to_angles(settings):
    return np.array([a for s in settings for a in s.angles()])


def _to_settings(angles):
    return [MeasurementSetting.from_angles(angles[2 * i], angles[2 * i + 1])
            for i in range(len(angles) // 2)]


def _collides(settings):
    vectors = np.array([s.vector for s in settings])
    overlaps = np.abs(vectors @ vectors.T)
    np.fill_diagonal(overlaps, 0)
    return bool(np.any(overlaps >= COLLISION_COS))


def _pattern_search(objective, x0, cfg):
    """
    Compass search (maximization): poll +-step along every coordinate, move on
    improvement by more than cfg.tol, halve the step after a sweep without one.
    """
    x = np.array(x0, dtype=float)
    f = objective(x)
    evaluations = 1
    step = cfg.initial_step
    while step >= cfg.min_step and evaluations < cfg.max_iters:
        changed = False
        for i in range(x.size):
            for sign in (-1.0, 1.0):
                if evaluations >= cfg.max_iters:
                    break
                trial = x.copy()
                trial[i] += sign * step
                ft = objective(trial)
                evaluations += 1
                if ft > f + cfg.tol:
                    x, f, changed = trial, ft, True
                    break
        if not changed:
            step /= 2
    return x, f, evaluations


def _objective(rho, direction, cfg):
    def radius(angles):
        settings = _to_settings(angles)
        if _collides(settings):
            return -math.inf
        try:
            return settings_radius(rho, settings, direction, cfg.tol, cfg.solver).r
        except SolverStall as e:
            logger.warning("skipping axes %s: %s", e.context.get("settings"), e)
            return -math.inf

    return radius


def local_refine(rho, settings, direction, cfg=None) -> Tuple[List[MeasurementSetting], float]:
    """
    Pattern search on the spherical angles of the given axes.

    Returns:
        (settings, r) with r evaluated at cfg.final_tol; r is never below the
        starting value by more than the solver tolerance
    """
    cfg = (cfg or SearchConfig()).validate()
    settings = list(settings)
    start_r = settings_radius(rho, settings, direction, cfg.final_tol, cfg.solver).r
    x, _, _ = _pattern_search(_objective(rho, direction, cfg), _to_angles(settings), cfg)
    refined = _to_settings(x)
    r = settings_radius(rho, refined, direction, cfg.final_tol, cfg.solver).r
    if r < start_r:
        return settings, start_r
    return refined, r


def _random_settings(k, rng):
    while True:
        draws = rng.standard_normal((k, 3))
        norms = np.linalg.norm(draws, axis=1)
        if np.any(norms < 1e-12):
            continue
        settings = [MeasurementSetting.along(d) for d in draws]
        if not _collides(settings):
            return settings


def restart_rng(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def _run_restart(job):
    rho, k, direction, cfg, index = job
    if index == 0 and cfg.include_canonical:
        origin, start = "canonical", canonical_settings(k) if k > 1 else [MeasurementSetting((0.0, 0.0, 1.0))]
    else:
        origin, start = "random", _random_settings(k, restart_rng(cfg.seed, index))
    x, r, evaluations = _pattern_search(_objective(rho, direction, cfg), _to_angles(start), cfg)
    return RestartTrace(index, origin, [s.to_list() for s in start],
                        [s.to_list() for s in _to_settings(x)], float(r), evaluations)


def steering_radius(rho, k, direction, cfg=None) -> SteeringRadiusReport:
    """
    Steering radius R in one direction.

    Args:
        rho: TwoQubitState
        k: number of measurement settings (1 to 3)
        direction: "ab" or "ba"
        cfg: SearchConfig

    Returns:
        SteeringRadiusReport; R is re-evaluated at cfg.final_tol on the best
        axes and is never below the canonical-axes radius

    Raises:
        SolverStall: with the offending settings in its context
    """
    cfg = (cfg or SearchConfig()).validate()
    if not 1 <= k <= MAX_SEARCH_SETTINGS:
        raise ParamError(f"search supports 1 to {MAX_SEARCH_SETTINGS} settings, got {k}", field="k")
    measuring_side(direction)
    started = time.monotonic()

    jobs = [(rho, k, direction, cfg, index) for index in range(cfg.restarts)]
    traces = run_pool(_run_restart, jobs, cfg.threads)

    # max with ties to the lowest index: traces are in index order
    best = traces[0]
    for trace in traces[1:]:
        if trace.r > best.r:
            best = trace

    best_settings = [MeasurementSetting(tuple(s)) for s in best.settings]
    result = settings_radius(rho, best_settings, direction, cfg.final_tol, cfg.solver)

    canonical_r = None
    if cfg.include_canonical and k > 1:
        canonical = canonical_settings(k)
        canonical_result = settings_radius(rho, canonical, direction, cfg.final_tol, cfg.solver)
        canonical_r = canonical_result.r
        if canonical_r > result.r:
            best_settings, result = canonical, canonical_result

    elapsed = time.monotonic() - started
    logger.info("R_%s(k=%d) = %.9g from %d restarts in %.1fs", direction, k, result.r, len(traces), elapsed)
    return SteeringRadiusReport(result.r, best_settings, direction, k, traces,
                                canonical_r, result, elapsed)


@dataclass
class SteeringVerdict:
    k: int
    ab: SteeringRadiusReport
    ba: SteeringRadiusReport

    @property
    def label(self):
        return classify_by_radii(self.ab.R, self.ba.R)

    def to_dict(self):
        return {
            "k": self.k,
            "label": str(self.label),
            "R_ab": self.ab.R,
            "R_ba": self.ba.R,
            "ab": self.ab.to_dict(),
            "ba": self.ba.to_dict(),
        }


def steering_verdict(rho, k, cfg=None) -> SteeringVerdict:
    """Radii in both directions and the resulting region label"""
    return SteeringVerdict(k, steering_radius(rho, k, "ab", cfg), steering_radius(rho, k, "ba", cfg))
