"""
Local Hidden State Models

Decides whether an assemblage admits a local-hidden-state decomposition

    rho~_{a|n_j} = sum_i P(a|n_j, i) p_i rho_i

over the 2^k deterministic strategies, and computes the steering radius of
the assemblage: the smallest achievable largest hidden-state Bloch radius.

With v_i = p_i R_i the problem at a fixed radius cap t is a convex conic
feasibility problem

    sum_i p_i = 1,  sum_i v_i = b,
    sum_{i: bit_j(i)=0} p_i = P(0|n_j),  sum_{i: bit_j(i)=0} v_i = β_{0|n_j},
    |v_i| <= t p_i,

solved by Douglas-Rachford splitting between the affine constraint set (fixed
pseudo-inverse projector) and the product of cones, with safeguarded Anderson
acceleration. The radius is found by bisection on t. Outcome a=1 rows are
implied by the a=0 rows and the marginal and are not imposed.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from epr_steering.api.steering_errors import CapError, ParamError, SolverStall

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-5
MIN_TOL, MAX_TOL = 1e-8, 1e-2
FEAS_TOL = 1e-7
MAX_ITER = 50_000
MAX_SETTINGS = 16
# Radii are shown as |v_i| / max(p_i, DISPLAY_EPS); never used inside the solver
DISPLAY_EPS = 1e-12
# Members with smaller outcome probability carry no usable radius information
PROB_FLOOR = 1e-9
CERT_MARGIN = 1e-12
WITNESS_TOL = 1e-6


# ---------------------------------------------------------------------------
# Strategies and ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeterministicStrategy:
    index: int
    k: int

    @property
    def assignment(self) -> Tuple[int, ...]:
        """Outcome for each setting: bit j of index is the outcome of setting j"""
        return tuple((self.index >> j) & 1 for j in range(self.k))

    def outcome(self, setting_index):
        return (self.index >> setting_index) & 1


def enumerate_strategies(k):
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= MAX_SETTINGS:
        raise CapError(f"setting count must be in [1, {MAX_SETTINGS}], got {k}")
    return [DeterministicStrategy(i, int(k)) for i in range(2 ** k)]


def strategy_table(k):
    """(2^k, k) array; entry [i, j] is the outcome strategy i assigns to setting j"""
    return (np.arange(2 ** k)[:, None] >> np.arange(k)[None, :]) & 1


@dataclass(frozen=True, eq=False)
class HiddenStateEnsemble:
    weights: np.ndarray
    vectors: np.ndarray

    @property
    def radii(self):
        return np.linalg.norm(self.vectors, axis=1) / np.maximum(self.weights, DISPLAY_EPS)

    @property
    def max_radius(self):
        return float(np.max(self.radii))

    def reproduce(self, k):
        """(k, 2) probabilities and (k, 2, 3) unnormalized Bloch vectors of the model"""
        bits = strategy_table(k)
        probs = np.empty((k, 2))
        blochs = np.empty((k, 2, 3))
        for j in range(k):
            for a in (0, 1):
                mask = bits[:, j] == a
                probs[j, a] = self.weights[mask].sum()
                blochs[j, a] = self.vectors[mask].sum(axis=0)
        return probs, blochs

    def residual(self, asm):
        """Largest deviation between the model and every assemblage member"""
        probs, blochs = self.reproduce(asm.k)
        return max(
            abs(float(self.weights.sum()) - 1),
            float(np.max(np.abs(probs - asm.probabilities()))),
            float(np.max(np.abs(blochs - asm.blochs()))),
        )

    def to_dict(self):
        return {
            "weights": self.weights.tolist(),
            "vectors": self.vectors.tolist(),
            "radii": self.radii.tolist(),
        }


@dataclass(frozen=True, eq=False)
class SteeringCertificate:
    """
    Linear functional F(asm) = <multipliers, rhs(asm)> that is non-negative for
    every assemblage produced by hidden states of radius below valid_up_to.
    A negative value on the data proves that no such model exists.
    """

    multipliers: np.ndarray
    value: float
    probe_radius: float
    valid_up_to: float

    def evaluate(self, asm):
        return float(np.sum(self.multipliers * constraint_rhs(asm)))

    def to_dict(self):
        return {
            "multipliers": self.multipliers.tolist(),
            "value": self.value,
            "probe_radius": self.probe_radius,
            "valid_up_to": self.valid_up_to,
        }


@dataclass
class SolverOptions:
    feas_tol: float = FEAS_TOL
    max_iter: int = MAX_ITER
    check_every: int = 10
    anderson_memory: int = 6
    # Iteration cap for the optional probe at the member bound
    probe_iter: int = 2000

    def validate(self):
        if not 0 < self.feas_tol < 1e-2:
            raise ParamError(f"feas_tol={self.feas_tol} outside (0, 1e-2)", field="feas_tol")
        if self.max_iter < 10:
            raise ParamError(f"max_iter={self.max_iter} must be at least 10", field="max_iter")
        return self


@dataclass(eq=False)
class FeasibilityResult:
    feasible: bool
    t: float
    residual: float
    iterations: int
    witness: Optional[HiddenStateEnsemble] = None
    certificate: Optional[SteeringCertificate] = None
    state: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def gap(self):
        return 0.0 if self.feasible else self.residual


@dataclass(eq=False)
class RadiusResult:
    r: float
    ensemble: HiddenStateEnsemble
    bisection_interval: Tuple[float, float]
    iterations: int
    evaluations: int
    lower_bound: float
    certificate: Optional[SteeringCertificate] = None

    def to_dict(self, with_ensemble=True):
        data = {
            "r": self.r,
            "interval": list(self.bisection_interval),
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "lower_bound": self.lower_bound,
        }
        if with_ensemble:
            data["ensemble"] = self.ensemble.to_dict()
        if self.certificate is not None:
            data["certificate"] = self.certificate.to_dict()
        return data


# ---------------------------------------------------------------------------
# Conic feasibility problem
# ---------------------------------------------------------------------------

def constraint_rhs(asm):
    """(1+k, 4) right-hand side: rows (1, b) and (P(0|n_j), β_{0|n_j})"""
    rhs = np.empty((1 + asm.k, 4))
    rhs[0, 0] = 1.0
    rhs[0, 1:] = asm.reduced_bloch()
    rhs[1:, 0] = asm.probabilities()[:, 0]
    rhs[1:, 1:] = asm.blochs()[:, 0]
    return rhs


class ConeProblem:
    """Affine constraint data of the hidden-state feasibility problem for one assemblage"""

    def __init__(self, asm):
        self.assemblage = asm
        self.k = asm.k
        self.bits = strategy_table(self.k)
        n = 2 ** self.k
        self.incidence = np.vstack([np.ones(n), (self.bits == 0).T.astype(float)])
        self.rhs = constraint_rhs(asm)
        self._pinv = np.linalg.pinv(self.incidence)

    @property
    def size(self):
        return self.incidence.shape[1]

    def particular_solution(self):
        return self._pinv @ self.rhs

    def project_affine(self, x):
        return x - self._pinv @ (self.incidence @ x - self.rhs)

    def affine_residual(self, x):
        return float(np.max(np.abs(self.incidence @ x - self.rhs)))

    @staticmethod
    def project_cone(x, t):
        """Row-wise projection onto {(p, v): |v| <= t p}"""
        p = x[:, 0]
        v = x[:, 1:]
        s = np.linalg.norm(v, axis=1)
        inside = (s <= t * p) & (p >= 0)
        polar = t * s <= -p
        scale = (p + t * s) / (1 + t * t)
        out = np.empty_like(x)
        out[:, 0] = scale
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(s > 0, t * scale / s, 0.0)
        out[:, 1:] = v * factor[:, None]
        out[inside] = x[inside]
        out[polar & ~inside] = 0.0
        return out

    def member_bound(self):
        """Largest normalized conditional Bloch norm; no ensemble has a smaller radius"""
        probs = self.assemblage.probabilities()
        norms = np.linalg.norm(self.assemblage.blochs(), axis=2)
        usable = probs > PROB_FLOOR
        if not usable.any():
            return 0.0
        return float(np.max(norms[usable] / probs[usable]))

    def product_witness(self) -> HiddenStateEnsemble:
        """
        Explicit ensemble with independent outcome weights
        p_i = prod_j P(s_i(j)|n_j) and R_i = b + sum_j (R_{s_i(j)|n_j} - b).
        It reproduces the assemblage exactly whenever no-signalling holds.
        """
        probs = self.assemblage.probabilities()
        blochs = self.assemblage.blochs()
        b = self.assemblage.reduced_bloch()
        normalized = np.where(probs[..., None] > PROB_FLOOR,
                              blochs / np.maximum(probs, PROB_FLOOR)[..., None],
                              b)
        cols = np.arange(self.k)
        weights = np.prod(probs[cols, self.bits], axis=1)
        radii = b + np.sum(normalized[cols, self.bits] - b, axis=1)
        return HiddenStateEnsemble(weights, weights[:, None] * radii)

    def certificate(self, gap, t) -> Optional[SteeringCertificate]:
        """
        Turn an approximate gap vector between the two sets into a verified
        infeasibility certificate, or None when it does not prove anything yet.

        Lifting the first multiplier by c adds c to every q_i and to the value,
        so the functional stays a certificate for every radius t' with
        max_i(t' |w_i| - q_i) below the value's negative slack.
        """
        multipliers = self._pinv.T @ gap
        norm = float(np.linalg.norm(multipliers))
        if norm == 0:
            return None
        multipliers = multipliers / norm
        dual = self.incidence.T @ multipliers
        q = dual[:, 0]
        w = np.linalg.norm(dual[:, 1:], axis=1)
        slack = -float(np.sum(multipliers * self.rhs)) - CERT_MARGIN
        if slack <= 0:
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            limits = np.where(w > 0, (q + slack) / w, np.where(q + slack > 0, np.inf, -np.inf))
        valid_up_to = float(np.min(limits))
        if not valid_up_to > t:
            return None
        multipliers[0, 0] += max(0.0, float(np.max(t * w - q)))
        value = float(np.sum(multipliers * self.rhs))
        return SteeringCertificate(multipliers, value, float(t), valid_up_to)

    def ensemble_from(self, x) -> HiddenStateEnsemble:
        weights = x[:, 0].copy()
        total = weights.sum()
        return HiddenStateEnsemble(weights / total, x[:, 1:] / total)


def _stagnant(history, n):
    split = int(0.8 * n)
    if split == 0 or split == n:
        return False
    return float(np.min(history[split:n])) > 0.99 * float(np.min(history[:split]))


def _douglas_rachford(problem, t, z, options, max_iter):
    def step(z_):
        x_ = problem.project_affine(z_)
        y_ = problem.project_cone(2 * x_ - z_, t)
        return x_, y_

    x, y = step(z)
    g = y - x
    dz_hist = deque(maxlen=options.anderson_memory)
    dg_hist = deque(maxlen=options.anderson_memory)
    history = np.empty(max_iter)
    best_y, best_residual = y, math.inf

    for it in range(1, max_iter + 1):
        residual = problem.affine_residual(y)
        history[it - 1] = residual
        if residual < best_residual:
            best_y, best_residual = y, residual
        if residual <= options.feas_tol:
            return FeasibilityResult(True, t, residual, it, witness=problem.ensemble_from(y), state=z)
        if it % options.check_every == 0:
            cert = problem.certificate(g, t)
            if cert is not None:
                return FeasibilityResult(False, t, residual, it, certificate=cert)

        g_norm = np.linalg.norm(g)
        z_next = None
        if dz_hist:
            dz = np.stack([d.ravel() for d in dz_hist], axis=1)
            dg = np.stack([d.ravel() for d in dg_hist], axis=1)
            gamma = np.linalg.lstsq(dg, g.ravel(), rcond=None)[0]
            z_try = (z.ravel() + g.ravel() - (dz + dg) @ gamma).reshape(z.shape)
            x_try, y_try = step(z_try)
            if np.linalg.norm(y_try - x_try) < g_norm:
                z_next, x_next, y_next = z_try, x_try, y_try
            else:
                dz_hist.clear()
                dg_hist.clear()
        if z_next is None:
            z_next = z + g
            x_next, y_next = step(z_next)

        g_next = y_next - x_next
        dz_hist.append(z_next - z)
        dg_hist.append(g_next - g)
        z, x, y, g = z_next, x_next, y_next, g_next

    # a=1 rows of the normalized model can deviate by twice the a=0 rows
    total = float(best_y[:, 0].sum())
    if total > 0 and problem.affine_residual(best_y / total) <= 0.5 * WITNESS_TOL:
        logger.debug("accepting best iterate at t=%.9g (residual %.3e) at the iteration cap", t, best_residual)
        return FeasibilityResult(True, t, best_residual, max_iter, witness=problem.ensemble_from(best_y), state=z)

    if float(np.min(history)) > 10 * options.feas_tol and _stagnant(history, max_iter):
        return FeasibilityResult(False, t, float(np.min(history)), max_iter)

    raise SolverStall(
        f"no decision at t={t:.9g} after {max_iter} iterations "
        f"(best residual {float(np.min(history)):.3e})",
        t=t, residual=float(np.min(history)), iterations=max_iter,
    )


def feasible_at(t, asm, options=None, warm_start=None, problem=None, max_iter=None) -> FeasibilityResult:
    """
    Decide whether hidden states of Bloch radius <= t reproduce the assemblage.

    Args:
        t: candidate radius cap (>= 0)
        asm: Assemblage
        options: SolverOptions (tolerance and iteration cap)
        warm_start: splitting state returned by an earlier feasible call

    Returns:
        FeasibilityResult with a witness ensemble when feasible and, when the
        decision came before the cap, a SteeringCertificate when infeasible

    Raises:
        SolverStall: no decision within the iteration cap
    """
    if not t >= 0:
        raise ParamError(f"radius cap must be non-negative, got {t}")
    options = (options or SolverOptions()).validate()
    problem = problem or ConeProblem(asm)
    z = problem.particular_solution() if warm_start is None else warm_start.copy()
    return _douglas_rachford(problem, float(t), z, options, max_iter or options.max_iter)


def min_max_radius(asm, tol=DEFAULT_TOL, options=None) -> RadiusResult:
    """
    Smallest achievable largest hidden-state radius for an assemblage.

    The bracket starts at the member bound (certified infeasible below it) and
    at the explicit product ensemble (certified feasible); each infeasible probe
    may raise the lower end to the radius its certificate covers and each
    feasible probe lowers the upper end to its witness radius. A probe left
    undecided at the iteration cap only raises the lower end.

    Returns:
        RadiusResult whose r is the feasible end of an interval of width <= tol
    """
    if not MIN_TOL <= tol <= MAX_TOL:
        raise ParamError(f"tol={tol} outside [{MIN_TOL}, {MAX_TOL}]", field="tol")
    options = (options or SolverOptions()).validate()
    problem = ConeProblem(asm)

    lower = problem.member_bound()
    ensemble = problem.product_witness()
    hi = max(ensemble.max_radius, lower)
    iterations = 0
    evaluations = 0
    certificate = None

    if ensemble.max_radius <= lower * (1 + 1e-12) + 1e-15:
        return RadiusResult(hi, ensemble, (max(0.0, lower - tol), hi), 0, 0, lower)

    lo = lower
    try:
        probe = feasible_at(lower, asm, options, problem=problem, max_iter=options.probe_iter)
        iterations += probe.iterations
        evaluations += 1
        if probe.feasible:
            return RadiusResult(lower, probe.witness, (max(0.0, lower - tol), lower),
                                iterations, evaluations, lower)
        if probe.certificate is not None:
            certificate = probe.certificate
            lo = min(max(lo, certificate.valid_up_to), hi)
    except SolverStall:
        logger.debug("member-bound probe undecided at t=%.9g; bisecting from the bound", lower)

    warm = None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        evaluations += 1
        try:
            probe = feasible_at(mid, asm, options, warm_start=warm, problem=problem)
        except SolverStall as exc:
            # undecided midpoints sit next to the optimum; hi keeps the last witness
            logger.debug("midpoint t=%.9g undecided: %s", mid, exc)
            iterations += exc.context.get("iterations", 0)
            lo = mid
            continue
        iterations += probe.iterations
        if probe.feasible:
            ensemble = probe.witness
            hi = max(min(mid, ensemble.max_radius), lo)
            warm = probe.state
        else:
            lo = mid
            if probe.certificate is not None:
                certificate = probe.certificate
                lo = min(max(mid, certificate.valid_up_to), hi)

    logger.debug("radius %.9g in [%.9g, %.9g] after %d probes", hi, lo, hi, evaluations)
    return RadiusResult(hi, ensemble, (lo, hi), iterations, evaluations, lower, certificate)


def has_lhsm(asm, tol=DEFAULT_TOL, options=None):
    return min_max_radius(asm, tol, options).r <= 1 + tol


# ---------------------------------------------------------------------------
# Independent oracle
# ---------------------------------------------------------------------------

PENALTY = 1e3


def oracle_radius(asm, starts=12, seed=0, maxiter=6000):
    """
    Brute-force radius: parametrize the affine constraint set exactly, penalize
    negative weights, and minimize the largest ratio |v_i| / p_i by multi-start
    Nelder-Mead. Independent of the splitting solver; slow but simple.
    """
    problem = ConeProblem(asm)
    base = problem.particular_solution()
    basis = null_space(problem.incidence)
    dim = basis.shape[1]

    def unpack(y):
        return base + basis @ y.reshape(dim, 4)

    def objective(y):
        x = unpack(y)
        p = x[:, 0]
        s = np.linalg.norm(x[:, 1:], axis=1)
        negative = float(np.clip(-p, 0, None).sum())
        ratios = s / np.maximum(p, PROB_FLOOR)
        return float(np.max(ratios)) + PENALTY * negative

    if dim == 0:
        return objective(np.zeros(0))

    rng = np.random.default_rng(seed)
    product = problem.product_witness()
    anchor = np.column_stack([product.weights, product.vectors])
    candidates = [basis.T @ (anchor - base), np.zeros((dim, 4))]
    candidates += [candidates[0] + 0.05 * rng.standard_normal((dim, 4)) for _ in range(max(starts - 2, 0))]

    best = math.inf
    for start in candidates:
        y = start.ravel()
        for _ in range(3):
            res = minimize(objective, y, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": maxiter,
                                    "maxfev": 2 * maxiter, "adaptive": True})
            y = res.x
        best = min(best, float(res.fun))
    return best
