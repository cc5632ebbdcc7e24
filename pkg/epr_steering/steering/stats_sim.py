"""
Counting statistics

Forward model of the coincidence measurements: the measuring party uses the
given settings, the steered party does Pauli tomography in x, y and z. Counts
are Poisson with equal integration time per (setting, basis) pair.

Reconstruction is linear inversion of every conditional state followed by
no-signalling symmetrization. Reconstructed Bloch vectors may leave the unit
sphere and are passed to the solver unclamped.

Count array layout: counts[setting, a, basis, bob_outcome], bob_outcome 0 is +1.
"""

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from epr_steering.api.steering_errors import InsufficientData, ParamError, ParseError
from epr_steering.api.tasks import run_pool
from epr_steering.steering.assemblage import Assemblage, MeasurementSetting, build_assemblage
from epr_steering.steering.lhsm import DEFAULT_TOL, SolverOptions, min_max_radius
from epr_steering.steering.settings_search import measuring_side
from epr_steering.utils.output import write_text

logger = logging.getLogger(__name__)

BASES = ("x", "y", "z")
CSV_COLUMNS = ("setting_index", "a", "basis", "bob_outcome", "count")
MIN_MEAN_COUNTS = 100
MIN_RESAMPLES = 10
# stream roles for derive_seed
SIMULATION, BOOTSTRAP = 0, 1


@dataclass(eq=False)
class CountRecord:
    settings: Tuple[MeasurementSetting, ...]
    measuring_side: str
    counts: np.ndarray

    def __post_init__(self):
        self.settings = tuple(self.settings)
        self.counts = np.asarray(self.counts)
        if self.counts.shape != (len(self.settings), 2, 3, 2):
            raise ParamError(f"counts must have shape ({len(self.settings)}, 2, 3, 2), got {self.counts.shape}")
        if np.any(self.counts < 0):
            raise ParamError("counts must be non-negative")
        if self.total <= 0:
            raise InsufficientData("count record is empty")

    @property
    def k(self):
        return len(self.settings)

    @property
    def total(self):
        return float(self.counts.sum())

    def to_csv(self, path=None):
        """CSV text (and file when path is given); the comment line carries settings and side"""
        meta = {"settings": [s.to_list() for s in self.settings], "measuring_side": self.measuring_side}
        frame = pd.DataFrame(
            [[j, a, BASES[b], "+1" if o == 0 else "-1", _format_count(value)]
             for (j, a, b, o), value in np.ndenumerate(self.counts)],
            columns=CSV_COLUMNS,
        )
        buffer = io.StringIO()
        buffer.write("# " + json.dumps(meta) + "\n")
        frame.to_csv(buffer, index=False, lineterminator="\n")
        text = buffer.getvalue()
        if path is not None:
            write_text(text, path)
        return text

    @classmethod
    def from_csv(cls, source):
        """Parse a count file written by to_csv (path or CSV text)"""
        text = source if isinstance(source, str) and "\n" in source else Path(source).read_text(encoding="utf-8")
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ParseError("count file must start with a '# {...}' metadata line")
        try:
            meta = json.loads(lines[0][1:])
            settings = tuple(MeasurementSetting(tuple(s)) for s in meta["settings"])
            side = meta["measuring_side"]
        except (ValueError, KeyError, TypeError) as e:
            raise ParseError(f"count file metadata line: {e}", line=1)

        try:
            frame = pd.read_csv(io.StringIO("\n".join(lines[1:])), dtype=str, keep_default_na=False)
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ParseError(f"count file: {e}", line=2)
        if tuple(frame.columns) != CSV_COLUMNS:
            raise ParseError(f"count file columns must be {','.join(CSV_COLUMNS)}", line=2)

        counts = np.zeros((len(settings), 2, 3, 2))
        for lineno, (j, a, basis, outcome, value) in enumerate(frame.itertuples(index=False, name=None), start=3):
            try:
                o = {"+1": 0, "-1": 1}[outcome]
                counts[int(j), int(a), BASES.index(basis), o] = float(value)
            except (ValueError, KeyError, IndexError) as e:
                raise ParseError(f"count file line {lineno}: {e}", line=lineno)
        return cls(settings, side, counts)


def _format_count(value):
    return str(int(value)) if float(value).is_integer() else f"{float(value):.9g}"


@dataclass
class BootstrapSummary:
    mean: float
    std: float
    resamples: int
    seed: int
    estimate: float
    values: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "mean": self.mean,
            "std": self.std,
            "resamples": self.resamples,
            "seed": self.seed,
            "estimate": self.estimate,
        }


def _check_mean_counts(mean_total_counts):
    if not mean_total_counts >= MIN_MEAN_COUNTS:
        raise ParamError(f"mean_total_counts must be >= {MIN_MEAN_COUNTS}, got {mean_total_counts}",
                         field="mean_total_counts")


def expected_counts(rho, settings, direction, mean_total_counts) -> CountRecord:
    """Noiseless count record: every cell holds its Poisson mean"""
    _check_mean_counts(mean_total_counts)
    side = measuring_side(direction)
    asm = build_assemblage(rho, settings, side)
    probs = asm.probabilities()
    blochs = asm.blochs()
    signs = np.array([1.0, -1.0])
    # (P + (-1)^o β_b) / 2 per (setting, a, basis, outcome)
    born = 0.5 * (probs[:, :, None, None] + blochs[:, :, :, None] * signs)
    per_pair = mean_total_counts / (asm.k * len(BASES))
    return CountRecord(asm.settings, side, np.clip(born, 0, None) * per_pair)


def derive_seed(seed, role):
    """Independent seed for one stage of a run sharing a single user seed"""
    return int(np.random.SeedSequence([int(seed), int(role)]).generate_state(1)[0])


def simulate_counts(rho, settings, direction, mean_total_counts, seed) -> CountRecord:
    """Poisson draw around expected_counts; deterministic given seed"""
    means = expected_counts(rho, settings, direction, mean_total_counts)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    return CountRecord(means.settings, means.measuring_side, rng.poisson(means.counts))


def reconstruct_assemblage(counts: CountRecord) -> Assemblage:
    """
    Linear-inversion estimate of the assemblage.

    Raises:
        InsufficientData: a (setting, basis) pair without any count
    """
    c = np.asarray(counts.counts, dtype=float)
    pair_totals = c.sum(axis=(1, 3))
    if np.any(pair_totals <= 0):
        j, b = np.argwhere(pair_totals <= 0)[0]
        raise InsufficientData(f"no counts for setting {j} in basis {BASES[b]}",
                               setting_index=int(j), basis=BASES[b])

    freqs = c / pair_totals[:, None, :, None]
    probs = freqs.sum(axis=3).mean(axis=2)
    blochs = freqs[..., 0] - freqs[..., 1]

    # no-signalling: every setting's outcome sum becomes the average over settings
    sums_p = probs.sum(axis=1)
    sums_b = blochs.sum(axis=1)
    reduced_p = sums_p.mean()
    reduced_b = sums_b.mean(axis=0)
    probs = probs + 0.5 * (reduced_p - sums_p)[:, None]
    blochs = blochs + 0.5 * (reduced_b - sums_b)[:, None, :]

    return Assemblage.from_moments(counts.settings, probs, blochs, reduced_b / reduced_p,
                                   counts.measuring_side)


def clamp_to_sphere(bloch):
    """Display helper; solver inputs stay unclamped"""
    v = np.asarray(bloch, dtype=float)
    norm = np.linalg.norm(v)
    return v / norm if norm > 1 else v


def _resample_radius(job):
    counts, seed, tol, options = job
    rng = np.random.Generator(np.random.Philox(int(seed)))
    resampled = CountRecord(counts.settings, counts.measuring_side, rng.poisson(counts.counts))
    return min_max_radius(reconstruct_assemblage(resampled), tol, options).r


def bootstrap_radius(counts: CountRecord, k=None, direction=None, resamples=100, seed=0,
                     tol=DEFAULT_TOL, options=None, threads=1) -> BootstrapSummary:
    """
    Parametric bootstrap of the assemblage radius at the recorded settings.

    Resample i draws every cell from Poisson(count) with seed + i; the summary
    is the mean and sample standard deviation over resamples.

    Raises:
        InsufficientData: the data or a resample leaves a (setting, basis) pair empty
    """
    if resamples < MIN_RESAMPLES:
        raise ParamError(f"resamples must be >= {MIN_RESAMPLES}, got {resamples}", field="resamples")
    if k is not None and k != counts.k:
        raise ParamError(f"count record has {counts.k} settings, expected {k}", field="k")
    if direction is not None and measuring_side(direction) != counts.measuring_side:
        raise ParamError(f"count record was measured on side {counts.measuring_side}", field="direction")

    options = options or SolverOptions()
    estimate = min_max_radius(reconstruct_assemblage(counts), tol, options).r
    jobs = [(counts, int(seed) + i, tol, options) for i in range(resamples)]
    values = np.sort(np.array(run_pool(_resample_radius, jobs, threads)))
    summary = BootstrapSummary(float(values.mean()), float(values.std(ddof=1)), resamples, int(seed),
                               estimate, values)
    logger.debug("bootstrap r = %.6g +- %.2g over %d resamples", summary.mean, summary.std, resamples)
    return summary
