"""Distance of replayed transitions from an environment's true dynamics.

For a flat row [s|a|r|s2] and a deterministic transition map, the
residual is the Euclidean distance between what the row claims and what
the dynamics produce at (s, a), with reward and next-state error folded
into one unweighted norm.  Per-component pieces are kept so a different
weighting can be recomputed from serialized output.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .core import SpaceSpec
from .errors import InvalidInputError
from .strategies import TrainingBatch


@dataclass(frozen=True)
class ResidualReport:
    """Residuals of the interpolated rows of one batch."""

    strategy: str
    residuals: np.ndarray
    reward_residuals: np.ndarray
    state_residuals: np.ndarray
    mean: float = field(init=False)
    median: float = field(init=False)
    p95: float = field(init=False)

    def __post_init__(self):
        r = np.asarray(self.residuals, dtype=np.float64)
        if r.ndim != 1:
            raise InvalidInputError("residuals must be a vector")
        if r.size and np.min(r) < 0:
            raise InvalidInputError("residuals must be non-negative")
        object.__setattr__(self, "residuals", r)
        if r.size:
            object.__setattr__(self, "mean", float(np.mean(r)))
            object.__setattr__(self, "median", float(np.median(r)))
            object.__setattr__(self, "p95", float(np.percentile(r, 95.0)))
        else:
            object.__setattr__(self, "mean", float("nan"))
            object.__setattr__(self, "median", float("nan"))
            object.__setattr__(self, "p95", float("nan"))

    @property
    def count(self) -> int:
        return int(self.residuals.size)


def flat_residual(flat: np.ndarray, spec: SpaceSpec, dynamics) -> tuple:
    """(residual, reward_residual, state_residual) for one flat row."""
    flat = np.asarray(flat, dtype=np.float64)
    if flat.shape != (spec.flat_dim,):
        raise InvalidInputError(
            f"flat must have shape ({spec.flat_dim},), got {flat.shape}"
        )
    ds, da = spec.state_dim, spec.action_dim
    s = flat[:ds]
    a = flat[ds:ds + da]
    r_hat = flat[ds + da]
    s2_hat = flat[ds + da + 1:]
    r_true, s2_true = dynamics(s, a)
    dr = abs(r_hat - r_true)
    dstate = float(np.linalg.norm(s2_hat - s2_true))
    return float(np.sqrt(dstate * dstate + dr * dr)), float(dr), dstate


def residual_report(batch: TrainingBatch, spec: SpaceSpec, dynamics,
                    strategy: str, include_all: bool = False) -> ResidualReport:
    """Residuals of a batch against a deterministic transition map.

    Only rows the sampler actually blended are scored; passthrough rows
    are real transitions and carry no information about interpolation
    quality.  `include_all` keeps them anyway, for the baseline check
    that raw replay sits on the manifold.
    """
    rows = np.arange(len(batch)) if include_all \
        else np.flatnonzero(batch.interpolated)
    res = np.empty(rows.size)
    rres = np.empty(rows.size)
    sres = np.empty(rows.size)
    for j, i in enumerate(rows):
        res[j], rres[j], sres[j] = flat_residual(batch.flats[i], spec, dynamics)
    return ResidualReport(strategy=strategy, residuals=res,
                          reward_residuals=rres, state_residuals=sres)


def reports_to_csv(reports, seeds) -> str:
    """Serialize reports as CSV, one row per scored sample.

    Columns: strategy, seed, sample_id, residual, reward_residual,
    state_residual.  Floats use repr-faithful formatting so the file
    round-trips bitwise.
    """
    out = io.StringIO()
    out.write("strategy,seed,sample_id,residual,reward_residual,state_residual\n")
    for report, seed in zip(reports, seeds):
        for i in range(report.count):
            out.write(f"{report.strategy},{seed},{i},"
                      f"{float(report.residuals[i])!r},"
                      f"{float(report.reward_residuals[i])!r},"
                      f"{float(report.state_residuals[i])!r}\n")
    return out.getvalue()
