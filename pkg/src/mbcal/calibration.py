"""Modular Bayesian calibration: emulator + discrepancy GP + posterior sampling.

The code emulator (inputs x + theta) is trained on the calibration cases
only; the discrepancy GP (inputs x) is trained on validation-case residuals
at the nominal theta. The two boundary-condition training sets must be
disjoint, otherwise exact GP interpolation would cancel the code out of the
likelihood. GP hyperparameters stay fixed at their MLE values while theta is
sampled (the "modular" part).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from . import gp
from .domain import ParameterVector, Partition
from .mcmc import McmcConfig, PosteriorChain, adaptive_mh, diagnostics
from .sampler import lhs_sample

__all__ = [
    "CalibrationMode",
    "PriorSpec",
    "SurrogatePair",
    "LogPosterior",
    "build_gp_cc",
    "build_gp_md",
    "log_posterior",
    "calibrate",
    "CalibrationResult",
]

THETA_DIM = 4
BC_DIM = 4


class CalibrationMode(Enum):
    WithDiscrepancy = "with_discrepancy"
    NoDiscrepancy = "no_discrepancy"


@dataclass(frozen=True)
class PriorSpec:
    """Uniform box prior on the four multiplicative factors."""

    lo: float = 0.05
    hi: float = 5.0

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi):
            raise ValueError("prior needs 0 <= lo < hi")

    @property
    def ranges(self):
        return [(self.lo, self.hi)] * THETA_DIM

    def contains(self, theta: np.ndarray) -> bool:
        return bool(np.all(theta >= self.lo) and np.all(theta <= self.hi))

    @property
    def log_density(self) -> float:
        return -THETA_DIM * np.log(self.hi - self.lo)


@dataclass
class SurrogatePair:
    gp_cc: gp.GpModel
    gp_md: gp.GpModel | None = None

    def __post_init__(self):
        if self.gp_md is None:
            return
        # boundary conditions live in the first BC_DIM emulator input columns
        cc_x = np.unique(np.round(self.gp_cc.raw_inputs()[:, :BC_DIM], 12), axis=0)
        md_x = self.gp_md.raw_inputs()
        if np.min(cdist(cc_x, md_x)) < 1e-12:
            raise ValueError(
                "emulator and discrepancy GP share a boundary-condition point; "
                "their training sets must be disjoint"
            )


def _sorted_cases(cases, ids):
    by_id = {c.case_id: c for c in cases}
    return [by_id[i] for i in sorted(ids)]


def build_gp_cc(
    partition: Partition,
    cases,
    runner,
    theta_design_size: int,
    prior: PriorSpec,
    seed: int,
    restarts: int = 8,
) -> gp.GpModel:
    """Emulator of the code: inputs x + theta, outputs the 3 void fractions.

    Per calibration case, theta_design_size LHS draws over the prior box are
    evaluated through the runner; one GP is fit on the pooled rows.
    """
    if theta_design_size < 20:
        raise ValueError("theta_design_size must be >= 20")
    cal_cases = _sorted_cases(cases, partition.calibration_ids)
    case_seeds = np.random.SeedSequence(seed).generate_state(len(cal_cases))
    rows_x, rows_y = [], []
    for case, cseed in zip(cal_cases, case_seeds):
        design = lhs_sample(theta_design_size, prior.ranges, seed=int(cseed))
        xv = case.x.as_array()
        for th in design.points:
            try:
                y = np.asarray(runner(case.x, th), dtype=float)
            except Exception as exc:
                raise RuntimeError(
                    f"runner failed on case {case.case_id} at theta={th}"
                ) from exc
            rows_x.append(np.concatenate([xv, th]))
            rows_y.append(y)
    return gp.fit(np.array(rows_x), np.array(rows_y), restarts=restarts, seed=seed)


def build_gp_md(
    partition: Partition,
    cases,
    runner,
    theta_nominal: ParameterVector | None = None,
    restarts: int = 8,
    seed: int = 0,
) -> gp.GpModel:
    """Discrepancy GP: validation-case boundary conditions -> residuals at
    the nominal theta (all ones)."""
    val_cases = _sorted_cases(cases, partition.validation_ids)
    if len(val_cases) < BC_DIM + 1:
        raise ValueError(f"need at least {BC_DIM + 1} validation cases")
    theta = (theta_nominal or ParameterVector.ones()).as_array()
    xs, resid = [], []
    for case in val_cases:
        pred = np.asarray(runner(case.x, theta), dtype=float)
        xs.append(case.x.as_array())
        resid.append(case.y_exp.as_array() - pred)
    return gp.fit(np.array(xs), np.array(resid), restarts=restarts, seed=seed)


class LogPosterior:
    """Callable log-posterior of theta for a fixed surrogate pair and data.

    Discrepancy mean/variance at the calibration boundary conditions do not
    depend on theta and are precomputed; per call only the emulator is
    queried (one batched prediction over all calibration cases).
    """

    def __init__(self, pair: SurrogatePair, cases, partition: Partition,
                 mode: CalibrationMode, prior: PriorSpec):
        cal_cases = _sorted_cases(cases, partition.calibration_ids)
        self.pair = pair
        self.mode = mode
        self.prior = prior
        self.x_cal = np.array([c.x.as_array() for c in cal_cases])
        self.y_exp = np.array([c.y_exp.as_array() for c in cal_cases])
        self.sigma2_exp = np.array([c.meas.sigma_exp**2 for c in cal_cases])[:, None]
        if np.any(self.sigma2_exp <= 0):
            raise ValueError("nonpositive measurement sigma in calibration set")
        if mode is CalibrationMode.WithDiscrepancy and pair.gp_md is not None:
            self.delta, self.sigma2_delta = gp.predict(pair.gp_md, self.x_cal)
        else:
            self.delta = np.zeros_like(self.y_exp)
            self.sigma2_delta = np.zeros_like(self.y_exp)

    def __call__(self, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float).ravel()
        if not np.all(np.isfinite(theta)) or not self.prior.contains(theta):
            return -np.inf
        pts = np.hstack([self.x_cal, np.tile(theta, (self.x_cal.shape[0], 1))])
        mean, sigma2_code = gp.predict(self.pair.gp_cc, pts)
        r = self.y_exp - mean - self.delta
        v = self.sigma2_exp + self.sigma2_delta + sigma2_code
        return float(
            -0.5 * np.sum(r**2 / v + np.log(2.0 * np.pi * v)) + self.prior.log_density
        )


def log_posterior(theta, pair: SurrogatePair, cases, partition: Partition,
                  mode: CalibrationMode, prior: PriorSpec) -> float:
    """One-shot convenience wrapper around LogPosterior."""
    th = theta.as_array() if isinstance(theta, ParameterVector) else theta
    return LogPosterior(pair, cases, partition, mode, prior)(th)


@dataclass
class CalibrationResult:
    mode: CalibrationMode
    pair: SurrogatePair
    chains: list[PosteriorChain]
    diagnostics: dict
    summary: dict            # per-parameter stats over pooled post-burn draws
    correlation: np.ndarray  # (4, 4)
    converged: bool

    def pooled_draws(self) -> np.ndarray:
        return np.concatenate([c.post_burn for c in self.chains])


def _summarize(draws: np.ndarray, names) -> tuple[dict, np.ndarray]:
    summary = {}
    for j, name in enumerate(names):
        col = draws[:, j]
        p = np.percentile(col, [2.5, 50.0, 97.5])
        summary[name] = {
            "mean": float(col.mean()),
            "std": float(col.std(ddof=1)),
            "p2.5": float(p[0]),
            "p50": float(p[1]),
            "p97.5": float(p[2]),
        }
    return summary, np.corrcoef(draws.T)


def calibrate(
    cases,
    partition: Partition,
    runner,
    mode: CalibrationMode,
    prior: PriorSpec = PriorSpec(),
    theta_design_size: int = 100,
    mcmc_config: McmcConfig | None = None,
    n_chains: int = 4,
    seed: int = 0,
    gp_restarts: int = 8,
    pair: SurrogatePair | None = None,
    param_names=("P1008", "P1012", "P1022", "P1028"),
) -> CalibrationResult:
    """Full modular-Bayesian calibration in one mode.

    Builds the surrogates (unless a prebuilt pair is supplied), runs n_chains
    adaptive-MH chains from jittered all-ones starts, and summarizes the
    pooled post-burn-in draws. Non-convergence (any R-hat >= 1.1) is reported
    in the result, not raised.
    """
    if n_chains < 2:
        raise ValueError("need at least 2 chains for diagnostics")
    if pair is None:
        gp_cc = build_gp_cc(partition, cases, runner, theta_design_size, prior,
                            seed=seed, restarts=gp_restarts)
        gp_md = None
        if mode is CalibrationMode.WithDiscrepancy:
            gp_md = build_gp_md(partition, cases, runner,
                                restarts=gp_restarts, seed=seed + 1)
        pair = SurrogatePair(gp_cc=gp_cc, gp_md=gp_md)
    log_post = LogPosterior(pair, cases, partition, mode, prior)

    if mcmc_config is None:
        width = prior.hi - prior.lo
        mcmc_config = McmcConfig(
            init=np.ones(THETA_DIM),
            initial_proposal_cov=np.eye(THETA_DIM) * (0.05 * width) ** 2,
            seed=seed,
        )
    mcmc_config = replace(
        mcmc_config,
        support=(np.full(THETA_DIM, prior.lo), np.full(THETA_DIM, prior.hi)),
    )

    chain_seeds = np.random.SeedSequence(mcmc_config.seed).generate_state(2 * n_chains)
    chains = []
    for k in range(n_chains):
        rng = np.random.default_rng(int(chain_seeds[2 * k]))
        init = np.clip(
            mcmc_config.init + 0.1 * rng.standard_normal(THETA_DIM) * (k > 0),
            prior.lo, prior.hi,
        )
        cfg_k = replace(mcmc_config, init=init, seed=int(chain_seeds[2 * k + 1]))
        chains.append(adaptive_mh(log_post, cfg_k))

    diag = diagnostics(chains)
    converged = bool(np.all(diag["rhat"] < 1.1))
    if not converged:
        warnings.warn(f"MCMC not converged: max R-hat = {np.max(diag['rhat']):.3f}")
    pooled = np.concatenate([c.post_burn for c in chains])
    summary, corr = _summarize(pooled, param_names)
    return CalibrationResult(
        mode=mode, pair=pair, chains=chains, diagnostics=diag,
        summary=summary, correlation=corr, converged=converged,
    )
