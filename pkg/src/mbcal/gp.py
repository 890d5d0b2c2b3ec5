"""Gaussian-process regression with anisotropic squared-exponential kernel.

Used both as the code emulator (inputs x + theta) and as the discrepancy
model (inputs x). Outputs are modeled as independent GPs sharing the same
training inputs. Inputs are standardized to [0,1] per column and outputs to
zero mean / unit variance; hyperparameters live in standardized space.

Hyperparameters are fit by maximizing the log marginal likelihood in
log-space with analytic gradients and multi-start L-BFGS-B.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .sampler import lhs_sample

__all__ = [
    "KernelConfig",
    "HyperBounds",
    "GpModel",
    "Prediction",
    "fit",
    "predict",
    "loo_cv",
    "log_marginal_likelihood",
    "lml_and_grad",
    "build_model",
    "save_model",
    "load_model",
]

NUGGET_CEIL = 1e-4
NUGGET_FLOOR = 1e-10


@dataclass(frozen=True)
class KernelConfig:
    """Anisotropic SE kernel: one lengthscale per input, plus a nugget."""

    lengthscales: np.ndarray
    signal_variance: float
    nugget: float

    def __post_init__(self):
        ls = np.asarray(self.lengthscales, dtype=float)
        object.__setattr__(self, "lengthscales", ls)
        if np.any(ls <= 0) or self.signal_variance <= 0 or self.nugget <= 0:
            raise ValueError("kernel hyperparameters must be strictly positive")


@dataclass(frozen=True)
class HyperBounds:
    lengthscale: tuple[float, float] = (1e-2, 1e2)
    signal_variance: tuple[float, float] = (1e-3, 1e3)
    nugget: tuple[float, float] = (NUGGET_FLOOR, NUGGET_CEIL)


@dataclass(frozen=True)
class Prediction:
    mean: np.ndarray    # (m,)
    variance: np.ndarray  # (m,), signal only, no measurement noise


@dataclass
class GpModel:
    """A trained GP: standardized training data plus per-output factorizations."""

    x: np.ndarray                 # (n, d) standardized inputs
    y: np.ndarray                 # (n, m) standardized outputs
    kernels: list[KernelConfig]   # one per output
    in_lo: np.ndarray             # (d,) raw-input column minima
    in_span: np.ndarray           # (d,) raw-input column spans (>= tiny)
    out_mean: np.ndarray          # (m,)
    out_std: np.ndarray           # (m,)
    chols: list[np.ndarray] = field(default_factory=list)    # lower Cholesky of K
    alphas: list[np.ndarray] = field(default_factory=list)   # K^{-1} y per output
    lml: np.ndarray | None = None  # per-output log marginal likelihood

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def m(self) -> int:
        return self.y.shape[1]

    def raw_inputs(self) -> np.ndarray:
        return self.x * self.in_span + self.in_lo

    def standardize_inputs(self, pts: np.ndarray) -> np.ndarray:
        return (np.asarray(pts, dtype=float) - self.in_lo) / self.in_span


def _sq_dists(a: np.ndarray, b: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    """Sum over dimensions of squared scaled differences, accumulated per dim."""
    s = np.zeros((a.shape[0], b.shape[0]))
    for k in range(a.shape[1]):
        diff = a[:, k, None] - b[None, :, k]
        s += (diff / lengthscales[k]) ** 2
    return s


def kernel_matrix(kc: KernelConfig, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """SE covariance between point sets (nugget added only on the self-diagonal)."""
    if b is None:
        k = kc.signal_variance * np.exp(-0.5 * _sq_dists(a, a, kc.lengthscales))
        k[np.diag_indices_from(k)] += kc.nugget
        return k
    return kc.signal_variance * np.exp(-0.5 * _sq_dists(a, b, kc.lengthscales))


def _chol_with_escalation(kc: KernelConfig, x: np.ndarray):
    """Cholesky of K; on failure multiply the nugget by 10 up to the ceiling."""
    nugget = kc.nugget
    kse = kc.signal_variance * np.exp(-0.5 * _sq_dists(x, x, kc.lengthscales))
    while True:
        k = kse.copy()
        k[np.diag_indices_from(k)] += nugget
        try:
            low = cholesky(k, lower=True)
            return low, KernelConfig(kc.lengthscales, kc.signal_variance, nugget)
        except np.linalg.LinAlgError:
            if nugget >= NUGGET_CEIL:
                raise np.linalg.LinAlgError(
                    "kernel matrix factorization failed even at nugget ceiling "
                    f"{NUGGET_CEIL:g}"
                )
            nugget = min(nugget * 10.0, NUGGET_CEIL)


def log_marginal_likelihood(kc: KernelConfig, x: np.ndarray, y: np.ndarray) -> float:
    """Direct LML: -1/2 y^T K^-1 y - 1/2 log|K| - n/2 log(2 pi)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = x.shape[0]
    k = kernel_matrix(kc, x)
    low = cholesky(k, lower=True)
    alpha = cho_solve((low, True), y)
    return float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(low))) - 0.5 * n * np.log(2 * np.pi)
    )


def lml_and_grad(log_params: np.ndarray, x: np.ndarray, y: np.ndarray):
    """LML and its gradient w.r.t. log hyperparameters.

    log_params = [log l_1..log l_d, log signal_variance, log nugget].
    Gradient uses 1/2 tr((aa^T - K^-1) dK/dp) with dK recomputed per dimension
    to avoid storing n x n x d distance tensors.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, d = x.shape
    ls = np.exp(log_params[:d])
    sv = float(np.exp(log_params[d]))
    ng = float(np.exp(log_params[d + 1]))

    kse = sv * np.exp(-0.5 * _sq_dists(x, x, ls))
    k = kse.copy()
    k[np.diag_indices_from(k)] += ng
    try:
        low = cholesky(k, lower=True)
    except np.linalg.LinAlgError:
        return -np.inf, np.zeros(d + 2)
    alpha = cho_solve((low, True), y)
    lml = -0.5 * y @ alpha - np.sum(np.log(np.diag(low))) - 0.5 * n * np.log(2 * np.pi)

    kinv = cho_solve((low, True), np.eye(n))
    w = np.outer(alpha, alpha) - kinv  # d(LML)/dK = W/2

    grad = np.empty(d + 2)
    for j in range(d):
        diff = x[:, j, None] - x[None, :, j]
        dk = kse * (diff / ls[j]) ** 2  # dK/d(log l_j)
        grad[j] = 0.5 * np.sum(w * dk)
    grad[d] = 0.5 * np.sum(w * kse)             # dK/d(log sv) = K_se
    grad[d + 1] = 0.5 * ng * np.trace(w)        # dK/d(log nugget) = ng*I
    return float(lml), grad


def _standardize(inputs: np.ndarray, outputs: np.ndarray):
    in_lo = inputs.min(axis=0)
    in_span = inputs.max(axis=0) - in_lo
    in_span = np.where(in_span > 0, in_span, 1.0)
    x = (inputs - in_lo) / in_span
    out_mean = outputs.mean(axis=0)
    out_std = outputs.std(axis=0)
    constant = out_std == 0
    if np.any(constant):
        warnings.warn("constant output column(s); skipping output scaling there")
    out_std = np.where(constant, 1.0, out_std)
    y = (outputs - out_mean) / out_std
    return x, y, in_lo, in_span, out_mean, out_std


def fit(
    inputs: np.ndarray,
    outputs: np.ndarray,
    bounds: HyperBounds | None = None,
    restarts: int = 8,
    seed: int = 0,
) -> GpModel:
    """Fit one independent GP per output column by multi-start MLE."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]
    n, d = inputs.shape
    if outputs.shape[0] != n:
        raise ValueError("inputs and outputs row counts differ")
    if n < d + 1:
        raise ValueError(f"need at least d+1={d + 1} training points, got {n}")
    if bounds is None:
        bounds = HyperBounds()

    x, y, in_lo, in_span, out_mean, out_std = _standardize(inputs, outputs)

    # duplicate rows after standardization would make the kernel singular
    rounded = np.round(x, 12)
    if np.unique(rounded, axis=0).shape[0] < n:
        raise ValueError("duplicate training inputs")

    log_lb = np.log(
        np.concatenate(
            [
                np.full(d, bounds.lengthscale[0]),
                [bounds.signal_variance[0], bounds.nugget[0]],
            ]
        )
    )
    log_ub = np.log(
        np.concatenate(
            [
                np.full(d, bounds.lengthscale[1]),
                [bounds.signal_variance[1], bounds.nugget[1]],
            ]
        )
    )
    opt_bounds = list(zip(log_lb, log_ub))

    model = GpModel(
        x=x, y=y, kernels=[], in_lo=in_lo, in_span=in_span,
        out_mean=out_mean, out_std=out_std,
    )
    lmls = []
    for j in range(y.shape[1]):
        yj = y[:, j]
        starts = lhs_sample(
            restarts, list(zip(log_lb, log_ub)), seed=seed * 1000003 + j
        ).points
        # bias the first start toward moderate lengthscales on [0,1] inputs
        starts[0] = np.concatenate([np.zeros(d) + np.log(0.5), [0.0, np.log(1e-8)]])
        starts[0] = np.clip(starts[0], log_lb, log_ub)

        best = None
        for r in range(restarts):
            res = minimize(
                lambda p: tuple(-v for v in lml_and_grad(p, x, yj)),
                starts[r],
                jac=True,
                method="L-BFGS-B",
                bounds=opt_bounds,
                options={"ftol": 1e-8, "maxiter": 300},
            )
            if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
                best = res
        if best is None:
            raise RuntimeError(f"hyperparameter optimization failed for output {j}")
        p = best.x
        # the LML is often flat in the nugget on noise-free data; prefer the
        # interpolating model whenever the likelihood is indifferent
        p_clamp = p.copy()
        p_clamp[d + 1] = log_lb[d + 1]
        lml_best = -best.fun
        if lml_and_grad(p_clamp, x, yj)[0] >= lml_best - 1e-7 * (1 + abs(lml_best)):
            p = p_clamp
        kc = KernelConfig(np.exp(p[:d]), float(np.exp(p[d])), float(np.exp(p[d + 1])))
        low, kc = _chol_with_escalation(kc, x)
        model.kernels.append(kc)
        model.chols.append(low)
        model.alphas.append(cho_solve((low, True), yj))
        lmls.append(-best.fun)
    model.lml = np.array(lmls)
    return model


def build_model(inputs, outputs, kernels) -> GpModel:
    """Assemble a GpModel with fixed hyperparameters (no optimization)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]
    x, y, in_lo, in_span, out_mean, out_std = _standardize(inputs, outputs)
    model = GpModel(
        x=x, y=y, kernels=list(kernels), in_lo=in_lo, in_span=in_span,
        out_mean=out_mean, out_std=out_std,
    )
    for j, kc in enumerate(model.kernels):
        low, kc = _chol_with_escalation(kc, x)
        model.kernels[j] = kc
        model.chols.append(low)
        model.alphas.append(cho_solve((low, True), y[:, j]))
    return model


def predict(model: GpModel, points: np.ndarray):
    """Posterior mean and variance (de-standardized) at query points.

    Returns (mean, variance) arrays of shape (q, m). Variance excludes the
    measurement noise; tiny negative values from roundoff are clipped to 0.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != model.d:
        raise ValueError(
            f"dimension mismatch: model has d={model.d}, points have {points.shape[1]}"
        )
    if not np.all(np.isfinite(points)):
        raise ValueError("non-finite query point")
    q = model.standardize_inputs(points)
    mean = np.empty((q.shape[0], model.m))
    var = np.empty_like(mean)
    for j, kc in enumerate(model.kernels):
        kstar = kernel_matrix(kc, q, model.x)
        mu = kstar @ model.alphas[j]
        v = solve_triangular(model.chols[j], kstar.T, lower=True)
        s2 = kc.signal_variance - np.sum(v * v, axis=0)
        if np.any(s2 < -1e-8):
            raise FloatingPointError("predictive variance significantly negative")
        s2 = np.clip(s2, 0.0, None)
        mean[:, j] = mu * model.out_std[j] + model.out_mean[j]
        var[:, j] = s2 * model.out_std[j] ** 2
    return mean, var


def predict_one(model: GpModel, point: np.ndarray) -> Prediction:
    mean, var = predict(model, np.atleast_2d(point))
    return Prediction(mean=mean[0], variance=var[0])


def loo_cv(model: GpModel) -> list[dict]:
    """Exact leave-one-out metrics per output from the cached factorization.

    Uses mu_i = y_i - alpha_i / Kinv_ii (no refits). R^2 is NaN (with a
    warning) when the output column is constant.
    """
    if model.n < 3:
        raise ValueError("need at least 3 training points for LOO")
    metrics = []
    for j in range(model.m):
        kinv = cho_solve((model.chols[j], True), np.eye(model.n))
        diag = np.diag(kinv)
        resid_std = model.alphas[j] / diag  # y_i - mu_{-i} on standardized scale
        resid = resid_std * model.out_std[j]
        yraw = model.y[:, j] * model.out_std[j] + model.out_mean[j]
        sse = float(np.sum(resid**2))
        sst = float(np.sum((yraw - yraw.mean()) ** 2))
        if sst == 0.0:
            warnings.warn("constant outputs: LOO R^2 undefined")
            r2 = float("nan")
        else:
            r2 = 1.0 - sse / sst
        metrics.append(
            {
                "mae": float(np.mean(np.abs(resid))),
                "rmse": float(np.sqrt(np.mean(resid**2))),
                "coefficient_of_determination": r2,
            }
        )
    return metrics


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def save_model(model: GpModel, path) -> None:
    """Serialize to JSON; floats round-trip exactly via repr."""
    doc = {
        "format": "mbcal-gp-1",
        "x": _arr(model.x),
        "y": _arr(model.y),
        "in_lo": _arr(model.in_lo),
        "in_span": _arr(model.in_span),
        "out_mean": _arr(model.out_mean),
        "out_std": _arr(model.out_std),
        "kernels": [
            {
                "lengthscales": _arr(kc.lengthscales),
                "signal_variance": kc.signal_variance,
                "nugget": kc.nugget,
            }
            for kc in model.kernels
        ],
        "lml": _arr(model.lml) if model.lml is not None else None,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> GpModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "mbcal-gp-1":
        raise ValueError("unrecognized GP model file")
    model = GpModel(
        x=np.array(doc["x"], dtype=float),
        y=np.array(doc["y"], dtype=float),
        kernels=[
            KernelConfig(
                np.array(k["lengthscales"], dtype=float),
                k["signal_variance"],
                k["nugget"],
            )
            for k in doc["kernels"]
        ],
        in_lo=np.array(doc["in_lo"], dtype=float),
        in_span=np.array(doc["in_span"], dtype=float),
        out_mean=np.array(doc["out_mean"], dtype=float),
        out_std=np.array(doc["out_std"], dtype=float),
        lml=np.array(doc["lml"], dtype=float) if doc["lml"] is not None else None,
    )
    for j, kc in enumerate(model.kernels):
        k = kernel_matrix(kc, model.x)
        low = cholesky(k, lower=True)
        model.chols.append(low)
        model.alphas.append(cho_solve((low, True), model.y[:, j]))
    return model
