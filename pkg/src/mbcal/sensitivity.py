"""Parameter screening (one-at-a-time sweeps) and Sobol sensitivity indices."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .sampler import uniform_grid

__all__ = ["ScreeningResult", "SobolResult", "oat_screen", "sobol_indices"]


@dataclass(frozen=True)
class ScreeningResult:
    names: tuple[str, ...]
    variances: np.ndarray      # (d, m) population variance per parameter/output
    threshold: float
    selected: tuple[str, ...]  # names whose max-over-outputs variance > threshold

    def to_csv(self, path, output_names=None) -> None:
        m = self.variances.shape[1]
        outs = output_names or [f"out{j + 1}" for j in range(m)]
        with open(path, "w") as fh:
            fh.write("parameter,output,variance,selected\n")
            for i, name in enumerate(self.names):
                sel = name in self.selected
                for j in range(m):
                    fh.write(f"{name},{outs[j]},{self.variances[i, j]:.17g},{int(sel)}\n")


@dataclass(frozen=True)
class SobolResult:
    first_order: np.ndarray  # (d, m)
    total: np.ndarray        # (d, m)
    n_base: int
    seed: int

    def to_csv(self, path, names=None, output_names=None) -> None:
        d, m = self.first_order.shape
        nms = names or [f"p{i + 1}" for i in range(d)]
        outs = output_names or [f"out{j + 1}" for j in range(m)]
        with open(path, "w") as fh:
            fh.write("parameter,output,first_order,total\n")
            for i in range(d):
                for j in range(m):
                    fh.write(
                        f"{nms[i]},{outs[j]},{self.first_order[i, j]:.17g},"
                        f"{self.total[i, j]:.17g}\n"
                    )


def oat_screen(runner, x_fixed, ranges, n: int, threshold: float, names=None) -> ScreeningResult:
    """Sweep each parameter over a uniform grid with the others held at 1.0.

    runner(x_fixed, theta) -> m outputs. Records the population (1/n)
    variance of every output per parameter; a parameter is selected when its
    max-over-outputs variance exceeds the threshold.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    d = len(ranges)
    names = tuple(names) if names else tuple(f"p{i + 1}" for i in range(d))
    variances = None
    for i in range(d):
        grid = uniform_grid(n, ranges[i])
        rows = []
        for g in grid:
            theta = np.ones(d)
            theta[i] = g
            try:
                rows.append(np.atleast_1d(np.asarray(runner(x_fixed, theta), float)))
            except Exception as exc:
                raise RuntimeError(f"runner failed for parameter {i} ({names[i]})") from exc
        out = np.array(rows)  # (n, m)
        if variances is None:
            variances = np.empty((d, out.shape[1]))
        variances[i] = out.var(axis=0)  # population variance
    selected = tuple(
        names[i] for i in range(d) if variances[i].max() > threshold
    )
    return ScreeningResult(names=names, variances=variances, threshold=float(threshold),
                           selected=selected)


def sobol_indices(runner, ranges, n_base: int, seed: int) -> SobolResult:
    """First-order (Saltelli 2010) and total (Jansen) Sobol indices.

    runner(theta) -> m outputs, vectorized over an (n, d) matrix or applied
    row-wise otherwise. Cost: n_base * (d + 2) evaluations.
    """
    if n_base < 64 or (n_base & (n_base - 1)) != 0:
        raise ValueError("n_base must be a power of two >= 64")
    d = len(ranges)
    rng = np.random.default_rng(seed)
    lo = np.array([r[0] for r in ranges], dtype=float)
    hi = np.array([r[1] for r in ranges], dtype=float)
    a = lo + (hi - lo) * rng.random((n_base, d))
    b = lo + (hi - lo) * rng.random((n_base, d))

    def run(mat):
        try:
            out = np.asarray(runner(mat), dtype=float)
            if out.shape[0] == mat.shape[0]:
                return np.atleast_2d(out.T).T if out.ndim == 1 else out
        except Exception:
            pass
        return np.array([np.atleast_1d(runner(row)) for row in mat], dtype=float)

    fa = run(a)   # (n, m)
    fb = run(b)
    m = fa.shape[1]
    allf = np.concatenate([fa, fb])
    var = allf.var(axis=0)  # (m,)

    first = np.zeros((d, m))
    total = np.zeros((d, m))
    if np.all(var == 0):
        warnings.warn("zero total variance: all Sobol indices set to 0")
        return SobolResult(first, total, n_base, seed)

    safe_var = np.where(var > 0, var, 1.0)
    for i in range(d):
        abi = a.copy()
        abi[:, i] = b[:, i]
        fabi = run(abi)
        first[i] = np.mean(fb * (fabi - fa), axis=0) / safe_var
        total[i] = np.mean((fa - fabi) ** 2, axis=0) / (2.0 * safe_var)
    first[:, var == 0] = 0.0
    total[:, var == 0] = 0.0
    return SobolResult(first_order=first, total=total, n_base=n_base, seed=seed)
