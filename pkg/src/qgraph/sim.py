"""Monte Carlo simulation of the vertex-noise evolution, plus the
stationary-regime diagnostics built on the same mode expansion.

In the eigenbasis the solution coefficients follow scalar OU recursions
driven by correlated increments: over a step of size dt,
X(t + dt) = e^(-lambda dt) X(t) + xi with xi centered Gaussian whose
covariance is the entrywise product of the channel Gram matrix
(v_k . v_l) and the exponential time integrals; this is the exact
transition law, not an Euler scheme, so the step count only controls
the output grid.  The law holds for any family of eigenfunctions,
orthonormal or not — each tested coefficient is an exact stochastic
convolution — which matters because the analytic star family overlaps
on shared edges.  Sampling is embarrassingly parallel across paths and
deterministic per (seed, sample index) regardless of thread count.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import tolerances as tol
from ._kernels import active_backend, ou_paths, warmup
from .control import _eta
from .errors import (
    CovarianceNotPSDError,
    SpectralGapAmbiguousError,
    SpectrumTooCoarseError,
)
from .noise import NoiseModel
from .spectral import EigenSystem

__all__ = [
    "TrajectoryEnsemble",
    "simulate",
    "CovarianceReport",
    "verify_covariance",
    "ProfileEntry",
    "regularity_profile",
    "InvariantMeasureReport",
    "invariant_measure_check",
    "ensemble_to_csv",
    "summary_to_csv",
    "profile_to_csv",
]


def _resolve_workers(workers: int | None, num_samples: int) -> int:
    if workers is None:
        env = os.environ.get("QGRAPH_THREADS", "").strip()
        if env:
            workers = int(env)
        else:
            workers = min(8, os.cpu_count() or 1)
    return max(1, min(int(workers), num_samples))


def _innovation_cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with an escalating diagonal jitter.

    The innovation covariance is PSD by construction but often rank
    deficient (quiet modes), so plain Cholesky can fail on roundoff; a
    relative jitter up to a hard stop keeps the factor honest, and
    anything needing more than that is reported as a genuine failure.
    """
    if not np.any(cov):
        return np.zeros_like(cov)
    n = len(cov)
    scale = float(np.trace(cov)) / n
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    jitter = tol.JITTER_START
    while jitter <= tol.JITTER_STOP:
        try:
            return np.linalg.cholesky(cov + (jitter * scale) * np.eye(n))
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise CovarianceNotPSDError(
        f"innovation covariance not factorizable even with jitter {tol.JITTER_STOP}"
    )


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Sampled mode-coefficient paths and the data needed to read them.

    coeffs has shape (num_samples, num_steps + 1, num_modes); channels
    holds the noise-weighted vertex traces v_k row-wise, and vertex
    values of the state are coeffs @ vertex_traces.  Sample s was drawn
    from the RNG stream sample_seed(s), a pure function of the master
    seed and s — never of the worker layout.
    """

    times: np.ndarray
    coeffs: np.ndarray
    lambdas: np.ndarray
    vertex_traces: np.ndarray
    channels: np.ndarray
    vertices: tuple[str, ...]
    z0: np.ndarray
    seed: int
    backend: str
    workers: int

    @property
    def num_samples(self) -> int:
        return self.coeffs.shape[0]

    @property
    def num_modes(self) -> int:
        return self.coeffs.shape[2]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def sample_seed(self, s: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.seed, spawn_key=(s,))

    def vertex_paths(self) -> np.ndarray:
        """State values at the vertices, shape (samples, steps + 1, n)."""
        return self.coeffs @ self.vertex_traces

    def analytic_mean(self, t: float) -> np.ndarray:
        return np.exp(-self.lambdas * t) * self.z0

    def analytic_covariance(self, t: float) -> np.ndarray:
        gram = self.channels @ self.channels.T
        return gram * _eta(self.lambdas[:, None] + self.lambdas[None, :], t)


def simulate(
    eig: EigenSystem,
    noise: NoiseModel,
    z0_coeffs,
    horizon: float,
    num_steps: int,
    num_samples: int,
    seed: int = 42,
    num_modes: int | None = None,
    workers: int | None = None,
    backend: str | None = None,
) -> TrajectoryEnsemble:
    """Draw sample paths of the first num_modes coefficients.

    Reproducibility contract: results are a pure function of
    (eigensystem, noise, z0, horizon, num_steps, num_samples, seed) —
    each sample owns an RNG spawned from the seed by its index, so the
    worker count never changes the numbers, only the wall time.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if num_steps < 1:
        raise ValueError("num_steps must be positive")
    if num_samples < 1:
        raise ValueError("num_samples must be positive")
    k_total = eig.num_modes if num_modes is None else int(num_modes)
    if not 1 <= k_total <= eig.num_modes:
        raise ValueError(f"num_modes must lie in [1, {eig.num_modes}]")

    z0 = np.zeros(k_total)
    z0_in = np.asarray(z0_coeffs, dtype=float).ravel()
    if len(z0_in) > k_total:
        raise ValueError("z0 has more coefficients than modes in play")
    z0[: len(z0_in)] = z0_in

    lambdas = np.asarray(eig.lambdas[:k_total], dtype=float)
    traces = np.ascontiguousarray(eig.vertex_traces[:k_total])
    channels = traces @ noise.q_sqrt

    dt = horizon / num_steps
    decay = np.exp(-lambdas * dt)
    cov = (channels @ channels.T) * _eta(lambdas[:, None] + lambdas[None, :], dt)
    cov = 0.5 * (cov + cov.T)
    chol = _innovation_cholesky(cov)

    which = active_backend() if backend is None else backend
    warmup(which)

    coeffs = np.empty((num_samples, num_steps + 1, k_total))
    chol_t = np.ascontiguousarray(chol.T)

    def run_slice(lo: int, hi: int) -> None:
        for s in range(lo, hi):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(s,)))
            innovations = rng.standard_normal((num_steps, k_total)) @ chol_t
            ou_paths(coeffs[s], decay, innovations, z0, backend=which)

    nw = _resolve_workers(workers, num_samples)
    if nw == 1:
        run_slice(0, num_samples)
    else:
        bounds = np.linspace(0, num_samples, nw + 1).astype(int)
        with ThreadPoolExecutor(max_workers=nw) as pool:
            futures = [
                pool.submit(run_slice, int(bounds[i]), int(bounds[i + 1])) for i in range(nw)
            ]
            for fut in futures:
                fut.result()

    return TrajectoryEnsemble(
        times=np.linspace(0.0, horizon, num_steps + 1),
        coeffs=coeffs,
        lambdas=lambdas,
        vertex_traces=traces,
        channels=channels,
        vertices=tuple(eig.graph.vertices),
        z0=z0,
        seed=int(seed),
        backend=which,
        workers=nw,
    )


@dataclass(frozen=True)
class CovarianceReport:
    """Empirical-vs-analytic comparison across the whole time grid.

    Deviations are standardized by the large-sample standard error of a
    Gaussian sample covariance entry, sqrt((s_kk s_ll + s_kl^2)/S);
    entries with zero standard error (channels the noise never feeds)
    must come out identically zero and are tracked separately.
    max_cov_z_per_time allows pinpointing a failing grid time.
    """

    times: np.ndarray
    num_samples: int
    max_cov_z: float
    max_cov_z_per_time: np.ndarray
    frac_within_3se: float
    max_mean_z: float
    zero_entries_ok: bool
    empirical_final: np.ndarray
    analytic_final: np.ndarray

    def passed(self, z_max: float = 5.0) -> bool:
        return bool(self.max_cov_z <= z_max and self.max_mean_z <= z_max and self.zero_entries_ok)

    def to_json(self) -> dict:
        return {
            "num_samples": int(self.num_samples),
            "max_cov_z": float(self.max_cov_z),
            "max_cov_z_per_time": [float(x) for x in self.max_cov_z_per_time],
            "frac_within_3se": float(self.frac_within_3se),
            "max_mean_z": float(self.max_mean_z),
            "zero_entries_ok": bool(self.zero_entries_ok),
        }


def verify_covariance(ens: TrajectoryEnsemble, t_index: int | None = None) -> CovarianceReport:
    """Check the sampled ensemble against the exact Gaussian law.

    Covariances and means of the mode coefficients are compared at every
    grid time (or a single one when t_index is given) and the worst
    standardized deviation is reported.
    """
    if t_index is None:
        indices = list(range(len(ens.times)))
    else:
        indices = [range(len(ens.times))[t_index]]
    s = ens.num_samples

    max_z_per_time = []
    max_mean_z = 0.0
    zero_ok = True
    within3 = 0
    live_total = 0
    emp_final = ana_final = None

    for idx in indices:
        t = float(ens.times[idx])
        centered = ens.coeffs[:, idx, :] - ens.analytic_mean(t)
        emp = (centered.T @ centered) / s
        ana = ens.analytic_covariance(t)
        se = np.sqrt((np.outer(np.diag(ana), np.diag(ana)) + ana**2) / s)

        live = se > 0
        if np.any(live):
            z = np.abs(emp[live] - ana[live]) / se[live]
            max_z_per_time.append(float(z.max()))
            within3 += int(np.count_nonzero(z <= 3.0))
            live_total += z.size
        else:
            max_z_per_time.append(0.0)
        zero_ok = zero_ok and bool(np.all(np.abs(emp[~live]) <= 1e-12))

        var = np.diag(ana)
        dlive = var > 0
        means = centered.mean(axis=0)
        if np.any(dlive):
            mz = float((np.abs(means[dlive]) / np.sqrt(var[dlive] / s)).max())
            max_mean_z = max(max_mean_z, mz)
        zero_ok = zero_ok and bool(np.all(np.abs(means[~dlive]) <= 1e-12))
        emp_final, ana_final = emp, ana

    return CovarianceReport(
        times=ens.times[indices],
        num_samples=s,
        max_cov_z=float(max(max_z_per_time)),
        max_cov_z_per_time=np.asarray(max_z_per_time),
        frac_within_3se=float(within3 / live_total) if live_total else 1.0,
        max_mean_z=max_mean_z,
        zero_entries_ok=zero_ok,
        empirical_final=emp_final,
        analytic_final=ana_final,
    )


@dataclass(frozen=True)
class ProfileEntry:
    """Partial sums of the weighted variance series at one smoothness level.

    increments[k] = (1 + lambda_k)^(2 alpha) Var X_k(T); the tail slope
    is a log-log fit over the second half of the modes, and the series
    is called convergent when the increments decay faster than 1/k.
    """

    alpha: float
    increments: np.ndarray
    partial_sums: np.ndarray
    tail_slope: float
    convergent: bool

    def to_json(self) -> dict:
        return {
            "alpha": float(self.alpha),
            "partial_sums": [float(x) for x in self.partial_sums],
            "tail_slope": float(self.tail_slope),
            "convergent": bool(self.convergent),
        }


def regularity_profile(
    eig: EigenSystem,
    noise: NoiseModel,
    horizon: float,
    alphas,
    num_modes: int | None = None,
) -> list[ProfileEntry]:
    """Variance partial sums in a scale of smoothness weights.

    The time-T variance of mode k is |v_k|^2 eta(2 lambda_k, T); weights
    (1 + lambda_k)^(2 alpha) probe in which smoothness spaces the state
    lives.  Larger alpha steepens the increments by lambda^(2 alpha),
    so on a fixed graph the series flips from summable to divergent at
    a finite alpha, which the tail slope estimates.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    k_total = eig.num_modes if num_modes is None else int(num_modes)
    if not 2 <= k_total <= eig.num_modes:
        raise ValueError(f"num_modes must lie in [2, {eig.num_modes}]")
    lam = np.asarray(eig.lambdas[:k_total], dtype=float)
    channels = eig.vertex_traces[:k_total] @ noise.q_sqrt
    var = np.sum(channels**2, axis=1) * _eta(2.0 * lam, horizon)

    out = []
    for alpha in alphas:
        inc = (1.0 + lam) ** (2.0 * float(alpha)) * var
        sums = np.cumsum(inc)
        ks = np.arange(max(1, k_total // 2), k_total)
        pos = inc[ks] > 0
        if np.count_nonzero(pos) >= 2:
            slope = float(np.polyfit(np.log(ks[pos]), np.log(inc[ks][pos]), 1)[0])
        else:
            slope = -np.inf
        out.append(
            ProfileEntry(
                alpha=float(alpha),
                increments=inc,
                partial_sums=sums,
                tail_slope=slope,
                convergent=bool(slope < -1.0),
            )
        )
    return out


@dataclass(frozen=True)
class InvariantMeasureReport:
    """Existence of a stationary law, with the reasoning made explicit.

    A positive bottom eigenvalue gives exponential stability outright.
    Without potential the constant mode is exactly neutral, and
    everything hinges on whether the noise feeds it: the kernel term of
    the variance sum grows linearly in the horizon when it does.
    hs_partial_sums[i][k] is the cumulative variance sum over modes
    0..k at horizons[i].
    """

    exists: bool
    rule: str
    lambda0: float
    kernel_residual: float
    horizons: tuple[float, ...]
    hs_partial_sums: tuple[tuple[float, ...], ...]
    kernel_terms: tuple[float, ...]
    num_modes: int

    @property
    def hs_totals(self) -> tuple[float, ...]:
        return tuple(sums[-1] for sums in self.hs_partial_sums)

    def to_json(self) -> dict:
        return {
            "exists": "Yes" if self.exists else "No",
            "rule": self.rule,
            "lambda0": float(self.lambda0),
            "kernel_residual": float(self.kernel_residual),
            "horizons": [float(t) for t in self.horizons],
            "hs_partial_sums": [[float(x) for x in sums] for sums in self.hs_partial_sums],
            "kernel_terms": [float(x) for x in self.kernel_terms],
            "num_modes": int(self.num_modes),
        }


def invariant_measure_check(
    eig: EigenSystem,
    noise: NoiseModel,
    horizons=(1.0, 2.0, 4.0),
    num_modes: int | None = None,
) -> InvariantMeasureReport:
    """Decide existence of an invariant measure from the resolved spectrum.

    lambda_0 above the gap tolerance settles it.  Otherwise the verdict
    is only attempted for zero potential, where lambda_0 = 0 is exact
    rather than a discretization accident; with potential present but no
    resolved gap the honest answer is an error, not a guess.
    """
    k_total = eig.num_modes if num_modes is None else int(num_modes)
    if not 1 <= k_total <= eig.num_modes:
        raise ValueError(f"num_modes must lie in [1, {eig.num_modes}]")
    if not bool(eig.trusted[0]):
        raise SpectrumTooCoarseError("bottom eigenvalue is outside the trusted range")

    lam = np.asarray(eig.lambdas[:k_total], dtype=float)
    channels = eig.vertex_traces[:k_total] @ noise.q_sqrt
    weights = np.sum(channels**2, axis=1)

    horizons = tuple(float(t) for t in horizons)
    partial = []
    kernel_terms = []
    for t in horizons:
        terms = weights * _eta(2.0 * lam, t)
        partial.append(tuple(float(x) for x in np.cumsum(terms)))
        kernel_terms.append(float(terms[0]))

    lam0 = float(lam[0])
    kernel_residual = float(np.sqrt(weights[0]))

    if lam0 > tol.SPECTRAL_GAP:
        exists, rule = True, "exponential-stability"
    else:
        p_zero = all(
            e.potential.is_constant and e.potential.constant_value == 0.0
            for e in eig.graph.edges
        )
        if not p_zero:
            raise SpectralGapAmbiguousError(
                f"potential present but bottom eigenvalue {lam0} is below the "
                f"gap tolerance; refine the mesh to resolve the sign"
            )
        if kernel_residual <= tol.TRACE_ZERO:
            exists, rule = True, "noise-invisible-to-kernel"
        else:
            exists, rule = False, "kernel-mode-noise"

    return InvariantMeasureReport(
        exists=exists,
        rule=rule,
        lambda0=lam0,
        kernel_residual=kernel_residual,
        horizons=horizons,
        hs_partial_sums=tuple(partial),
        kernel_terms=tuple(kernel_terms),
        num_modes=k_total,
    )


def ensemble_to_csv(ens: TrajectoryEnsemble, path, max_samples: int | None = None) -> None:
    """Long-format mode coefficients: one row per (sample, time, mode)."""
    count = ens.num_samples if max_samples is None else min(max_samples, ens.num_samples)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "time", "mode", "value"])
        for s in range(count):
            for i, t in enumerate(ens.times):
                for k in range(ens.num_modes):
                    writer.writerow([s, repr(float(t)), k, repr(float(ens.coeffs[s, i, k]))])


def summary_to_csv(ens: TrajectoryEnsemble, path) -> None:
    """Ensemble statistics: one row per (time, mode) with mean and variance."""
    mean = ens.coeffs.mean(axis=0)
    var = ens.coeffs.var(axis=0, ddof=1) if ens.num_samples > 1 else np.zeros_like(mean)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "mode", "mean", "variance"])
        for i, t in enumerate(ens.times):
            for k in range(ens.num_modes):
                writer.writerow(
                    [repr(float(t)), k, repr(float(mean[i, k])), repr(float(var[i, k]))]
                )


def profile_to_csv(entries: list[ProfileEntry], path) -> None:
    """Regularity table: one row per (alpha, K') partial sum."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "K'", "partial_sum", "slope"])
        for entry in entries:
            for k, val in enumerate(entry.partial_sums, start=1):
                writer.writerow(
                    [repr(entry.alpha), k, repr(float(val)), repr(entry.tail_slope)]
                )
