"""Numerical no-masking witness: minimize the masking defect over all maskers.

The masker is parameterized through an anti-Hermitian generator of the joint
unitary, so every iterate is exactly an isometry and plain descent in
parameter space stays on the manifold.  The optimizer minimizes a smooth
surrogate (sum of squared Frobenius deviations plus, in span mode, the
minimized cross-marginal energy); the reported defect of every restart is
re-evaluated with the masking-report metric.

A near-zero best defect certifies that the state set is maskable at the given
ancilla size; a stubbornly positive floor across dense restarts witnesses
impossibility.  Oracle floors for the bundled witness sets live in
``fixtures/floors.json`` together with their generation settings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .masklib import Masker, MaskingReport, masking_defect, orthonormal_span
from .qcore import DimProfile, PureState, entanglement_entropy, trace_distance

__all__ = [
    "OptimizerConfig",
    "OptimizationResult",
    "ProbeReport",
    "parameterize_isometry",
    "optimize_masker",
    "witness_no_masking",
    "probe_maskable_family",
    "central_difference_gradient",
    "five_point_gradient",
    "load_floors",
]

FD_STEP = 1e-6


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for the multi-start defect minimization."""

    d_b: int | None = None
    restarts: int = 8
    max_iters: int = 2000
    step_init: float = 0.5
    grad_tol: float = 1e-12
    seed: int = 0
    mode: str = "span"

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be > 0")
        if self.step_init <= 0:
            raise ValueError("step_init must be > 0")
        if self.mode not in ("set", "span"):
            raise ValueError(f"mode must be 'set' or 'span', got {self.mode!r}")
        if self.d_b is not None and self.d_b < 1:
            raise ValueError("d_b must be >= 1")

    def to_dict(self) -> dict:
        return {
            "dB": self.d_b,
            "restarts": self.restarts,
            "max_iters": self.max_iters,
            "step_init": self.step_init,
            "grad_tol": self.grad_tol,
            "seed": self.seed,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        known = {
            "dB": "d_b",
            "d_b": "d_b",
            "restarts": "restarts",
            "max_iters": "max_iters",
            "step_init": "step_init",
            "grad_tol": "grad_tol",
            "seed": "seed",
            "mode": "mode",
        }
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ValueError(f"unknown optimizer config key {key!r}")
            kwargs[known[key]] = value
        return cls(**kwargs)


@dataclass(frozen=True)
class OptimizationResult:
    """Best masker found plus the full multi-start record."""

    best_masker: Masker
    best_defect: float
    per_restart_defects: tuple[float, ...]
    iterations_used: tuple[int, ...]
    converged: bool
    best_report: MaskingReport = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "best_masker": self.best_masker.to_dict(),
            "best_defect": self.best_defect,
            "per_restart_defects": list(self.per_restart_defects),
            "iterations_used": list(self.iterations_used),
            "converged": self.converged,
            "best_report": self.best_report.to_dict(),
        }


@dataclass(frozen=True)
class ProbeReport:
    """Monte-Carlo scan of which random inputs a masker actually masks.

    The reference marginals are the averages over the masker's basis images
    (equal to their common marginal whenever one exists); an input counts as
    masked when both of its image marginals sit within ``tol`` of that
    reference and the image carries more than ``entropy_floor`` bits of
    entanglement.  The report is descriptive of the sample only.
    """

    samples: int
    seed: int
    tol: float
    entropy_floor: float
    d_a: int
    d_b: int
    masked_count: int
    masked_profiles: tuple[tuple[float, ...], ...]
    deviation_min: float
    deviation_median: float
    deviation_max: float

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "entropy_floor": self.entropy_floor,
            "dA": self.d_a,
            "dB": self.d_b,
            "masked_count": self.masked_count,
            "masked_profiles": [list(p) for p in self.masked_profiles],
            "deviation_min": self.deviation_min,
            "deviation_median": self.deviation_median,
            "deviation_max": self.deviation_max,
        }


# ---------------------------------------------------------------------------
# parameterization and gradients
# ---------------------------------------------------------------------------


def parameterize_isometry(params: Sequence[float], d_a: int, d_b: int) -> Masker:
    """Masker from ``(d_a*d_b)**2`` real anti-Hermitian generator coefficients.

    The generator is exponentiated to a joint unitary and the columns hitting
    ancilla state |0> are extracted, so the result is exactly an isometry for
    every parameter vector.
    """
    params = np.asarray(params, dtype=float)
    dim = d_a * d_b
    if params.shape != (dim * dim,):
        raise ValueError(f"expected {dim * dim} parameters, got {params.shape}")
    u = np.asarray(_kernels.unitary_from_params(params, dim))
    return Masker(np.ascontiguousarray(u[:, ::d_b]), (d_a, d_b))


def central_difference_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Two-point central finite-difference gradient."""
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for i in range(x.size):
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2.0 * step)
        e[i] = 0.0
    return g


def five_point_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Five-point-stencil gradient; used as a cross-check on the two-point one."""
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for i in range(x.size):
        e[i] = step
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12.0 * step)
        e[i] = 0.0
    return g


# ---------------------------------------------------------------------------
# optimization
# ---------------------------------------------------------------------------


def _descend(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    cfg: OptimizerConfig,
    callback: Callable[[int, float], None] | None = None,
) -> tuple[np.ndarray, int, bool]:
    """Gradient descent with Armijo backtracking; accepted steps never increase f."""
    x = np.array(x0, dtype=float)
    fx = f(x)
    step = cfg.step_init
    converged = False
    iters = 0
    prev_x: np.ndarray | None = None
    prev_g: np.ndarray | None = None
    for it in range(1, cfg.max_iters + 1):
        g = central_difference_gradient(f, x)
        gnorm2 = float(g @ g)
        if np.sqrt(gnorm2) <= cfg.grad_tol:
            converged = True
            break
        if prev_x is not None:
            # Barzilai-Borwein trial step; Armijo backtracking keeps it safe
            s = x - prev_x
            y = g - prev_g
            sy = float(s @ y)
            if sy > 0:
                step = min(float(s @ s) / sy, 1e3)
        prev_x, prev_g = x, g
        accepted = False
        while step >= 1e-18:
            candidate = x - step * g
            fc = f(candidate)
            if fc <= fx - 1e-4 * step * gnorm2:
                x, fx = candidate, fc
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        iters = it
        if callback is not None:
            callback(iters, fx)
    return x, iters, converged


def optimize_masker(
    states: Sequence[PureState],
    cfg: OptimizerConfig,
    callback: Callable[[int, int, float], None] | None = None,
) -> OptimizationResult:
    """Multi-start minimization of the masking defect over the isometry manifold.

    Each restart draws its own initial generator from an RNG keyed by
    ``(cfg.seed, restart)``, descends the smooth surrogate, and records the
    masking-report defect of its end point.  Restarts are independent, so the
    result does not depend on their execution order.
    """
    if not states:
        raise ValueError("need at least one state")
    d_a = states[0].dims.total
    if any(s.dims.total != d_a for s in states):
        raise ValueError("states must share one dimension")
    d_b = cfg.d_b if cfg.d_b is not None else d_a

    listed = np.stack([s.amps for s in states], axis=1)
    span = orthonormal_span(listed) if cfg.mode == "span" else None
    objective = _kernels.SpanObjective(d_a, d_b, listed, span)

    defects: list[float] = []
    iterations: list[int] = []
    end_points: list[np.ndarray] = []
    converged_flags: list[bool] = []
    for restart in range(cfg.restarts):
        rng = np.random.default_rng((cfg.seed, restart))
        x0 = rng.standard_normal(objective.n_params)
        cb = None if callback is None else (lambda it, val, r=restart: callback(r, it, val))
        x, iters, conv = _descend(objective.value, x0, cfg, cb)
        masker = parameterize_isometry(x, d_a, d_b)
        report = masking_defect(masker, states, mode=cfg.mode)
        defects.append(report.defect)
        iterations.append(iters)
        end_points.append(x)
        converged_flags.append(conv)

    best = int(np.argmin(defects))
    best_masker = parameterize_isometry(end_points[best], d_a, d_b)
    best_report = masking_defect(best_masker, states, mode=cfg.mode)
    return OptimizationResult(
        best_masker=best_masker,
        best_defect=float(defects[best]),
        per_restart_defects=tuple(defects),
        iterations_used=tuple(iterations),
        converged=converged_flags[best],
        best_report=best_report,
    )


def witness_no_masking(states: Sequence[PureState], cfg: OptimizerConfig) -> tuple[float, OptimizationResult]:
    """Best defect over all restarts plus the full optimization record.

    A floor estimate far above the masking tolerance witnesses that the state
    set cannot be masked at this ancilla size; a near-zero floor is not a
    witness.
    """
    result = optimize_masker(states, cfg)
    return result.best_defect, result


# ---------------------------------------------------------------------------
# maskable-family probing
# ---------------------------------------------------------------------------


def probe_maskable_family(
    masker: Masker,
    samples: int,
    seed: int,
    tol: float = 1e-4,
    entropy_floor: float = 1e-6,
) -> ProbeReport:
    """Sample random inputs and record which ones the masker provably masks."""
    if samples < 0:
        raise ValueError("samples must be >= 0")
    d_a, d_b = masker.dims
    ref_a = np.zeros((d_a, d_a), dtype=complex)
    ref_b = np.zeros((d_b, d_b), dtype=complex)
    for k in range(d_a):
        m = masker.iso[:, k].reshape(d_a, d_b)
        ref_a += m @ m.conj().T
        ref_b += m.T @ m.conj()
    ref_a /= d_a
    ref_b /= d_a

    rng = np.random.default_rng(seed)
    masked_profiles: list[tuple[float, ...]] = []
    deviations: list[float] = []
    for _ in range(samples):
        v = rng.standard_normal(d_a) + 1j * rng.standard_normal(d_a)
        v /= np.linalg.norm(v)
        m = (masker.iso @ v).reshape(d_a, d_b)
        dev_a = trace_distance(m @ m.conj().T, ref_a)
        dev_b = trace_distance(m.T @ m.conj(), ref_b)
        dev = max(dev_a, dev_b)
        deviations.append(dev)
        if dev < tol:
            image = PureState(masker.iso @ v, DimProfile(masker.dims), atol=1e-8)
            if entanglement_entropy(image, 0) > entropy_floor:
                masked_profiles.append(tuple(float(a) for a in np.abs(v)))
    devs = np.asarray(deviations) if deviations else np.asarray([np.nan])
    return ProbeReport(
        samples=samples,
        seed=seed,
        tol=tol,
        entropy_floor=entropy_floor,
        d_a=d_a,
        d_b=d_b,
        masked_count=len(masked_profiles),
        masked_profiles=tuple(masked_profiles),
        deviation_min=float(np.min(devs)),
        deviation_median=float(np.median(devs)),
        deviation_max=float(np.max(devs)),
    )


# ---------------------------------------------------------------------------
# oracle floor fixtures
# ---------------------------------------------------------------------------


def load_floors() -> dict:
    """Bundled oracle floors for the witness sets, keyed by set name and d_b."""
    with resources.files("qmask").joinpath("fixtures/floors.json").open(encoding="utf-8") as fh:
        return json.load(fh)
