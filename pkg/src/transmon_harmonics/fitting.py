"""Recovering Hamiltonian parameters from measured transition frequencies.

The inverse problem is posed as a root equation f(x) = f* on selected
transition frequencies.  Square systems are solved by a globally convergent
Newton method with cubic backtracking; overdetermined systems by BFGS on a
weighted L1 cost.  Jacobians come from central finite differences by default,
with an optional analytic mode that contracts eigenvectors of the full
product-basis Hamiltonian with its parameter derivatives.

All frequencies and energies are E/h in GHz.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg
import scipy.optimize
from numpy import ndarray
from scipy.interpolate import CubicSpline

from .channels import (
    Mesoscopic,
    ParamAB,
    ParamABCD,
    ejm_from_model,
    fourier_coeff,
    thickness_density,
    transparency_of_thickness,
)
from .spectrum import (
    HarmonicsSet,
    JointSystemConfig,
    ResonatorConfig,
    TransmonConfig,
    build_product_hamiltonian,
    build_transmon_matrix,
    diagonalize_transmon,
    label_dressed_states,
    predict_spectrum,
)

__all__ = [
    "FD_ABSOLUTE_STEP",
    "FD_RELATIVE_STEP",
    "L1_SMOOTHING",
    "MODEL_KINDS",
    "NEWTON_TOLERANCE",
    "OBSERVABLES",
    "SWEEP_OBSERVABLES",
    "LabelingAmbiguityError",
    "ParameterDomainError",
    "SolverError",
    "Target",
    "ModelSpec",
    "FitProblem",
    "FitResult",
    "EjSweepTable",
    "SweepPredictions",
    "model_config",
    "residuals",
    "jacobian",
    "solve_newton_lb",
    "solve_bfgs",
    "solve_fit",
    "solution_config",
    "standard_seed",
    "harmonic_seed",
    "ej_sweep_table",
    "ej_sweep_fit",
]

MODEL_KINDS = ("standard", "truncated", "param_ab", "param_abcd", "mesoscopic")

OBSERVABLES = ("f0j", "fres", "dispersion")

# Convergence threshold on max |residual| for square solves, one order below
# typical measurement imprecision so solver error never masks model error.
NEWTON_TOLERANCE = 1e-6

# Kink rounding (GHz) applied to |r| inside gradient evaluation only; the
# reported cost is the true L1 sum.
L1_SMOOTHING = 1e-9

# Central-difference step: relative, with an absolute floor in GHz.  The
# floor keeps eigensolver noise (~1e-12 GHz) from dominating differences
# across near-zero parameters; curvature error at this step is ~1e-12.
FD_RELATIVE_STEP = 1e-6
FD_ABSOLUTE_STEP = 1e-6


class ParameterDomainError(ValueError):
    """A trial parameter vector leaves the physical domain of the model."""


class LabelingAmbiguityError(RuntimeError):
    """A dressed state entering the residuals has no majority bare character."""


class SolverError(RuntimeError):
    """The solver cannot continue (singular Jacobian or stalled line search)."""


@dataclass(frozen=True)
class Target:
    """One measured frequency to match, in GHz.

    ``observable`` selects the prediction: "f0j" is the 0 -> j transmon
    transition, "fres" the resonator frequency with the transmon in state j,
    "dispersion" the offset-charge dispersion |f_0j(0) - f_0j(1/2)|.  The
    weight enters only the L1 cost of overdetermined solves.
    """

    observable: str
    level: int
    value: float
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.observable not in OBSERVABLES:
            raise ValueError(
                f"observable must be one of {OBSERVABLES}, got {self.observable!r}"
            )
        lowest = 0 if self.observable == "fres" else 1
        if self.level < lowest:
            raise ValueError(
                f"{self.observable} targets need level >= {lowest}, got {self.level}"
            )
        if not math.isfinite(self.value):
            raise ValueError("target value must be finite")
        if not self.weight >= 0:
            raise ValueError(f"weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class ModelSpec:
    """Hamiltonian family being fitted and the parameters held fixed.

    Parameter vectors by kind:

    ============  ====================================================
    standard      (EC, EJ1, omega, G)
    truncated     (EC, EJ1 .. EJ<n_harmonics>, omega, G)
    param_ab      (EC, EJ1, a, b, omega, G)
    param_abcd    (EC, EJ1, a, b, c, d, omega, G)
    mesoscopic    (EC, EJ1, dbar, sigma, omega, G)
    ============  ====================================================

    Entries of ``fixed`` pin a parameter by name (a designed EC, or a
    scanned high-order EJm) and drop it from the fitted vector.  Parametric
    kinds generate harmonics up to ``harmonic_depth``; for the truncated
    kind the depth is ``n_harmonics`` itself.

    ``tail_ratios`` (standard and truncated kinds only) appends harmonics
    above ``n_harmonics`` whose energies stay proportional to EJ1: entry i
    fixes EJ(n_harmonics+1+i)/EJ1.  They are part of the model, not of the
    fitted vector.
    """

    kind: str
    n_harmonics: int = 1
    fixed: Mapping[str, float] = field(default_factory=dict)
    harmonic_depth: int = 10
    ncut: int = 14
    truncated_dim: int = 12
    n_fock: int = 9
    tail_ratios: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.kind == "standard" and self.n_harmonics != 1:
            raise ValueError("the standard model has exactly one harmonic")
        if not 1 <= self.n_harmonics <= 2 * self.ncut:
            raise ValueError(f"n_harmonics must be in [1, {2 * self.ncut}]")
        if not 1 <= self.harmonic_depth <= 2 * self.ncut:
            raise ValueError(f"harmonic_depth must be in [1, {2 * self.ncut}]")
        object.__setattr__(self, "tail_ratios", tuple(self.tail_ratios))
        if self.tail_ratios:
            if self.kind not in ("standard", "truncated"):
                raise ValueError("tail_ratios apply to explicit-harmonic kinds only")
            if not all(math.isfinite(v) for v in self.tail_ratios):
                raise ValueError("tail ratios must be finite")
            if self.n_harmonics + len(self.tail_ratios) > 2 * self.ncut:
                raise ValueError(
                    f"harmonics incl. tail must number <= {2 * self.ncut}"
                )
        object.__setattr__(self, "fixed", dict(self.fixed))
        names = self.parameter_names()
        unknown = sorted(set(self.fixed) - set(names))
        if unknown:
            raise ValueError(f"fixed parameters {unknown} not in {names}")
        if not all(math.isfinite(v) for v in self.fixed.values()):
            raise ValueError("fixed parameter values must be finite")

    def parameter_names(self) -> tuple[str, ...]:
        """Canonical full parameter list for this kind."""
        if self.kind in ("standard", "truncated"):
            ejs = tuple(f"EJ{m}" for m in range(1, self.n_harmonics + 1))
            return ("EC", *ejs, "omega", "G")
        shape = {
            "param_ab": ("a", "b"),
            "param_abcd": ("a", "b", "c", "d"),
            "mesoscopic": ("dbar", "sigma"),
        }[self.kind]
        return ("EC", "EJ1", *shape, "omega", "G")

    def free_names(self) -> tuple[str, ...]:
        """Fitted parameters: the canonical list minus the pinned ones."""
        return tuple(n for n in self.parameter_names() if n not in self.fixed)


_QUAD_NODES, _QUAD_WEIGHTS = np.polynomial.legendre.leggauss(80)


@lru_cache(maxsize=4096)
def _mesoscopic_ratios(dbar: float, sigma: float, depth: int) -> tuple[float, ...]:
    # The barrier integrals dominate fit time; iterates that perturb only
    # (EC, EJ1, omega, G) hit this cache.  Mesoscopic() validates the domain.
    Mesoscopic(dbar, sigma)
    u = 0.5 * (_QUAD_NODES + 1.0)
    du = 0.5 * _QUAD_WEIGHTS
    # T -> 1 as d -> 0 puts a d^2*log(d) endpoint in the integrand; d = dbar*u^2
    # restores spectral convergence there.  Fixed nodes keep the values smooth
    # in (dbar, sigma), which finite differences of the fit rely on.
    panels = [
        (dbar * u * u, 2.0 * dbar * u * du),
        (dbar + 4.0 * sigma * u, 4.0 * sigma * du),
        (dbar + 4.0 * sigma + 8.0 * sigma * u, 8.0 * sigma * du),
    ]
    d = np.concatenate([p[0] for p in panels])
    w = np.concatenate([p[1] for p in panels])
    w = w * np.array([thickness_density(di, dbar, sigma) for di in d])
    ts = [transparency_of_thickness(di) for di in d]
    ej = np.array(
        [np.dot(w, [fourier_coeff(m, t) for t in ts]) / m for m in range(1, depth + 1)]
    )
    if not np.isfinite(ej).all() or ej[0] <= 0.0:
        raise ParameterDomainError(
            f"barrier model degenerate at dbar={dbar}, sigma={sigma}"
        )
    return tuple(ej[1:] / ej[0])


def _harmonics(spec: ModelSpec, p: Mapping[str, float]) -> HarmonicsSet:
    if spec.kind in ("standard", "truncated"):
        leading = tuple(p[f"EJ{m}"] for m in range(1, spec.n_harmonics + 1))
        tail = tuple(r * p["EJ1"] for r in spec.tail_ratios)
        return HarmonicsSet(leading + tail)
    if spec.kind == "param_ab":
        return ejm_from_model(ParamAB(p["a"], p["b"]), spec.harmonic_depth, ej1=p["EJ1"])
    if spec.kind == "param_abcd":
        model = ParamABCD(p["a"], p["b"], p["c"], p["d"])
        return ejm_from_model(model, spec.harmonic_depth, ej1=p["EJ1"])
    ratios = _mesoscopic_ratios(p["dbar"], p["sigma"], spec.harmonic_depth)
    return HarmonicsSet.from_ratios(p["EJ1"], ratios)


def model_config(spec: ModelSpec, params: Mapping[str, float]) -> JointSystemConfig:
    """Joint-system configuration for a full parameter assignment.

    Raises
    ------
    ParameterDomainError
        If any value violates its physical domain (EC <= 0, omega <= 0,
        sigma <= 0, a < 1 for the two-exponent family, ...).
    """
    missing = sorted(set(spec.parameter_names()) - set(params))
    if missing:
        raise ValueError(f"missing parameters {missing}")
    try:
        transmon = TransmonConfig(
            EC=params["EC"], harmonics=_harmonics(spec, params), ncut=spec.ncut
        )
        resonator = ResonatorConfig(
            omega=params["omega"], G=params["G"], n_fock=spec.n_fock
        )
    except ValueError as exc:
        raise ParameterDomainError(str(exc)) from exc
    return JointSystemConfig(transmon, resonator, spec.truncated_dim)


@dataclass(frozen=True)
class FitProblem:
    """Targets, model family, and starting point of one inverse problem."""

    model: ModelSpec
    targets: tuple[Target, ...]
    initial: Mapping[str, float]

    def __post_init__(self) -> None:
        targets = tuple(self.targets)
        if not targets:
            raise ValueError("at least one target is required")
        free = self.model.free_names()
        if not free:
            raise ValueError("every parameter is pinned; nothing to fit")
        if len(targets) < len(free):
            raise ValueError(
                f"{len(free)} free parameters need at least as many targets, "
                f"got {len(targets)}"
            )
        top = max(t.level for t in targets)
        if top >= self.model.truncated_dim:
            raise ValueError(
                f"target level {top} exceeds the kept transmon subspace "
                f"(truncated_dim={self.model.truncated_dim})"
            )
        initial = {k: float(v) for k, v in dict(self.initial).items()}
        if set(initial) != set(free):
            raise ValueError(
                f"initial values must cover exactly the free parameters {free}"
            )
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "initial", initial)

    def j_max(self) -> int:
        return max(1, max(t.level for t in self.targets))

    def x0(self) -> ndarray:
        return np.array([self.initial[n] for n in self.model.free_names()])

    def assignment(self, x: ndarray) -> dict[str, float]:
        """Full parameter dict at free-parameter values ``x``."""
        free = self.model.free_names()
        if len(x) != len(free):
            raise ValueError(f"expected {len(free)} values, got {len(x)}")
        return {**self.model.fixed, **dict(zip(free, map(float, x)))}


@dataclass(frozen=True)
class FitResult:
    """Solution of one fit.

    ``parameters`` holds the fitted free parameters by name and ``residuals``
    the prediction-minus-target vector in GHz, in target order.  ``cost`` is
    the objective at the solution: half the squared residual norm for the
    Newton solver, the weighted L1 sum for BFGS.  ``cost_history`` records
    the accepted Newton iterates (empty for BFGS).
    """

    parameters: dict[str, float]
    residuals: tuple[float, ...]
    iterations: int
    converged: bool
    cost: float
    cost_history: tuple[float, ...] = ()

    def max_residual(self) -> float:
        return max(abs(r) for r in self.residuals)


def _needed_levels(targets: Sequence[Target]) -> set[int]:
    needed = {0}
    needed.update(t.level for t in targets)
    return needed


def residuals(problem: FitProblem, x: ndarray) -> ndarray:
    """Prediction-minus-target vector f(x) - f* in GHz.

    Raises
    ------
    ParameterDomainError
        If ``x`` leaves the physical parameter domain.
    LabelingAmbiguityError
        If a dressed state entering any target is flagged ambiguous; a fit
        through a hybridized crossing would silently match the wrong branch.
    """
    cfg = model_config(problem.model, problem.assignment(x))
    pred = predict_spectrum(cfg, j_max=problem.j_max())
    bad = sorted(pred.ambiguous & _needed_levels(problem.targets))
    if bad:
        raise LabelingAmbiguityError(
            f"ambiguous dressed-state labels at transmon levels {bad} "
            f"for parameters {problem.assignment(x)}"
        )
    out = np.empty(len(problem.targets))
    for i, t in enumerate(problem.targets):
        if t.observable == "f0j":
            out[i] = pred.f0j[t.level - 1]
        elif t.observable == "fres":
            out[i] = pred.f_res_j[t.level]
        else:
            out[i] = pred.delta_f0j[t.level - 1]
        out[i] -= t.value
    return out


def _fd_column(problem: FitProblem, x: ndarray, k: int, h: float) -> ndarray:
    xp, xm = x.copy(), x.copy()
    xp[k] += h
    xm[k] -= h
    try:
        rp = residuals(problem, xp)
    except ParameterDomainError:
        rp = None
    try:
        rm = residuals(problem, xm)
    except ParameterDomainError:
        rm = None
    if rp is not None and rm is not None:
        return (rp - rm) / (2.0 * h)
    if rp is None and rm is None:
        raise ParameterDomainError(
            f"both finite-difference probes for parameter {k} leave the domain"
        )
    # One probe sits outside the domain (parameter at a boundary); fall back
    # to the one-sided difference on the valid side.
    r0 = residuals(problem, x)
    return (rp - r0) / h if rp is not None else (r0 - rm) / h


def _fd_jacobian(problem: FitProblem, x: ndarray) -> ndarray:
    cols = []
    for k, name in enumerate(problem.model.free_names()):
        h = max(FD_RELATIVE_STEP * abs(x[k]), FD_ABSOLUTE_STEP)
        col = _fd_column(problem, x, k, h)
        if not np.all(np.isfinite(col)):
            col = _fd_column(problem, x, k, 100.0 * h)
        if not np.all(np.isfinite(col)):
            raise SolverError(f"non-finite derivative with respect to {name}")
        cols.append(col)
    return np.column_stack(cols)


def _derivative_operators(
    transmon: TransmonConfig, n_fock: int, depth: int
) -> dict[str, ndarray]:
    """dH/d(theta) in the charge x Fock basis; every theta enters linearly."""
    dim = transmon.dim
    eye_f = np.eye(n_fock)
    charge = np.arange(-transmon.ncut, transmon.ncut + 1, dtype=float)
    ops = {"EC": np.kron(np.diag(4.0 * (charge - transmon.ng) ** 2), eye_f)}
    for m in range(1, depth + 1):
        band = np.zeros((dim, dim))
        idx = np.arange(dim - m)
        band[idx, idx + m] = -0.5
        band[idx + m, idx] = -0.5
        ops[f"EJ{m}"] = np.kron(band, eye_f)
    ops["omega"] = np.kron(np.eye(dim), np.diag(np.arange(n_fock, dtype=float)))
    a = np.diag(np.sqrt(np.arange(1.0, n_fock)), 1)
    ops["G"] = np.kron(np.diag(charge), a + a.T)
    return ops


def _chain_matrix(
    spec: ModelSpec,
    params: Mapping[str, float],
    harmonics: HarmonicsSet,
    theta: tuple[str, ...],
) -> ndarray:
    """d(theta)/d(free parameters) for the model parameterization."""
    free = spec.free_names()
    chain = np.zeros((len(theta), len(free)))
    col = {n: i for i, n in enumerate(free)}
    for row, name in enumerate(theta):
        if name in col:
            chain[row, col[name]] = 1.0
    if spec.kind in ("standard", "truncated"):
        if spec.tail_ratios and "EJ1" in col:
            for row, name in enumerate(theta):
                m = int(name[2:]) if name.startswith("EJ") else 0
                if m > spec.n_harmonics:
                    chain[row, col["EJ1"]] = spec.tail_ratios[m - spec.n_harmonics - 1]
        return chain

    ej = harmonics.coefficients
    if spec.kind == "mesoscopic":
        grads = {}
        for shape in ("dbar", "sigma"):
            if shape not in col:
                continue
            h = max(FD_RELATIVE_STEP * abs(params[shape]), FD_ABSOLUTE_STEP)
            up, dn = dict(params), dict(params)
            up[shape] += h
            dn[shape] -= h
            rp = _mesoscopic_ratios(up["dbar"], up["sigma"], spec.harmonic_depth)
            rm = _mesoscopic_ratios(dn["dbar"], dn["sigma"], spec.harmonic_depth)
            grads[shape] = (np.array(rp) - np.array(rm)) / (2.0 * h)
    for row, name in enumerate(theta):
        if not name.startswith("EJ") or name == "EJ1":
            continue
        m = int(name[2:])
        if "EJ1" in col:
            chain[row, col["EJ1"]] = ej[m - 1] / ej[0]
        if spec.kind in ("param_ab", "param_abcd") and "a" in col:
            chain[row, col["a"]] = -m / params["a"] * ej[m - 1]
        if spec.kind == "param_ab" and "b" in col:
            chain[row, col["b"]] = -math.log(m) * ej[m - 1]
        if spec.kind == "param_abcd":
            denom = m ** params["b"] - params["d"]
            if "b" in col:
                chain[row, col["b"]] = -ej[m - 1] * m ** params["b"] * math.log(m) / denom
            if "c" in col:
                chain[row, col["c"]] = ej[m - 1] / params["c"]
            if "d" in col:
                chain[row, col["d"]] = ej[m - 1] / denom
        if spec.kind == "mesoscopic":
            for shape, grad in grads.items():
                chain[row, col[shape]] = ej[0] * grad[m - 2]
    return chain


def _analytic_jacobian(problem: FitProblem, x: ndarray) -> ndarray:
    """Eigenvector contractions q^T (dH/d theta) q on the full product basis.

    The full charge x Fock Hamiltonian is linear in every theta = (EC,
    EJ1..EJdepth, omega, G), so each labeled eigenvalue differentiates to a
    single contraction; target rows combine them over the two offset charges
    and the chain rule maps theta onto the fitted parameters.
    """
    spec = problem.model
    params = problem.assignment(x)
    cfg = model_config(spec, params)
    depth = cfg.transmon.harmonics.m_max
    theta = ("EC", *(f"EJ{m}" for m in range(1, depth + 1)), "omega", "G")

    labels = {(0, 0)}
    for t in problem.targets:
        labels.add((0, t.level))
        if t.observable == "fres":
            labels.add((1, t.level))
    grads: dict[tuple[float, tuple[int, int]], ndarray] = {}
    energies: dict[tuple[float, tuple[int, int]], float] = {}
    for ng in (0.0, 0.5):
        transmon = replace(cfg.transmon, ng=ng)
        evals_t, vecs_t = diagonalize_transmon(build_transmon_matrix(transmon))
        full = build_product_hamiltonian(replace(cfg, transmon=transmon))
        evals, vectors = scipy.linalg.eigh(full)
        overlap = np.kron(vecs_t.T, np.eye(spec.n_fock)) @ vectors
        labeled = label_dressed_states(evals, overlap, transmon.dim, spec.n_fock)
        bad = sorted(j for (k, j) in labeled.ambiguous if (k, j) in labels)
        if bad:
            raise LabelingAmbiguityError(
                f"ambiguous dressed-state labels at transmon levels {bad} "
                f"at ng={ng} for parameters {params}"
            )
        ops = _derivative_operators(transmon, spec.n_fock, depth)
        for label in labels:
            energy = labeled.energy(*label)
            # The labeled energy is one entry of evals verbatim, so the
            # nearest match recovers the eigenvector column exactly.
            i = int(np.argmin(np.abs(evals - energy)))
            q = vectors[:, i]
            grads[(ng, label)] = np.array([q @ ops[name] @ q for name in theta])
            energies[(ng, label)] = energy

    rows = []
    for t in problem.targets:
        if t.observable == "f0j":
            row = 0.5 * sum(
                grads[(ng, (0, t.level))] - grads[(ng, (0, 0))] for ng in (0.0, 0.5)
            )
        elif t.observable == "fres":
            row = 0.5 * sum(
                grads[(ng, (1, t.level))] - grads[(ng, (0, t.level))]
                for ng in (0.0, 0.5)
            )
        else:
            gap0 = energies[(0.0, (0, t.level))] - energies[(0.0, (0, 0))]
            gap5 = energies[(0.5, (0, t.level))] - energies[(0.5, (0, 0))]
            sign = math.copysign(1.0, gap0 - gap5)
            row = sign * (
                (grads[(0.0, (0, t.level))] - grads[(0.0, (0, 0))])
                - (grads[(0.5, (0, t.level))] - grads[(0.5, (0, 0))])
            )
        rows.append(row)
    chain = _chain_matrix(spec, params, cfg.transmon.harmonics, theta)
    return np.vstack(rows) @ chain


def jacobian(problem: FitProblem, x: ndarray, *, mode: str = "fd") -> ndarray:
    """d(predictions)/d(free parameters), shape (n_targets, n_free).

    ``mode="fd"`` uses central differences with relative step 1e-6 (absolute
    floor 1e-6 GHz), falling back to one-sided steps at domain boundaries and
    retrying once with a 100x step on non-finite entries.  ``mode="analytic"``
    contracts full-basis eigenvectors with dH/d(theta) and applies the chain
    rule of the model parameterization; for the mesoscopic kind the ratio
    derivatives themselves come from central differences.
    """
    x = np.asarray(x, dtype=float)
    if mode == "fd":
        return _fd_jacobian(problem, x)
    if mode == "analytic":
        return _analytic_jacobian(problem, x)
    raise ValueError(f"mode must be 'fd' or 'analytic', got {mode!r}")


def _try_cost(problem: FitProblem, x: ndarray) -> tuple[ndarray | None, float]:
    """Residuals and F = ||r||^2 / 2, with inf for out-of-domain trials."""
    try:
        r = residuals(problem, x)
    except (ParameterDomainError, LabelingAmbiguityError):
        return None, math.inf
    return r, 0.5 * float(r @ r)


def _line_search(
    problem: FitProblem,
    x: ndarray,
    dx: ndarray,
    f0: float,
    *,
    alpha: float = 1e-4,
    mu_min: float = 1e-12,
) -> tuple[ndarray, ndarray, float]:
    """Backtrack along the Newton step until F drops below the Armijo line.

    The first backtrack minimizes a quadratic model of g(mu) = F(x + mu dx);
    later ones a cubic through the last two trials, clamped to [0.1, 0.5] of
    the previous mu.  Out-of-domain trials count as F = inf and halve mu.
    """
    slope = -2.0 * f0
    mu = 1.0
    prev: tuple[float, float] | None = None
    while True:
        trial = x + mu * dx
        r, f = _try_cost(problem, trial)
        if f <= f0 + alpha * mu * slope:
            return trial, r, f
        if mu <= mu_min:
            raise SolverError(
                f"line search stalled at F={f0:.3e}; "
                "the target set may admit no root in the model domain"
            )
        if not math.isfinite(f):
            mu *= 0.5
            continue
        if prev is None:
            nxt = -slope / (2.0 * (f - f0 - slope))
        else:
            mu_p, f_p = prev
            r1 = f - f0 - slope * mu
            r2 = f_p - f0 - slope * mu_p
            a = (r1 / mu**2 - r2 / mu_p**2) / (mu - mu_p)
            b = (-mu_p * r1 / mu**2 + mu * r2 / mu_p**2) / (mu - mu_p)
            if a == 0.0:
                nxt = -slope / (2.0 * b)
            else:
                disc = b * b - 3.0 * a * slope
                if disc < 0.0:
                    nxt = 0.5 * mu
                elif b <= 0.0:
                    nxt = (-b + math.sqrt(disc)) / (3.0 * a)
                else:
                    nxt = -slope / (b + math.sqrt(disc))
        prev = (mu, f)
        mu = min(max(nxt, 0.1 * mu), 0.5 * mu)


def solve_newton_lb(
    problem: FitProblem,
    *,
    tolerance: float = NEWTON_TOLERANCE,
    max_iterations: int = 200,
    jacobian_mode: str = "fd",
) -> FitResult:
    """Newton root finding with line search and backtracking (square systems).

    Iterates x <- x + mu * dx with dx = -J^{-1} (f - f*), where mu comes from
    cubic backtracking on F = ||f - f*||^2 / 2, until max |residual| falls
    below ``tolerance`` (GHz) or the iteration cap is reached.  Every accepted
    step strictly decreases F.  When the result carries ``converged=True``,
    its max residual is below tolerance; hitting the cap leaves it False.

    Raises
    ------
    ValueError
        If the problem is not square (#targets != #free parameters).
    SolverError
        On a singular Jacobian or a line search that cannot reduce F, e.g.
        when the targets admit no root inside the parameter domain.
    """
    free = problem.model.free_names()
    if len(problem.targets) != len(free):
        raise ValueError(
            f"newton solve needs a square system, got {len(problem.targets)} "
            f"targets for {len(free)} free parameters"
        )
    x = problem.x0()
    r = residuals(problem, x)
    f = 0.5 * float(r @ r)
    history = [f]
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        if float(np.max(np.abs(r))) < tolerance:
            iterations -= 1
            break
        jac = jacobian(problem, x, mode=jacobian_mode)
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular jacobian at iteration {iterations}") from exc
        x, r, f = _line_search(problem, x, dx, f)
        history.append(f)
    converged = float(np.max(np.abs(r))) < tolerance
    return FitResult(
        parameters=dict(zip(free, map(float, x))),
        residuals=tuple(map(float, r)),
        iterations=iterations,
        converged=converged,
        cost=f,
        cost_history=tuple(history),
    )


def _vertex_polish(
    problem: FitProblem, weights: ndarray, x: ndarray, r: ndarray
) -> tuple[ndarray, ndarray, float] | None:
    """Square-solve the targets a weighted L1 minimum interpolates.

    The minimum of sum w_i |r_i| generically sits at a vertex where as many
    residuals vanish as there are free parameters.  Starting from the best
    smooth-descent iterate, take the positive-weight targets with the
    smallest |r_i| as the active set and drive them to zero with the Newton
    solver.  Returns (x, full residuals, cost) or None if the sub-solve
    fails or does not reduce the cost.
    """
    free = problem.model.free_names()
    candidates = sorted(
        (i for i in range(len(r)) if weights[i] > 0), key=lambda i: abs(r[i])
    )
    if len(candidates) < len(free):
        return None
    active = tuple(problem.targets[i] for i in sorted(candidates[: len(free)]))
    sub = FitProblem(problem.model, active, dict(zip(free, map(float, x))))
    try:
        vertex = solve_newton_lb(sub, max_iterations=50)
        x_pol = np.array([vertex.parameters[n] for n in free])
        r_pol = residuals(problem, x_pol)
    except (SolverError, ParameterDomainError, LabelingAmbiguityError):
        return None
    if not vertex.converged:
        return None
    return x_pol, r_pol, float(weights @ np.abs(r_pol))


def solve_bfgs(
    problem: FitProblem,
    *,
    smoothing: float = L1_SMOOTHING,
    max_iterations: int = 500,
    gradient_tolerance: float = 1e-8,
    polish: bool = True,
) -> FitResult:
    """BFGS descent on the weighted L1 cost sum_i w_i |f_i(x) - f_i*|.

    The gradient evaluates the finite-difference Jacobian and the smoothed
    kink derivative r / sqrt(r^2 + smoothing^2); the reported cost is the
    true L1 sum, and the best iterate seen is kept, so a failed line search
    near a kink still yields the deepest visited point.  Since the L1
    minimum generically interpolates #free targets exactly, a final polish
    square-solves the active set found by the descent and adopts the vertex
    when it lowers the cost; ``converged`` means the optimizer met its own
    criteria or the polish landed on such a vertex.
    """
    weights = np.array([t.weight for t in problem.targets])
    best: dict[str, object] = {"cost": math.inf, "x": problem.x0().copy(), "r": None}

    def true_cost(x: ndarray) -> float:
        try:
            r = residuals(problem, x)
        except (ParameterDomainError, LabelingAmbiguityError):
            return math.inf
        cost = float(weights @ np.abs(r))
        if cost < best["cost"]:
            best.update(cost=cost, x=x.copy(), r=r)
        return cost

    def smooth_gradient(x: ndarray) -> ndarray:
        # NaN (not an exception) lets the optimizer back off an infeasible
        # line-search trial and terminate on its own criteria.
        try:
            r = residuals(problem, x)
            jac = _fd_jacobian(problem, x)
        except (ParameterDomainError, LabelingAmbiguityError, SolverError):
            return np.full(len(x), math.nan)
        return jac.T @ (weights * r / np.sqrt(r * r + smoothing**2))

    outcome = scipy.optimize.minimize(
        true_cost,
        problem.x0(),
        jac=smooth_gradient,
        method="BFGS",
        options={"gtol": gradient_tolerance, "maxiter": max_iterations},
    )
    if best["r"] is None:
        raise SolverError("no feasible point visited; check the initial values")
    x = np.asarray(best["x"], dtype=float)
    r = np.asarray(best["r"], dtype=float)
    cost = float(best["cost"])
    converged = bool(outcome.success)
    if polish:
        refined = _vertex_polish(problem, weights, x, r)
        if refined is not None and refined[2] <= cost:
            x, r, cost = refined
            converged = True
    return FitResult(
        parameters=dict(zip(problem.model.free_names(), map(float, x))),
        residuals=tuple(map(float, r)),
        iterations=int(outcome.nit),
        converged=converged,
        cost=cost,
    )


def solve_fit(problem: FitProblem, **options) -> FitResult:
    """Dispatch on system shape: square -> Newton-LB, overdetermined -> BFGS."""
    if len(problem.targets) == len(problem.model.free_names()):
        return solve_newton_lb(problem, **options)
    return solve_bfgs(problem, **options)


def solution_config(problem: FitProblem, result: FitResult) -> JointSystemConfig:
    """Joint-system configuration at the fitted parameters."""
    return model_config(problem.model, {**problem.model.fixed, **result.parameters})


def _target_value(targets: Sequence[Target], observable: str, level: int) -> float | None:
    for t in targets:
        if t.observable == observable and t.level == level:
            return t.value
    return None


def standard_seed(targets: Sequence[Target]) -> dict[str, float]:
    """Closed-form starting point for the standard model from its own targets.

    EC comes from the anharmonicity 2 f_01 - f_02, EJ from the harmonic
    approximation f_01 = sqrt(8 EC EJ) - EC, omega from f_res,0 and G from
    the dispersive shift.  Missing targets fall back to generic transmon
    values; only f_01 is required.
    """
    f01 = _target_value(targets, "f0j", 1)
    if f01 is None:
        raise ValueError("the standard seed needs an f_01 target")
    f02 = _target_value(targets, "f0j", 2)
    ec = 0.25 if f02 is None else max(2.0 * f01 - f02, 0.05)
    ej = (f01 + ec) ** 2 / (8.0 * ec)
    fres0 = _target_value(targets, "fres", 0)
    omega = f01 + 1.5 if fres0 is None else fres0
    fres1 = _target_value(targets, "fres", 1)
    g = 0.05
    if fres0 is not None and fres1 is not None:
        chi = fres1 - fres0
        detuning = f01 - omega
        g = math.sqrt(abs(chi * detuning * (detuning - ec) / ec))
    return {"EC": ec, "EJ1": ej, "omega": omega, "G": g}


def harmonic_seed(spec: ModelSpec, standard: Mapping[str, float]) -> dict[str, float]:
    """Starting point for a harmonics model, seeded from a standard solution.

    Copies (EC, EJ1, omega, G) where free, starts truncated harmonics at
    zero, the two-parameter families at a generic interior point, and the
    barrier model at the grown-junction thickness dbar = 1.64 nm with
    sigma = dbar / 4.
    """
    defaults = {
        "a": 2.0,
        "b": 1.0,
        "c": 1.0,
        "d": 0.0,
        "dbar": 1.64,
        "sigma": 0.41,
    }
    seed = {}
    for name in spec.free_names():
        if name in standard:
            seed[name] = float(standard[name])
        elif name in defaults:
            seed[name] = defaults[name]
        else:
            seed[name] = 0.0
    return seed


SWEEP_OBSERVABLES = (
    "f02",
    "f03",
    "delta_f01",
    "delta_f02",
    "delta_f03",
    "f_res",
    "chi",
)


@dataclass(frozen=True)
class SweepPredictions:
    """Interpolated observables at requested qubit frequencies, in GHz."""

    f01: tuple[float, ...]
    f02: tuple[float, ...]
    f03: tuple[float, ...]
    delta_f01: tuple[float, ...]
    delta_f02: tuple[float, ...]
    delta_f03: tuple[float, ...]
    f_res: tuple[float, ...]
    chi: tuple[float, ...]


@dataclass(frozen=True)
class EjSweepTable:
    """Spectrum observables along a Josephson-energy ladder, splined vs f_01.

    ``curves[name][i]`` is the observable at ``ej_values[i]``; ``f01`` is the
    interpolation abscissa and must be strictly increasing.  Grid points
    whose labeling was ambiguous (level crossings, e.g. where f_01 sweeps
    through the resonator) are listed in ``ambiguous_points``; interpolation
    near them degrades.
    """

    ej_values: tuple[float, ...]
    f01: tuple[float, ...]
    curves: Mapping[str, tuple[float, ...]]
    ambiguous_points: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.f01) != len(self.ej_values) or len(self.f01) < 4:
            raise ValueError("need at least 4 aligned grid points for cubic splines")
        if set(self.curves) != set(SWEEP_OBSERVABLES):
            raise ValueError(f"curves must cover exactly {SWEEP_OBSERVABLES}")
        if np.any(np.diff(self.f01) <= 0):
            raise ValueError("f_01 must increase strictly along the ladder")

    @cached_property
    def _splines(self) -> dict[str, CubicSpline]:
        grid = np.array(self.f01)
        return {n: CubicSpline(grid, np.array(c)) for n, c in self.curves.items()}

    def predict(self, f01_values: Sequence[float]) -> SweepPredictions:
        """Interpolate every observable at the given qubit frequencies.

        Raises
        ------
        ValueError
            If any requested f_01 lies outside the tabulated range.
        """
        values = np.atleast_1d(np.asarray(f01_values, dtype=float))
        lo, hi = self.f01[0], self.f01[-1]
        if np.any(values < lo) or np.any(values > hi):
            raise ValueError(
                f"requested f_01 outside the tabulated range [{lo:.4f}, {hi:.4f}]"
            )
        fields = {
            name: tuple(float(v) for v in self._splines[name](values))
            for name in SWEEP_OBSERVABLES
        }
        return SweepPredictions(f01=tuple(map(float, values)), **fields)


def ej_sweep_table(
    ec: float,
    ratios: Sequence[float],
    omega: float,
    g: float,
    *,
    ej_min: float = 2.0,
    ej_max: float = 60.0,
    points: int = 100,
    ncut: int = 14,
    truncated_dim: int = 12,
    n_fock: int = 9,
) -> EjSweepTable:
    """Diagonalize along a linear EJ1 ladder with fixed shape parameters.

    The harmonic ratios, EC, omega and G stay constant while EJ1 sweeps
    ``points`` linearly spaced values; each observable is recorded against
    the resulting f_01.  The dispersive shift chi = f_01(k=1) - f_01 equals
    f_res,1 - f_res,0, so it comes from the same diagonalizations.
    """
    ej_values = np.linspace(ej_min, ej_max, points)
    f01, columns = [], {name: [] for name in SWEEP_OBSERVABLES}
    ambiguous = []
    ratios = tuple(ratios)
    for i, ej in enumerate(ej_values):
        cfg = JointSystemConfig(
            transmon=TransmonConfig(
                EC=ec, harmonics=HarmonicsSet.from_ratios(float(ej), ratios), ncut=ncut
            ),
            resonator=ResonatorConfig(omega=omega, G=g, n_fock=n_fock),
            truncated_dim=truncated_dim,
        )
        pred = predict_spectrum(cfg, j_max=3)
        if pred.ambiguous:
            ambiguous.append(i)
        f01.append(pred.f0j[0])
        columns["f02"].append(pred.f0j[1])
        columns["f03"].append(pred.f0j[2])
        columns["delta_f01"].append(pred.delta_f0j[0])
        columns["delta_f02"].append(pred.delta_f0j[1])
        columns["delta_f03"].append(pred.delta_f0j[2])
        columns["f_res"].append(pred.f_res_j[0])
        columns["chi"].append(pred.f_res_j[1] - pred.f_res_j[0])
    return EjSweepTable(
        ej_values=tuple(map(float, ej_values)),
        f01=tuple(f01),
        curves={n: tuple(c) for n, c in columns.items()},
        ambiguous_points=tuple(ambiguous),
    )


def ej_sweep_fit(
    f01_values: Sequence[float],
    ec: float,
    ratios: Sequence[float],
    omega: float,
    g: float,
    **grid_options,
) -> SweepPredictions:
    """Build the EJ1 ladder and interpolate observables at measured f_01."""
    return ej_sweep_table(ec, ratios, omega, g, **grid_options).predict(f01_values)
