"""Scanning high-order harmonic ratios consistent with a measured spectrum.

A dataset of N_f transition frequencies plus two resonator frequencies pins
(EJ1..EJ<N_f>, omega, G) through a square inverse problem, but says nothing
about harmonics above order N_f.  This module scans four further ratios
EJm/EJ1 over geometric grids bounded by the point-contact limit, re-solves
the square problem for every combination, and condenses the surviving
trajectories into harmonic-ratio envelopes and charge-dispersion ranges.

Combinations are independent work items; ``run_scan`` accepts any
order-preserving ``map`` (the builtin, an executor's, a pool's) and keys
results by grid index, so the outcome does not depend on scheduling.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from itertools import product

import numpy as np

from .channels import point_contact_ratio
from .fitting import (
    NEWTON_TOLERANCE,
    FitProblem,
    LabelingAmbiguityError,
    ModelSpec,
    ParameterDomainError,
    SolverError,
    Target,
    model_config,
    solve_newton_lb,
    standard_seed,
)
from .spectrum import predict_spectrum

__all__ = [
    "FLAG_BEYOND_POINT_CONTACT",
    "FLAG_NON_ALTERNATING",
    "FLAG_NON_DECREASING",
    "RATIO_FLOOR",
    "SCANNED_ORDERS",
    "HarmonicRanges",
    "ScanGrid",
    "Trajectory",
    "build_grid",
    "dispersion_ranges",
    "harmonic_ranges",
    "physicality_flags",
    "run_scan",
]

# Smallest scanned |EJm/EJ1|; contributions below this are spectrally inert
# at kHz resolution for transmon-range EJ1.
RATIO_FLOOR = 1e-7

SCANNED_ORDERS = 4

# A trajectory is flagged rather than dropped when its full ratio vector
# leaves the single-junction regime.
FLAG_BEYOND_POINT_CONTACT = "beyond-point-contact"
FLAG_NON_DECREASING = "non-decreasing"
FLAG_NON_ALTERNATING = "non-alternating"

ZERO_KEY = (-1,) * SCANNED_ORDERS


@dataclass(frozen=True)
class ScanGrid:
    """Signed ladder values for each scanned harmonic order.

    ``ladders[i]`` holds the values of EJm/EJ1 at m = n_fitted + 1 + i in
    decreasing magnitude, alternating in sign with the order's parity.  The
    scan enumerates the full ladder product plus the all-zero combination.
    """

    n_fitted: int
    ladders: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if self.n_fitted < 2:
            raise ValueError(f"n_fitted must be >= 2, got {self.n_fitted}")
        object.__setattr__(
            self, "ladders", tuple(tuple(map(float, lad)) for lad in self.ladders)
        )
        if len(self.ladders) != SCANNED_ORDERS:
            raise ValueError(f"expected {SCANNED_ORDERS} ladders")
        for m, ladder in zip(self.orders(), self.ladders):
            limit = point_contact_ratio(m)
            for v in ladder:
                if not 0.0 < abs(v) <= abs(limit):
                    raise ValueError(
                        f"ladder value {v} at order {m} outside (0, {limit}]"
                    )
                if math.copysign(1.0, v) != math.copysign(1.0, limit):
                    raise ValueError(f"ladder value {v} at order {m} has wrong sign")

    def orders(self) -> range:
        """Scanned harmonic orders m."""
        return range(self.n_fitted + 1, self.n_fitted + 1 + SCANNED_ORDERS)

    def combination_count(self) -> int:
        """Number of scanned combinations including the all-zero one."""
        return math.prod(len(lad) for lad in self.ladders) + 1

    def values(self, key: tuple[int, ...]) -> tuple[float, ...]:
        """Scanned ratios at a grid key; the all -1 key is the zero point."""
        if key == ZERO_KEY:
            return (0.0,) * SCANNED_ORDERS
        return tuple(lad[k] for lad, k in zip(self.ladders, key))

    def keys(self) -> list[tuple[int, ...]]:
        """All grid keys, zero combination first, then lexicographic."""
        rest = product(*(range(len(lad)) for lad in self.ladders))
        return [ZERO_KEY, *rest]


def build_grid(
    n_fitted: int, *, points: int = 16, floor: float = RATIO_FLOOR
) -> ScanGrid:
    """Geometric ladders for the four harmonic orders above ``n_fitted``.

    Each ladder spans the open interval below the point-contact limit
    3(-1)^(m+1)/(4m^2 - 1) down to ``floor`` inclusive: of the ``points``+1
    geometrically spaced magnitudes starting at the limit, the first is
    dropped, keeping every value strictly inside the single-channel bound.
    """
    if points < 1:
        raise ValueError(f"points must be >= 1, got {points}")
    ladders = []
    for m in range(n_fitted + 1, n_fitted + 1 + SCANNED_ORDERS):
        limit = point_contact_ratio(m)
        if not 0.0 < floor < abs(limit):
            raise ValueError(f"floor {floor} outside (0, {abs(limit)}) at order {m}")
        magnitudes = np.geomspace(abs(limit), floor, points + 1)[1:]
        ladders.append(tuple(math.copysign(1.0, limit) * magnitudes))
    return ScanGrid(n_fitted, tuple(ladders))


@dataclass(frozen=True)
class Trajectory:
    """One scanned combination together with its solved leading harmonics.

    ``ratios`` is the full vector (1, EJ2/EJ1, ..., EJ<n_fitted+4>/EJ1) made
    of the solved leading part and the scanned tail; empty when the solve
    failed.  ``flags`` marks physicality violations without dropping the
    trajectory.  A converged trajectory reproduces its targets to solver
    tolerance by construction.
    """

    key: tuple[int, ...]
    scanned: tuple[float, ...]
    ec: float
    converged: bool
    ratios: tuple[float, ...]
    ej1: float
    omega: float
    g: float
    iterations: int
    flags: frozenset[str]
    message: str = ""


def physicality_flags(ratios: Sequence[float]) -> frozenset[str]:
    """Violations of the single-junction regime in a full ratio vector.

    ``ratios`` starts at EJ1/EJ1 = 1.  Checks: magnitudes within the
    point-contact limit, strictly decreasing magnitudes, and signs
    alternating with order parity.  Exact zeros (absent harmonics) never
    violate, but a nonzero entry after a zero one does.
    """
    flags = set()
    mags = [abs(v) for v in ratios]
    for i, value in enumerate(ratios):
        m = i + 1
        if value == 0.0:
            continue
        if mags[i] > abs(point_contact_ratio(m)):
            flags.add(FLAG_BEYOND_POINT_CONTACT)
        if math.copysign(1.0, value) != (1.0 if m % 2 else -1.0):
            flags.add(FLAG_NON_ALTERNATING)
        if i > 0 and mags[i] >= mags[i - 1]:
            flags.add(FLAG_NON_DECREASING)
    return frozenset(flags)


def _canonical_targets(
    targets: Sequence[Target], n_fitted: int
) -> tuple[Target, ...]:
    seen = {(t.observable, t.level): t for t in targets}
    wanted = [("f0j", j) for j in range(1, n_fitted + 1)] + [("fres", 0), ("fres", 1)]
    if len(seen) != len(targets) or sorted(seen) != sorted(wanted):
        raise ValueError(
            f"scan targets must be exactly f0j for j=1..{n_fitted} plus "
            "f_res,0 and f_res,1"
        )
    return tuple(seen[k] for k in wanted)


def _zero_seed(
    targets: Sequence[Target], ec: float, n_fitted: int
) -> dict[str, float]:
    base = standard_seed(targets)
    f01 = next(t.value for t in targets if t.observable == "f0j" and t.level == 1)
    seed = {"EJ1": (f01 + ec) ** 2 / (8.0 * ec)}
    seed.update({f"EJ{m}": 0.0 for m in range(2, n_fitted + 1)})
    seed["omega"] = base["omega"]
    seed["G"] = base["G"]
    return seed


@dataclass(frozen=True)
class _RowTask:
    """All inputs one worker needs; a pure function of these keeps the scan
    deterministic under any execution order."""

    row_key: tuple[int, ...]
    leading: tuple[float, ...]
    last_ladder: tuple[float, ...]
    targets: tuple[Target, ...]
    ec: float
    n_fitted: int
    seed: tuple[tuple[str, float], ...]
    knobs: tuple[tuple[str, int], ...]
    tolerance: float
    max_iterations: int


def _solve_combination(
    task: _RowTask, key: tuple[int, ...], scanned: tuple[float, ...],
    initial: Mapping[str, float],
) -> Trajectory:
    spec = ModelSpec(
        "truncated" if task.n_fitted > 1 else "standard",
        n_harmonics=task.n_fitted,
        fixed={"EC": task.ec},
        tail_ratios=scanned,
        **dict(task.knobs),
    )
    problem = FitProblem(spec, task.targets, initial)
    try:
        result = solve_newton_lb(
            problem, tolerance=task.tolerance, max_iterations=task.max_iterations
        )
    except (SolverError, ParameterDomainError, LabelingAmbiguityError) as exc:
        return Trajectory(
            key=key, scanned=scanned, ec=task.ec, converged=False, ratios=(),
            ej1=math.nan, omega=math.nan, g=math.nan, iterations=0,
            flags=frozenset(), message=f"{type(exc).__name__}: {exc}",
        )
    p = result.parameters
    ej1 = p["EJ1"]
    leading = tuple(p[f"EJ{m}"] / ej1 for m in range(2, task.n_fitted + 1))
    ratios = (1.0, *leading, *scanned)
    return Trajectory(
        key=key, scanned=scanned, ec=task.ec, converged=result.converged,
        ratios=ratios, ej1=ej1, omega=p["omega"], g=p["G"],
        iterations=result.iterations, flags=physicality_flags(ratios),
        message="" if result.converged else "iteration cap reached",
    )


def _solve_row(task: _RowTask) -> tuple[Trajectory, ...]:
    """Solve one row of combinations, warm-starting along the last ladder.

    The ladder is walked from the floor end upward so each solve starts from
    a spectrally close neighbor; the first starts from the row seed (the
    all-zero solution).  Failed solves leave the warm start untouched.
    """
    out = []
    warm = dict(task.seed)
    for k in range(len(task.last_ladder) - 1, -1, -1):
        scanned = (*task.leading, task.last_ladder[k])
        traj = _solve_combination(task, (*task.row_key, k), scanned, warm)
        if traj.converged:
            warm = {
                "EJ1": traj.ej1,
                **{
                    f"EJ{m}": traj.ratios[m - 1] * traj.ej1
                    for m in range(2, task.n_fitted + 1)
                },
                "omega": traj.omega,
                "G": traj.g,
            }
        out.append(traj)
    return tuple(out)


def run_scan(
    targets: Sequence[Target],
    ec: float,
    grid: ScanGrid,
    *,
    initial: Mapping[str, float] | None = None,
    map_fn: Callable[..., Iterable] = map,
    tolerance: float = NEWTON_TOLERANCE,
    max_iterations: int = 60,
    ncut: int = 14,
    truncated_dim: int = 12,
    n_fock: int = 9,
) -> tuple[Trajectory, ...]:
    """Solve the square inverse problem for every grid combination.

    ``targets`` must contain exactly the fitted transitions f_0j for
    j = 1..n_fitted and both resonator frequencies; EC stays pinned at
    ``ec``.  The all-zero combination is solved first and seeds the rest.
    Failures are recorded as unconverged trajectories carrying the error
    message, never dropped.

    ``map_fn`` maps the row worker over row tasks; pass an executor's or
    pool's ``map`` to parallelize.  Results come back sorted by grid key,
    independent of execution order.
    """
    targets = _canonical_targets(targets, grid.n_fitted)
    knobs = (("ncut", ncut), ("truncated_dim", truncated_dim), ("n_fock", n_fock))
    seed = dict(initial) if initial is not None else _zero_seed(
        targets, ec, grid.n_fitted
    )

    base = _RowTask(
        row_key=(), leading=(), last_ladder=(), targets=targets, ec=ec,
        n_fitted=grid.n_fitted, seed=tuple(seed.items()), knobs=knobs,
        tolerance=tolerance, max_iterations=max_iterations,
    )
    zero = _solve_combination(base, ZERO_KEY, (0.0,) * SCANNED_ORDERS, seed)
    if zero.converged:
        seed = {
            "EJ1": zero.ej1,
            **{
                f"EJ{m}": zero.ratios[m - 1] * zero.ej1
                for m in range(2, grid.n_fitted + 1)
            },
            "omega": zero.omega,
            "G": zero.g,
        }

    lead_ladders = grid.ladders[:-1]
    tasks = [
        _RowTask(
            row_key=key, leading=tuple(lad[k] for lad, k in zip(lead_ladders, key)),
            last_ladder=grid.ladders[-1], targets=targets, ec=ec,
            n_fitted=grid.n_fitted, seed=tuple(seed.items()), knobs=knobs,
            tolerance=tolerance, max_iterations=max_iterations,
        )
        for key in product(*(range(len(lad)) for lad in lead_ladders))
    ]
    rows = list(map_fn(_solve_row, tasks))
    trajectories = [zero]
    trajectories.extend(t for row in rows for t in row)
    trajectories.sort(key=lambda t: t.key)
    return tuple(trajectories)


@dataclass(frozen=True)
class HarmonicRanges:
    """Envelope of |EJm/EJ1| over trajectories, plus representatives.

    ``orders`` lists m = 2..n_fitted+4; ``lower``/``upper`` the per-order
    envelope.  The representatives bracket |EJ2/EJ1|: ``smallest`` and
    ``largest`` are the extremes, ``mid`` the trajectory closest to their
    geometric mean.
    """

    orders: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    smallest: Trajectory
    mid: Trajectory
    largest: Trajectory

    def __post_init__(self) -> None:
        e2 = [abs(t.ratios[1]) for t in (self.smallest, self.mid, self.largest)]
        if not e2[0] <= e2[1] <= e2[2]:
            raise ValueError("representatives must be ordered by |EJ2/EJ1|")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("envelope lower bound exceeds upper bound")


def _usable(
    trajectories: Iterable[Trajectory], include_flagged: bool
) -> list[Trajectory]:
    return [
        t
        for t in trajectories
        if t.converged and (include_flagged or not t.flags)
    ]


def harmonic_ranges(
    trajectories: Iterable[Trajectory], *, include_flagged: bool = False
) -> HarmonicRanges:
    """Per-order min/max of |EJm/EJ1| over converged trajectories.

    Physicality-flagged trajectories are excluded unless ``include_flagged``
    is set; call both ways to compare the filtered and raw envelopes.
    """
    usable = _usable(trajectories, include_flagged)
    if not usable:
        raise ValueError("no converged trajectories to aggregate")
    n = len(usable[0].ratios)
    if any(len(t.ratios) != n for t in usable):
        raise ValueError("trajectories mix different harmonic counts")
    mags = np.abs(np.array([t.ratios for t in usable]))
    by_e2 = sorted(usable, key=lambda t: abs(t.ratios[1]))
    smallest, largest = by_e2[0], by_e2[-1]
    center = math.sqrt(abs(smallest.ratios[1]) * abs(largest.ratios[1]))
    mid = min(by_e2, key=lambda t: abs(math.log(abs(t.ratios[1]) / center)))
    return HarmonicRanges(
        orders=tuple(range(2, n + 1)),
        lower=tuple(mags[:, 1:].min(axis=0)),
        upper=tuple(mags[:, 1:].max(axis=0)),
        smallest=smallest,
        mid=mid,
        largest=largest,
    )


def dispersion_ranges(
    trajectories: Iterable[Trajectory],
    *,
    j_max: int,
    include_flagged: bool = False,
    ncut: int = 14,
    truncated_dim: int = 12,
    n_fock: int = 9,
) -> tuple[tuple[float, float], ...]:
    """Charge-dispersion envelope (min, max) of delta f_0j per level.

    Re-simulates each usable trajectory and aggregates |f_0j(ng=0) -
    f_0j(ng=1/2)| for j = 1..j_max.  Levels whose dressed labeling is
    ambiguous for some trajectory skip that trajectory's value.
    """
    usable = _usable(trajectories, include_flagged)
    if not usable:
        raise ValueError("no converged trajectories to aggregate")
    per_level: list[list[float]] = [[] for _ in range(j_max)]
    for t in usable:
        spec = ModelSpec(
            "truncated" if len(t.ratios) > 1 else "standard",
            n_harmonics=len(t.ratios),
            fixed={"EC": t.ec},
            ncut=ncut,
            truncated_dim=truncated_dim,
            n_fock=n_fock,
        )
        params = {
            "EC": t.ec,
            **{f"EJ{m}": r * t.ej1 for m, r in enumerate(t.ratios, start=1)},
            "omega": t.omega,
            "G": t.g,
        }
        pred = predict_spectrum(model_config(spec, params), j_max=j_max)
        for j in range(1, j_max + 1):
            if j in pred.ambiguous:
                continue
            per_level[j - 1].append(pred.delta_f0j[j - 1])
    out = []
    for j, values in enumerate(per_level, start=1):
        if not values:
            raise ValueError(f"every trajectory is ambiguous at level {j}")
        out.append((min(values), max(values)))
    return tuple(out)
