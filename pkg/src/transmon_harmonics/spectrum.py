"""Charge-basis transmon and joint transmon-resonator spectra.

The junction potential is a cosine series V(phi) = -sum_m E_Jm cos(m*phi),
represented in the charge basis |n>, n = -N..N, where cos(m*phi) couples
charge states m apart.  The joint system is built in two stages: the bare
transmon is diagonalized first, then the lowest ``truncated_dim`` eigenstates
are coupled to a Fock-truncated resonator through the charge operator.

Energies follow the E/h convention in GHz throughout; physical constants
enter only in :func:`cpr` / :func:`critical_current`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.constants
import scipy.linalg
from numpy import ndarray

__all__ = [
    "AMBIGUITY_THRESHOLD",
    "ContinuationGridError",
    "TruncationError",
    "HarmonicsSet",
    "TransmonConfig",
    "ResonatorConfig",
    "JointSystemConfig",
    "DressedSpectrum",
    "SpectrumPrediction",
    "build_transmon_matrix",
    "diagonalize_transmon",
    "build_joint_hamiltonian",
    "build_product_hamiltonian",
    "label_dressed_states",
    "lambda_continuation_labels",
    "predict_spectrum",
    "convergence_check",
    "potential",
    "potential_height",
    "cpr",
    "critical_current",
    "perturbative_freq_anharmonicity",
]

# A dressed state whose best bare overlap does not exceed this has no
# majority bare component and is flagged instead of guessed.
AMBIGUITY_THRESHOLD = 1.0 / math.sqrt(2.0)

# nA per (GHz * 2e/hbar * h): I(phi) = (2e/hbar) * h * sum_m m E_Jm sin(m phi)
_NA_PER_GHZ = 4.0 * np.pi * scipy.constants.e * 1e18


class TruncationError(ValueError):
    """A harmonic order cannot be represented in the charge basis."""


class ContinuationGridError(RuntimeError):
    """The lambda grid is too coarse to trace eigenstates unambiguously."""


@dataclass(frozen=True)
class HarmonicsSet:
    """Ordered Josephson energies E_J1..E_Jm_max in GHz (E/h).

    The m-th coefficient multiplies cos(m*phi) in the junction potential.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 1:
            raise ValueError("at least one harmonic is required")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("harmonic energies must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_ratios(cls, ej1: float, ratios: tuple[float, ...] = ()) -> "HarmonicsSet":
        """Build from E_J1 and the ratios E_Jm/E_J1 for m >= 2."""
        return cls((ej1, *(ej1 * r for r in ratios)))

    @property
    def m_max(self) -> int:
        return len(self.coefficients)

    def energy(self, m: int) -> float:
        """E_Jm for harmonic order m (1-based); zero beyond m_max."""
        if m < 1:
            raise ValueError(f"harmonic order must be >= 1, got {m}")
        if m > self.m_max:
            return 0.0
        return self.coefficients[m - 1]

    def ratios(self) -> tuple[float, ...]:
        """E_Jm/E_J1 for m = 2..m_max."""
        ej1 = self.coefficients[0]
        if ej1 == 0.0:
            raise ValueError("ratios undefined for E_J1 = 0")
        return tuple(c / ej1 for c in self.coefficients[1:])

    def is_physical(self) -> bool:
        """Whether the set alternates in sign and decays strictly in magnitude.

        A physical tunnel junction has sign(E_Jm) = (-1)^(m+1) and
        |E_Jm| < |E_J(m-1)| for every m >= 2.
        """
        for m, c in enumerate(self.coefficients, start=1):
            if math.copysign(1.0, c) != (1.0 if m % 2 else -1.0) or c == 0.0:
                return False
            if m >= 2 and not abs(c) < abs(self.coefficients[m - 2]):
                return False
        return True


@dataclass(frozen=True)
class TransmonConfig:
    """Transmon island: charging energy, junction harmonics, offset charge.

    ``ncut`` is the charge-basis half-width; matrices have dimension
    2*ncut + 1.
    """

    EC: float
    harmonics: HarmonicsSet
    ng: float = 0.0
    ncut: int = 14

    def __post_init__(self) -> None:
        if self.EC <= 0:
            raise ValueError(f"EC must be positive, got {self.EC}")
        if self.ncut < 1:
            raise ValueError(f"ncut must be >= 1, got {self.ncut}")

    @property
    def dim(self) -> int:
        return 2 * self.ncut + 1


@dataclass(frozen=True)
class ResonatorConfig:
    """Readout resonator: bare frequency, charge coupling, Fock truncation."""

    omega: float
    G: float
    n_fock: int = 9

    def __post_init__(self) -> None:
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.n_fock < 1:
            raise ValueError(f"n_fock must be >= 1, got {self.n_fock}")


@dataclass(frozen=True)
class JointSystemConfig:
    """Transmon coupled to one resonator, with transmon-eigenbasis truncation."""

    transmon: TransmonConfig
    resonator: ResonatorConfig
    truncated_dim: int = 12

    def __post_init__(self) -> None:
        if not 1 <= self.truncated_dim <= self.transmon.dim:
            raise ValueError(
                f"truncated_dim must be in [1, {self.transmon.dim}], "
                f"got {self.truncated_dim}"
            )


@dataclass(frozen=True)
class DressedSpectrum:
    """Labeled eigenenergies of the joint system.

    ``energies`` maps (photon label k, transmon label j) to the eigenenergy in
    GHz; ``overlaps`` records the overlap magnitude that fixed each label.
    States whose best overlap does not exceed 1/sqrt(2) appear in
    ``ambiguous``.  ``swaps`` lists the label crossings recorded during lambda
    continuation (empty for direct max-overlap labeling).
    """

    energies: dict[tuple[int, int], float]
    overlaps: dict[tuple[int, int], float]
    ambiguous: frozenset[tuple[int, int]] = frozenset()
    swaps: tuple[tuple[float, tuple[int, int], tuple[int, int]], ...] = ()

    def energy(self, k: int, j: int) -> float:
        return self.energies[(k, j)]


@dataclass(frozen=True)
class SpectrumPrediction:
    """Offset-charge-averaged transition frequencies in GHz.

    ``f0j[j-1]`` is the 0->j transmon transition, ``f_res_j[j]`` the resonator
    frequency conditional on transmon state j, and ``delta_f0j[j-1]`` the
    charge dispersion |f_0j(ng=0) - f_0j(ng=1/2)|.
    """

    f0j: tuple[float, ...]
    f_res_j: tuple[float, ...]
    delta_f0j: tuple[float, ...]
    ambiguous: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        values = (*self.f0j, *self.f_res_j, *self.delta_f0j)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("predicted frequencies must be finite")
        if any(d < 0 for d in self.delta_f0j):
            raise ValueError("charge dispersion must be non-negative")


def build_transmon_matrix(config: TransmonConfig) -> ndarray:
    """Charge-basis transmon Hamiltonian as a dense symmetric matrix.

    The diagonal holds 4*EC*(n - ng)^2 and the m-th sub/super-diagonals the
    constant -E_Jm/2, since cos(m*phi) = (|n><n+m| + h.c.)/2.

    Raises
    ------
    TruncationError
        If the highest harmonic couples states further apart than the basis
        can represent (m_max > 2*ncut).
    """
    if config.harmonics.m_max > 2 * config.ncut:
        raise TruncationError(
            f"harmonic order {config.harmonics.m_max} needs ncut >= "
            f"{(config.harmonics.m_max + 1) // 2}, got {config.ncut}"
        )
    dim = config.dim
    charge = np.arange(-config.ncut, config.ncut + 1)
    h = np.diag(4.0 * config.EC * (charge - config.ng) ** 2)
    for m, ejm in enumerate(config.harmonics.coefficients, start=1):
        idx = np.arange(dim - m)
        h[idx, idx + m] = -ejm / 2.0
        h[idx + m, idx] = -ejm / 2.0
    return h


def diagonalize_transmon(matrix: ndarray) -> tuple[ndarray, ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    if not np.allclose(matrix, matrix.T):
        raise ValueError("matrix must be symmetric")
    return scipy.linalg.eigh(matrix)


def _charge_operator(ncut: int) -> ndarray:
    return np.diag(np.arange(-ncut, ncut + 1, dtype=float))


def _lowering_operator(n_fock: int) -> ndarray:
    return np.diag(np.sqrt(np.arange(1.0, n_fock)), 1)


def build_joint_hamiltonian(
    cfg: JointSystemConfig,
    transmon_evals: ndarray,
    transmon_evecs: ndarray,
    coupling_scale: float = 1.0,
) -> ndarray:
    """Joint Hamiltonian in the bare product basis |j> x |k>.

    H = diag(E_j) x 1 + 1 x Omega a^dag a + G <j|n|j'> x (a + a^dag),
    on the lowest ``truncated_dim`` transmon eigenstates and ``n_fock`` Fock
    states.  Row index is j*n_fock + k.  ``coupling_scale`` multiplies G (used
    by the lambda continuation).
    """
    m_dim = cfg.truncated_dim
    k_dim = cfg.resonator.n_fock
    v = transmon_evecs[:, :m_dim]
    n_sub = v.T @ _charge_operator(cfg.transmon.ncut) @ v
    a = _lowering_operator(k_dim)
    h = np.kron(np.diag(transmon_evals[:m_dim]), np.eye(k_dim))
    h += np.kron(np.eye(m_dim), cfg.resonator.omega * np.diag(np.arange(k_dim)))
    h += coupling_scale * cfg.resonator.G * np.kron(n_sub, a + a.T)
    return h


def build_product_hamiltonian(cfg: JointSystemConfig) -> ndarray:
    """Joint Hamiltonian on the full charge x Fock product basis.

    No transmon-eigenbasis truncation; dimension (2*ncut+1)*n_fock.  Used for
    cross-checking the two-stage construction and for analytic derivatives,
    where the parameter dependence must stay linear in the matrix entries.
    """
    ht = build_transmon_matrix(cfg.transmon)
    k_dim = cfg.resonator.n_fock
    a = _lowering_operator(k_dim)
    h = np.kron(ht, np.eye(k_dim))
    h += np.kron(np.eye(cfg.transmon.dim), cfg.resonator.omega * np.diag(np.arange(k_dim)))
    h += cfg.resonator.G * np.kron(_charge_operator(cfg.transmon.ncut), a + a.T)
    return h


def _greedy_match(overlap: ndarray) -> tuple[ndarray, ndarray]:
    """Assign rows to columns in descending order of |overlap|.

    Returns (assignment, strength) where assignment[col] = row and
    strength[col] is the overlap magnitude that won the column.
    """
    dim = overlap.shape[0]
    order = np.argsort(np.abs(overlap), axis=None)[::-1]
    assignment = np.full(dim, -1)
    strength = np.zeros(dim)
    row_taken = np.zeros(dim, dtype=bool)
    assigned = 0
    for flat in order:
        row, col = divmod(int(flat), dim)
        if row_taken[row] or assignment[col] >= 0:
            continue
        assignment[col] = row
        strength[col] = abs(overlap[row, col])
        row_taken[row] = True
        assigned += 1
        if assigned == dim:
            break
    return assignment, strength


def label_dressed_states(
    eigenvalues: ndarray,
    eigenvectors: ndarray,
    truncated_dim: int,
    n_fock: int,
) -> DressedSpectrum:
    """Assign (k, j) labels to joint eigenstates by largest bare overlap.

    The eigenvectors must be expressed in the bare product basis produced by
    :func:`build_joint_hamiltonian`.  Each eigenstate receives the label of
    its largest overlap; collisions are resolved by assigning in descending
    overlap order.  A state whose winning overlap does not exceed 1/sqrt(2)
    has no majority bare component and is flagged ambiguous.
    """
    dim = truncated_dim * n_fock
    if eigenvectors.shape != (dim, dim):
        raise ValueError(
            f"expected eigenvector matrix of shape {(dim, dim)}, "
            f"got {eigenvectors.shape}"
        )
    assignment, strength = _greedy_match(eigenvectors)
    energies: dict[tuple[int, int], float] = {}
    overlaps: dict[tuple[int, int], float] = {}
    ambiguous = set()
    for state in range(dim):
        j, k = divmod(int(assignment[state]), n_fock)
        energies[(k, j)] = float(eigenvalues[state])
        overlaps[(k, j)] = float(strength[state])
        if strength[state] <= AMBIGUITY_THRESHOLD:
            ambiguous.add((k, j))
    return DressedSpectrum(energies, overlaps, frozenset(ambiguous))


def lambda_continuation_labels(
    cfg: JointSystemConfig,
    lambdas: ndarray | tuple[float, ...] = tuple(np.linspace(0.0, 1.0, 101)),
    step_overlap_min: float = 0.9,
    k_max: int | None = None,
    j_max: int | None = None,
) -> DressedSpectrum:
    """Label dressed states by tracing them from the uncoupled system.

    Diagonalizes H(lambda) with coupling lambda*G along a monotone grid from
    0 to 1, matching eigenvectors between successive steps by largest mutual
    overlap.  Labels follow the bare character through avoided crossings: a
    narrow crossing completes within one step and the step match itself
    exchanges the pair, while a wide crossing is resolved by swapping the two
    labels once their dominant bare components have exchanged.  Each swap is
    recorded with the lambda at which it completes.

    When ``k_max``/``j_max`` are given, only states starting in that bare
    (k, j) box are traced; high-lying states often pass through much narrower
    avoided crossings than the low-energy window of interest and would force
    a far denser grid on the whole computation.

    Raises
    ------
    ContinuationGridError
        If a traced state's best match between adjacent steps falls below
        ``step_overlap_min``; the grid cannot distinguish a swap from a
        hybridized crossing.
    """
    grid = np.asarray(lambdas, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("lambda grid must run monotonically from 0 to 1")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be strictly increasing")

    evals_t, evecs_t = diagonalize_transmon(build_transmon_matrix(cfg.transmon))
    n_fock = cfg.resonator.n_fock
    dim = cfg.truncated_dim * n_fock
    k_hi = n_fock - 1 if k_max is None else min(k_max, n_fock - 1)
    j_hi = cfg.truncated_dim - 1 if j_max is None else min(j_max, cfg.truncated_dim - 1)
    labels = np.array(
        [j * n_fock + k for j in range(j_hi + 1) for k in range(k_hi + 1)]
    )
    n_traced = labels.size

    def eig(lam: float) -> tuple[ndarray, ndarray]:
        h = build_joint_hamiltonian(cfg, evals_t, evecs_t, coupling_scale=lam)
        return scipy.linalg.eigh(h)

    energies, vectors = eig(grid[0])
    # At lambda=0 the matrix is diagonal, so each eigencolumn is a bare
    # product state and tracing starts from an exact one-to-one match.
    columns = np.argmax(np.abs(vectors[labels, :]), axis=1)
    strength0 = np.abs(vectors[labels, columns])
    if np.any(strength0 < 1.0 - 1e-9) or np.unique(columns).size != n_traced:
        raise ContinuationGridError("uncoupled eigenstates are not bare product states")

    swaps: list[tuple[float, tuple[int, int], tuple[int, int]]] = []
    overlap = np.ones(n_traced)
    for lam in grid[1:]:
        energies, vectors_next = eig(lam)
        match = np.abs(vectors[:, columns].T @ vectors_next)
        order = np.argsort(match, axis=None)[::-1]
        new_columns = np.full(n_traced, -1)
        overlap = np.zeros(n_traced)
        col_taken = np.zeros(dim, dtype=bool)
        assigned = 0
        for flat in order:
            trace, col = divmod(int(flat), dim)
            if new_columns[trace] >= 0 or col_taken[col]:
                continue
            new_columns[trace] = col
            overlap[trace] = match[trace, col]
            col_taken[col] = True
            assigned += 1
            if assigned == n_traced:
                break
        if np.any(overlap < step_overlap_min):
            raise ContinuationGridError(
                f"best eigenvector match {float(overlap.min()):.3f} < "
                f"{step_overlap_min} at lambda={lam:.4f}; refine the grid"
            )

        def record(a: int, b: int) -> None:
            j_a, k_a = divmod(int(labels[a]), n_fock)
            j_b, k_b = divmod(int(labels[b]), n_fock)
            swaps.append((float(lam), (k_a, j_a), (k_b, j_b)))

        # Narrow crossing: the step match itself exchanged traced columns.
        prev_holder = {int(c): t for t, c in enumerate(columns)}
        for trace in range(n_traced):
            other = prev_holder.get(int(new_columns[trace]), trace)
            if other > trace:
                record(trace, other)
        columns = new_columns

        # Wide crossing: dominant bare components exchanged while the step
        # match stayed on the adiabatic branch.  Swap label pairs (or cycles)
        # once every member has a confident majority on its new column.
        character = np.abs(vectors_next[labels][:, columns])
        owner, _ = _greedy_match(character)
        seen = np.zeros(n_traced, dtype=bool)
        for start in range(n_traced):
            if seen[start] or owner[start] == start:
                continue
            cycle = [start]
            seen[start] = True
            nxt = int(owner[start])
            while nxt != start:
                cycle.append(nxt)
                seen[nxt] = True
                nxt = int(owner[nxt])
            if all(character[owner[u], u] > AMBIGUITY_THRESHOLD for u in cycle):
                relabeled = columns.copy()
                for u in cycle:
                    relabeled[owner[u]] = columns[u]
                    if owner[u] > u:
                        record(int(owner[u]), u)
                columns = relabeled
        vectors = vectors_next

    final = np.abs(vectors[labels, columns])
    energy_map: dict[tuple[int, int], float] = {}
    overlap_map: dict[tuple[int, int], float] = {}
    ambiguous = set()
    for trace in range(n_traced):
        j, k = divmod(int(labels[trace]), n_fock)
        energy_map[(k, j)] = float(energies[columns[trace]])
        overlap_map[(k, j)] = float(final[trace])
        if final[trace] <= AMBIGUITY_THRESHOLD:
            ambiguous.add((k, j))
    return DressedSpectrum(energy_map, overlap_map, frozenset(ambiguous), tuple(swaps))


def _dressed_at(cfg: JointSystemConfig, ng: float) -> DressedSpectrum:
    transmon = replace(cfg.transmon, ng=ng)
    evals, evecs = diagonalize_transmon(build_transmon_matrix(transmon))
    h = build_joint_hamiltonian(replace(cfg, transmon=transmon), evals, evecs)
    return label_dressed_states(*scipy.linalg.eigh(h), cfg.truncated_dim, cfg.resonator.n_fock)


def predict_spectrum(cfg: JointSystemConfig, j_max: int = 6) -> SpectrumPrediction:
    """Offset-charge-averaged transitions f_0j, f_res,j and dispersion delta f_0j.

    Diagonalizes at ng = 0 and ng = 1/2 regardless of the configured ng;
    f_0j and f_res,j are the averages of E_0j - E_00 and E_1j - E_0j over the
    two offset charges, and delta f_0j = |f_0j(0) - f_0j(1/2)|.  Ambiguity
    flags from the labeling propagate into ``ambiguous`` (by transmon index j).
    """
    if j_max >= cfg.truncated_dim:
        raise ValueError(
            f"j_max={j_max} requires truncated_dim > j_max, got {cfg.truncated_dim}"
        )
    if cfg.resonator.n_fock < 2:
        raise ValueError("resonator needs n_fock >= 2 to resolve f_res,j")
    spectra = [_dressed_at(cfg, ng) for ng in (0.0, 0.5)]

    ambiguous: set[int] = set()
    for spec in spectra:
        for (k, j) in spec.ambiguous:
            if k <= 1 and j <= j_max:
                ambiguous.add(j)

    def averaged(k: int, j: int, k0: int, j0: int) -> float:
        return float(
            np.mean([s.energy(k, j) - s.energy(k0, j0) for s in spectra])
        )

    f0j = tuple(averaged(0, j, 0, 0) for j in range(1, j_max + 1))
    f_res = tuple(averaged(1, j, 0, j) for j in range(0, j_max + 1))
    delta = tuple(
        abs(
            (spectra[0].energy(0, j) - spectra[0].energy(0, 0))
            - (spectra[1].energy(0, j) - spectra[1].energy(0, 0))
        )
        for j in range(1, j_max + 1)
    )
    return SpectrumPrediction(f0j, f_res, delta, frozenset(ambiguous))


def convergence_check(cfg: JointSystemConfig, j_max: int = 6) -> float:
    """Largest change of any f_0j (GHz) when all truncations are enlarged.

    Recomputes the spectrum with ncut+4, truncated_dim+2, n_fock+2 and
    returns max_j |f_0j - f_0j'|; a converged configuration stays below
    1e-6 GHz.
    """
    base = predict_spectrum(cfg, j_max)
    enlarged = JointSystemConfig(
        transmon=replace(cfg.transmon, ncut=cfg.transmon.ncut + 4),
        resonator=replace(cfg.resonator, n_fock=cfg.resonator.n_fock + 2),
        truncated_dim=cfg.truncated_dim + 2,
    )
    refined = predict_spectrum(enlarged, j_max)
    return float(np.max(np.abs(np.array(base.f0j) - np.array(refined.f0j))))


def potential(h: HarmonicsSet, phi: float | ndarray) -> float | ndarray:
    """Junction potential V(phi) = -sum_m E_Jm cos(m*phi) in GHz."""
    phi = np.asarray(phi, dtype=float)
    orders = np.arange(1, h.m_max + 1)
    v = -np.cos(np.multiply.outer(phi, orders)) @ np.array(h.coefficients)
    return float(v) if v.ndim == 0 else v


def potential_height(h: HarmonicsSet) -> float:
    """Well height V(pi) - V(0) = 2*(E_J1 + E_J3 + E_J5 + ...)."""
    return 2.0 * sum(h.coefficients[0::2])


def cpr(h: HarmonicsSet, phi: float | ndarray) -> float | ndarray:
    """Current-phase relation I(phi) = (2e/hbar) h sum_m m E_Jm sin(m*phi), in nA."""
    phi = np.asarray(phi, dtype=float)
    orders = np.arange(1, h.m_max + 1)
    weights = _NA_PER_GHZ * orders * np.array(h.coefficients)
    current = np.sin(np.multiply.outer(phi, orders)) @ weights
    return float(current) if current.ndim == 0 else current


def _golden_max(f, a: float, b: float, tol: float = 1e-12) -> float:
    """Maximum of a unimodal f on [a, b] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return max(fc, fd)


def critical_current(h: HarmonicsSet) -> float:
    """Critical current max_phi |I(phi)| in nA.

    Scans 4096 uniform points on [-pi, pi) and refines the best bracket by
    golden-section search; adequate for up to ~20 harmonics.
    """
    grid = np.linspace(-np.pi, np.pi, 4096, endpoint=False)
    magnitude = np.abs(cpr(h, grid))
    best = int(np.argmax(magnitude))
    step = grid[1] - grid[0]
    refined = _golden_max(
        lambda phi: abs(cpr(h, phi)), grid[best] - step, grid[best] + step
    )
    return float(max(magnitude[best], refined))


def perturbative_freq_anharmonicity(h: HarmonicsSet, EC: float) -> tuple[float, float]:
    """Quartic-expansion estimates (omega, alpha) in GHz; diagnostic only.

    omega ~ sqrt(8*EC*E_J1*(1 + sum m^2 E_Jm/E_J1)) + alpha and
    alpha ~ -EC*(1 + sum m^4 E_Jm/E_J1)/(1 + sum m^2 E_Jm/E_J1), with the
    sums over m >= 2.  Accurate to O(EC/omega) deep in the transmon regime.

    Raises
    ------
    ValueError
        If E_J1 <= 0 or the effective curvature 1 + sum m^2 E_Jm/E_J1 is not
        positive (no harmonic well to expand around).
    """
    ej1 = h.coefficients[0]
    if ej1 <= 0:
        raise ValueError("expansion requires E_J1 > 0")
    orders = np.arange(2, h.m_max + 1)
    ratios = np.array(h.coefficients[1:]) / ej1
    s2 = float(np.sum(orders**2 * ratios))
    s4 = float(np.sum(orders**4 * ratios))
    if 1.0 + s2 <= 0:
        raise ValueError(f"curvature 1 + sum m^2 E_Jm/E_J1 = {1 + s2:.4g} <= 0")
    alpha = -EC * (1.0 + s4) / (1.0 + s2)
    omega = math.sqrt(8.0 * EC * ej1 * (1.0 + s2)) + alpha
    return omega, alpha
