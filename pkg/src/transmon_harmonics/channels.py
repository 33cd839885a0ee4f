"""Channel-transparency models for the junction harmonic content.

A conduction channel of transparency T carries the current-phase relation
I(phi) proportional to T*sin(phi)/sqrt(1 - T*sin(phi/2)**2).  Expanding it
in sin(m*phi) gives weights c_m(T), and a junction with channels {T_n} has
E_Jm proportional to (1/m) * sum_n c_m(T_n), so the measured harmonic
ratios constrain the transparency distribution.  This module evaluates
c_m, synthesizes harmonic sets from transparency models, and inverts the
single-channel bound that limits the largest transparency compatible with
an observed ratio.

Thicknesses are in nm; energies follow the E/h convention in GHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad

from .spectrum import HarmonicsSet

__all__ = [
    "ALOX_A_SQUARED",
    "ALOX_DECAY_LENGTH",
    "MAX_HARMONIC_ORDER",
    "QuadratureError",
    "Channel",
    "SingleChannel",
    "PointContact",
    "UniformCutoff",
    "Universal",
    "Mesoscopic",
    "ParamAB",
    "ParamABCD",
    "ExplicitChannels",
    "TransparencyModel",
    "BarrierMoments",
    "fourier_coeff",
    "channel_cpr",
    "point_contact_ratio",
    "low_transparency_ratio",
    "stirling_ratio",
    "ejm_from_model",
    "transparency_of_thickness",
    "thickness_of_transparency",
    "thickness_density",
    "transparency_density",
    "barrier_moment",
    "barrier_moments",
    "ratio_bound",
    "tmax_bound",
]

# Harmonic orders beyond this are numerically irrelevant for any model
# considered here; 10 suffices for scans, 25 for diagnostics.
MAX_HARMONIC_ORDER = 25

# Barrier defaults for AlOx: T(d) = 1/(1 + a^2 sinh^2(d/d0)).
ALOX_A_SQUARED = 2.87
ALOX_DECAY_LENGTH = 0.21

_EULER_GAMMA = 0.5772156649015328606
_PSI_HALF = -_EULER_GAMMA - 2.0 * math.log(2.0)

# The Gauss series for c_m converges like T**k; below this distance from
# T = 1 the log-type expansion around T = 1 is both safe (terms decay
# from the first one) and cheap.
def _near_one(m: int, transparency: float) -> bool:
    return (1.0 - transparency) * (m + 2) ** 2 <= 1.0


class QuadratureError(RuntimeError):
    """A transparency-distribution integral failed to converge."""


def _digamma_ladder(start_half: bool, steps: int, count: int) -> list[float]:
    """psi(x0 + steps + n) for n = 0..count-1, x0 = 1/2 or 1, by recurrence."""
    value = _PSI_HALF if start_half else -_EULER_GAMMA
    x = 0.5 if start_half else 1.0
    for _ in range(steps):
        value += 1.0 / x
        x += 1.0
    out = [value]
    for _ in range(count - 1):
        value += 1.0 / x
        x += 1.0
        out.append(value)
    return out


def _gauss_forward(m: int, transparency: float) -> tuple[float, float]:
    """2F1(m-1/2, m+1/2; 2m+1; T) by the forward series, T bounded from 1.

    Returns (mantissa, log_scale): the value is mantissa * exp(log_scale).
    For large m the terms grow enormously before turning over, so the
    accumulator is rescaled on the fly.
    """
    a, b, c = m - 0.5, m + 0.5, 2 * m + 1
    total = term = 1.0
    log_scale = 0.0
    k = 0
    # Tail is bounded by a geometric series of ratio ~T.
    while term > 1e-17 * total * (1.0 - transparency):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * transparency
        total += term
        k += 1
        if total > 1e250:
            total *= 1e-250
            term *= 1e-250
            log_scale += 250.0 * math.log(10.0)
        if k > 200_000:
            raise RuntimeError(f"hypergeometric series stalled at m={m}, T={transparency}")
    return total, log_scale


def _gauss_near_one(m: int, transparency: float) -> tuple[float, float]:
    """Log-type expansion of the same 2F1 in powers of 1 - T.

    The parameters satisfy c - a - b = 1, the degenerate case where the
    connection to 1 - T involves log(1 - T) and digamma terms.  Used only
    where the leading terms already decay, so there is no cancellation.
    Returns (mantissa, log_scale) like :func:`_gauss_forward`.
    """
    u = 1.0 - transparency
    lg = math.lgamma
    # log of 2F1 at T = 1 and of the ratio of the two Gamma prefactors
    log_first = lg(2 * m + 1) - lg(m + 0.5) - lg(m + 1.5)
    log_ratio = lg(m + 1.5) - lg(m - 0.5)  # second prefactor over first
    if u == 0.0:
        return 1.0, log_first
    a, b = m - 0.5, m + 0.5
    count = 120
    psi_int = _digamma_ladder(False, 0, count + 1)  # psi(1 + n)
    psi_a = _digamma_ladder(True, m, count)  # psi(a + 1 + n)
    psi_b = _digamma_ladder(True, m + 1, count)  # psi(b + 1 + n)
    logu = math.log(u)
    total = 0.0
    coeff = 1.0
    for n in range(count):
        total += coeff * (logu - psi_int[n] - psi_int[n + 1] + psi_a[n] + psi_b[n])
        coeff *= (a + 1 + n) * (b + 1 + n) / ((n + 1) * (n + 2)) * u
        if abs(coeff) * (abs(logu) + 10.0) < 1e-17 * abs(total):
            break
    return 1.0 + math.exp(log_ratio) * u * total, log_first


def fourier_coeff(m: int, transparency: float) -> float:
    """Weight c_m(T) of sin(m*phi) in the single-channel current.

    c_m(T) = C(2m-2, m-1) * (-1)**(m+1) * (T**m / 16**(m-1))
             * 2F1(m-1/2, m+1/2; 2m+1; T).

    Signs alternate with m and c_1(T) = T + T^2/4 + ... >= T.
    """
    if m < 1:
        raise ValueError(f"harmonic order must be >= 1, got {m}")
    if not 0.0 <= transparency <= 1.0:
        raise ValueError(f"transparency must lie in [0, 1], got {transparency}")
    if transparency == 0.0:
        return 0.0
    sign = 1.0 if m % 2 else -1.0
    if transparency == 1.0:
        # Gauss value folded into the prefactor; stable at any order.
        return sign * 8.0 * m / ((m + 0.5) * (2 * m - 1) * math.pi)
    if _near_one(m, transparency):
        hyp, log_scale = _gauss_near_one(m, transparency)
    else:
        hyp, log_scale = _gauss_forward(m, transparency)
    if m <= 200 and log_scale == 0.0:
        return sign * math.comb(2 * m - 2, m - 1) * transparency**m / 16.0 ** (m - 1) * hyp
    # The binomial and the 16**(m-1) factors overflow a float well before
    # the prefactor times the hypergeometric value stops being modest.
    lg = math.lgamma
    log_pref = (
        lg(2 * m - 1)
        - 2.0 * lg(m)
        + m * math.log(transparency)
        - (m - 1) * math.log(16.0)
    )
    return sign * hyp * math.exp(log_pref + log_scale)


def channel_cpr(transparency: float, phase: float) -> float:
    """Supercurrent of one channel, normalized to the gap scale.

    Equals sum_m c_m(T) sin(m*phase); at T = 1 the sum develops a jump
    at phase = pi where the square root vanishes.
    """
    s = math.sin(0.5 * phase)
    return transparency * math.sin(phase) / math.sqrt(1.0 - transparency * s * s)


def point_contact_ratio(m: int) -> float:
    """E_Jm/E_J1 of a fully open channel: 3*(-1)**(m+1) / (4m^2 - 1)."""
    if m < 1:
        raise ValueError(f"harmonic order must be >= 1, got {m}")
    sign = 1.0 if m % 2 else -1.0
    return 3.0 * sign / (4.0 * m * m - 1.0)


def low_transparency_ratio(m: int, transparency: float) -> float:
    """Leading-order E_Jm/E_J1 of a single channel as T -> 0.

    (-1)**(m+1) * C(2m-2, m-1) * (T/16)**(m-1) / m; the smallest ratio any
    single channel of that transparency can produce.
    """
    if m < 1:
        raise ValueError(f"harmonic order must be >= 1, got {m}")
    sign = 1.0 if m % 2 else -1.0
    return sign * math.comb(2 * m - 2, m - 1) * (transparency / 16.0) ** (m - 1) / m


def stirling_ratio(m: int, transparency: float) -> float:
    """Stirling form of :func:`low_transparency_ratio` for large m."""
    if m < 1:
        raise ValueError(f"harmonic order must be >= 1, got {m}")
    sign = 1.0 if m % 2 else -1.0
    return sign * (transparency / 4.0) ** (m - 1) / (math.sqrt(math.pi) * m**1.5)


@dataclass(frozen=True)
class Channel:
    """One conduction channel with transparency in [0, 1]."""

    transparency: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.transparency <= 1.0:
            raise ValueError(f"transparency must lie in [0, 1], got {self.transparency}")


@dataclass(frozen=True)
class SingleChannel:
    """A junction carried by one channel of transparency T."""

    transparency: float

    def __post_init__(self) -> None:
        if not 0.0 < self.transparency <= 1.0:
            raise ValueError(f"transparency must lie in (0, 1], got {self.transparency}")


@dataclass(frozen=True)
class PointContact:
    """A single fully open channel (T = 1)."""


@dataclass(frozen=True)
class UniformCutoff:
    """Transparencies uniformly distributed on [0, cutoff]."""

    cutoff: float

    def __post_init__(self) -> None:
        if not 0.0 < self.cutoff <= 1.0:
            raise ValueError(f"cutoff must lie in (0, 1], got {self.cutoff}")


@dataclass(frozen=True)
class Universal:
    """Density 1/(T**exponent * sqrt(1 - T)) on (0, 1).

    exponent = 1 is the distribution of a diffusive contact; 1/2 and 3/2
    bracket it.  Only these three exponents are supported; 3/2 is not
    normalizable, so only ratio integrals are defined for it.
    """

    exponent: float

    def __post_init__(self) -> None:
        if self.exponent not in (0.5, 1.0, 1.5):
            raise ValueError(f"exponent must be 0.5, 1 or 1.5, got {self.exponent}")


@dataclass(frozen=True)
class Mesoscopic:
    """Gaussian barrier-thickness disorder mapped through the tunnel law.

    The local thickness d is normal with mean ``mean_thickness`` and width
    ``sigma``, truncated to d >= 0; each patch transmits with
    T(d) = 1/(1 + a^2 sinh^2(d/d0)).
    """

    mean_thickness: float
    sigma: float
    a_squared: float = ALOX_A_SQUARED
    decay_length: float = ALOX_DECAY_LENGTH

    def __post_init__(self) -> None:
        for name in ("mean_thickness", "sigma", "a_squared", "decay_length"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ParamAB:
    """Two-parameter ratio law E_Jm/E_J1 = (-1)**(m+1) / (a**m * m**b).

    Applies for m >= 2; the first ratio is 1 by definition.
    """

    a: float
    b: float

    def __post_init__(self) -> None:
        if not self.a >= 1.0:
            raise ValueError(f"a must be >= 1 for decaying ratios, got {self.a}")


@dataclass(frozen=True)
class ParamABCD:
    """Four-parameter ratio law E_Jm/E_J1 = (-1)**(m+1) * c / (a**m * (m**b - d)).

    (a, b, c, d) = (1, 2, 3/4, 1/4) reproduces the point contact exactly;
    (4/T, 3/2, 4/(sqrt(pi) T), 2*sqrt(2) - 4/sqrt(pi)) tracks a single
    channel of low transparency T.  Applies for m >= 2; the first ratio
    is 1 by definition.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise ValueError(f"a must be positive, got {self.a}")


@dataclass(frozen=True)
class ExplicitChannels:
    """A junction specified channel by channel."""

    channels: tuple[Channel, ...]

    def __post_init__(self) -> None:
        if len(self.channels) < 1:
            raise ValueError("at least one channel is required")


TransparencyModel = Union[
    SingleChannel,
    PointContact,
    UniformCutoff,
    Universal,
    Mesoscopic,
    ParamAB,
    ParamABCD,
    ExplicitChannels,
]


def _quad(
    integrand: Callable[[float], float],
    lo: float,
    hi: float,
    what: str,
    points: list[float] | None = None,
) -> float:
    out = quad(
        integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=300, points=points, full_output=True
    )
    if len(out) > 3:
        raise QuadratureError(f"{what}: {out[3]}")
    value, abserr, info = out
    if abserr > 1e-9 * max(abs(value), 1e-300):
        raise QuadratureError(
            f"{what}: estimated error {abserr:.2e} on value {value:.6e} "
            f"after {info['neval']} evaluations"
        )
    return value


def transparency_of_thickness(
    thickness: float,
    a_squared: float = ALOX_A_SQUARED,
    decay_length: float = ALOX_DECAY_LENGTH,
) -> float:
    """Tunnel transparency of a barrier patch of the given thickness (nm)."""
    if thickness < 0.0:
        raise ValueError(f"thickness must be >= 0, got {thickness}")
    x = thickness / decay_length
    if x > 350.0:
        # sinh(x)**2 would overflow; the transparency has long underflowed.
        return 0.0
    s = math.sinh(x)
    return 1.0 / (1.0 + a_squared * s * s)


def thickness_of_transparency(
    transparency: float,
    a_squared: float = ALOX_A_SQUARED,
    decay_length: float = ALOX_DECAY_LENGTH,
) -> float:
    """Inverse of :func:`transparency_of_thickness` on (0, 1]."""
    if not 0.0 < transparency <= 1.0:
        raise ValueError(f"transparency must lie in (0, 1], got {transparency}")
    s = math.sqrt((1.0 - transparency) / (a_squared * transparency))
    return decay_length * math.asinh(s)


def thickness_density(thickness: float, mean_thickness: float, sigma: float) -> float:
    """Truncated-Gaussian thickness density, normalized on d >= 0."""
    if thickness < 0.0:
        return 0.0
    norm = 2.0 / (1.0 + math.erf(mean_thickness / (math.sqrt(2.0) * sigma)))
    z = (thickness - mean_thickness) / sigma
    return norm * math.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * sigma)


def transparency_density(
    transparency: float,
    mean_thickness: float,
    sigma: float,
    a_squared: float = ALOX_A_SQUARED,
    decay_length: float = ALOX_DECAY_LENGTH,
) -> float:
    """Push-forward of :func:`thickness_density` through the tunnel law.

    Written directly in transparency variables: with
    f(T) = log(sqrt(T) / (sqrt(1-T) + sqrt(1-T+a^2 T))) = -d(T)/d0 - log(a),
    the density is the Gaussian of f(T) + dbar/d0 + log(a) times |dd/dT|.
    Diverges like 1/sqrt(1-T) at T -> 1 (still integrable) and vanishes
    faster than any power at T -> 0, so T = 0 returns the limit 0.
    """
    if not 0.0 <= transparency < 1.0:
        raise ValueError(f"transparency must lie in [0, 1), got {transparency}")
    if transparency == 0.0:
        return 0.0
    t = transparency
    a = math.sqrt(a_squared)
    dt = mean_thickness / decay_length
    st = sigma / decay_length
    root1 = math.sqrt(1.0 - t)
    root2 = math.sqrt(1.0 - t + a_squared * t)
    f = math.log(math.sqrt(t) / (root1 + root2))
    alpha = dt + math.log(a)
    norm = 2.0 / (1.0 + math.erf(dt / (math.sqrt(2.0) * st)))
    jac = 1.0 / (2.0 * t * root1 * root2)
    gauss = math.exp(-0.5 * ((f + alpha) / st) ** 2) / (math.sqrt(2.0 * math.pi) * st)
    return norm * jac * gauss


def _channel_weights(channels: tuple[float, ...], m_max: int) -> np.ndarray:
    weights = np.empty(m_max)
    for m in range(1, m_max + 1):
        weights[m - 1] = sum(fourier_coeff(m, t) for t in channels) / m
    return weights


def _uniform_cutoff_ratio(m: int, cutoff: float) -> float:
    """Ratio of a uniform distribution on [0, cutoff] via a 3F2 series.

    Integrating the c_m series term by term gives
    (-1)**(m+1) * (2/(m(m+1))) * C(2m-2, m-1) * (cutoff/16)**(m-1)
    * 3F2(m-1/2, m+1/2, m+1; 2m+1, m+2; cutoff) / 3F2(1/2, 3/2, 2; 3, 3; cutoff).
    """

    def series(mm: int) -> float:
        a1, a2, a3 = mm - 0.5, mm + 0.5, mm + 1.0
        b1, b2 = 2.0 * mm + 1.0, mm + 2.0
        total = term = 1.0
        k = 0
        while term > 1e-16 * total * (1.0 - cutoff + 1e-6):
            term *= (a1 + k) * (a2 + k) * (a3 + k) / ((b1 + k) * (b2 + k) * (1 + k)) * cutoff
            total += term
            k += 1
        return total

    sign = 1.0 if m % 2 else -1.0
    pref = 2.0 / (m * (m + 1.0)) * math.comb(2 * m - 2, m - 1) * (cutoff / 16.0) ** (m - 1)
    return sign * pref * series(m) / series(1)


def _uniform_cutoff_weights(cutoff: float, m_max: int) -> np.ndarray:
    # The 3F2 series converges geometrically only away from cutoff = 1;
    # close to it, integrate c_m directly.
    if cutoff <= 0.98:
        return np.array([_uniform_cutoff_ratio(m, cutoff) for m in range(1, m_max + 1)])
    weights = np.empty(m_max)
    for m in range(1, m_max + 1):
        integral = _quad(
            lambda t, m=m: fourier_coeff(m, t), 0.0, cutoff, f"uniform-cutoff order {m}"
        )
        weights[m - 1] = integral / m
    return weights


def _universal_weights(exponent: float, m_max: int) -> np.ndarray:
    if exponent == 1.0:
        # Closed form: E_Jm proportional to (-1)**(m+1) * 8 / (m (4m^2 - 1)).
        return np.array(
            [(1.0 if m % 2 else -1.0) * 8.0 / (m * (4.0 * m * m - 1.0)) for m in range(1, m_max + 1)]
        )
    weights = np.empty(m_max)
    for m in range(1, m_max + 1):
        # T = 1 - u^2 absorbs the 1/sqrt(1-T) endpoint into the measure.
        integral = 2.0 * _quad(
            lambda u, m=m: fourier_coeff(m, 1.0 - u * u) * (1.0 - u * u) ** -exponent,
            0.0,
            1.0,
            f"universal p={exponent} order {m}",
        )
        weights[m - 1] = integral / m
    return weights


def _mesoscopic_weights(model: Mesoscopic, m_max: int) -> np.ndarray:
    # Thickness-domain quadrature: the integrand is smooth there, while in
    # transparency variables the density has an endpoint singularity.
    hi = model.mean_thickness + 12.0 * model.sigma
    weights = np.empty(m_max)
    for m in range(1, m_max + 1):
        integral = _quad(
            lambda d, m=m: thickness_density(d, model.mean_thickness, model.sigma)
            * fourier_coeff(
                m, transparency_of_thickness(d, model.a_squared, model.decay_length)
            ),
            0.0,
            hi,
            f"mesoscopic order {m}",
            points=[model.mean_thickness],
        )
        weights[m - 1] = integral / m
    return weights


def ejm_from_model(
    model: TransparencyModel,
    m_max: int = 10,
    *,
    ej1: float | None = None,
    gap: float | None = None,
) -> HarmonicsSet:
    """Josephson harmonics E_J1..E_Jm_max implied by a transparency model.

    By default the set is normalized to E_J1 = 1, i.e. the coefficients
    are the ratios E_Jm/E_J1.  Pass ``ej1`` (GHz) to scale the ratios, or
    ``gap`` (GHz) to get absolute energies E_Jm = (gap/4)(1/m) sum_n c_m(T_n)
    for models with an explicit channel count (single channel, point
    contact, explicit list).  Distribution and parametric models absorb
    the overall scale into E_J1, so ``gap`` is rejected for them.
    """
    if not 1 <= m_max <= MAX_HARMONIC_ORDER:
        raise ValueError(f"m_max must lie in [1, {MAX_HARMONIC_ORDER}], got {m_max}")
    if ej1 is not None and gap is not None:
        raise ValueError("ej1 and gap are mutually exclusive")

    countable = isinstance(model, (SingleChannel, PointContact, ExplicitChannels))
    if gap is not None and not countable:
        raise ValueError(f"absolute energies are undefined for {type(model).__name__}")

    if isinstance(model, SingleChannel):
        weights = _channel_weights((model.transparency,), m_max)
    elif isinstance(model, PointContact):
        if gap is not None:
            weights = _channel_weights((1.0,), m_max)
        else:
            weights = np.array([point_contact_ratio(m) for m in range(1, m_max + 1)])
    elif isinstance(model, ExplicitChannels):
        weights = _channel_weights(
            tuple(ch.transparency for ch in model.channels), m_max
        )
    elif isinstance(model, UniformCutoff):
        weights = _uniform_cutoff_weights(model.cutoff, m_max)
    elif isinstance(model, Universal):
        weights = _universal_weights(model.exponent, m_max)
    elif isinstance(model, Mesoscopic):
        weights = _mesoscopic_weights(model, m_max)
    elif isinstance(model, ParamAB):
        weights = np.array(
            [1.0]
            + [
                (1.0 if m % 2 else -1.0) / (model.a**m * m**model.b)
                for m in range(2, m_max + 1)
            ]
        )
    elif isinstance(model, ParamABCD):
        denoms = [m**model.b - model.d for m in range(2, m_max + 1)]
        if any(den == 0.0 for den in denoms):
            raise ValueError("m**b - d vanishes at a requested order")
        weights = np.array(
            [1.0]
            + [
                (1.0 if m % 2 else -1.0) * model.c / (model.a**m * den)
                for m, den in zip(range(2, m_max + 1), denoms)
            ]
        )
    else:
        raise TypeError(f"unknown transparency model {type(model).__name__}")

    if gap is not None:
        return HarmonicsSet(tuple(0.25 * gap * w for w in weights))
    if weights[0] == 0.0:
        raise ValueError("model carries no first harmonic")
    scale = ej1 if ej1 is not None else 1.0
    return HarmonicsSet(tuple(scale * w / weights[0] for w in weights))


@dataclass(frozen=True)
class BarrierMoments:
    """First two transparency moments of a barrier distribution.

    ``second_over_mean`` is <T^2>/<T>, the natural measure of how far the
    distribution reaches toward high transparency; Cauchy-Schwarz forces
    it to be at least ``mean``.
    """

    mean: float
    second_over_mean: float

    def __post_init__(self) -> None:
        if not 0.0 < self.mean <= 1.0:
            raise ValueError(f"mean transparency must lie in (0, 1], got {self.mean}")
        if not self.mean <= self.second_over_mean <= 1.0:
            raise ValueError(
                f"<T^2>/<T> must lie in [mean, 1], got {self.second_over_mean}"
            )


def barrier_moment(
    mean_thickness: float,
    sigma: float,
    n: int,
    a_squared: float = ALOX_A_SQUARED,
    decay_length: float = ALOX_DECAY_LENGTH,
) -> tuple[float, float]:
    """<T^n> of the mesoscopic barrier: (quadrature value, closed estimate).

    The closed estimate replaces sinh by an exponential and extends the
    Gaussian to the saddle; it degrades when the distribution reaches
    transparencies of order one.
    """
    if n < 1:
        raise ValueError(f"moment order must be >= 1, got {n}")
    Mesoscopic(mean_thickness, sigma, a_squared, decay_length)  # validates inputs
    hi = mean_thickness + 12.0 * sigma
    numeric = _quad(
        lambda d: thickness_density(d, mean_thickness, sigma)
        * transparency_of_thickness(d, a_squared, decay_length) ** n,
        0.0,
        hi,
        f"barrier moment n={n}",
        points=[mean_thickness],
    )

    root2 = math.sqrt(2.0)
    arg = mean_thickness / (root2 * sigma)
    norm = 1.0 / (1.0 - 0.5 * math.erfc(arg))
    shift = n * sigma / decay_length
    closed = (
        norm
        * (4.0 / a_squared) ** n
        * math.exp(2.0 * shift * (shift - mean_thickness / sigma))
        * (1.0 - 0.5 * math.erfc(arg - root2 * shift))
    )
    return numeric, closed


def barrier_moments(
    mean_thickness: float,
    sigma: float,
    a_squared: float = ALOX_A_SQUARED,
    decay_length: float = ALOX_DECAY_LENGTH,
) -> BarrierMoments:
    """Quadrature <T> and <T^2>/<T> for the mesoscopic barrier."""
    first, _ = barrier_moment(mean_thickness, sigma, 1, a_squared, decay_length)
    second, _ = barrier_moment(mean_thickness, sigma, 2, a_squared, decay_length)
    return BarrierMoments(mean=first, second_over_mean=second / first)


def ratio_bound(t_max: float, m: int = 2) -> float:
    """Largest |E_Jm/E_J1| any channel mix with transparencies <= t_max allows.

    Since c_1(T) >= T and |c_m|/(m*T) grows with T, every mix obeys
    |E_Jm/E_J1| <= |c_m(t_max)|/(m*t_max); the point-contact ratio caps the
    bound where that expression exceeds it, which makes it flat near 1.
    """
    if m < 2:
        raise ValueError(f"harmonic order must be >= 2, got {m}")
    if not 0.0 < t_max <= 1.0:
        raise ValueError(f"t_max must lie in (0, 1], got {t_max}")
    loose = abs(fourier_coeff(m, t_max)) / (m * t_max)
    return min(loose, abs(point_contact_ratio(m)))


def tmax_bound(ratio: float, m: int = 2) -> float:
    """Smallest largest-transparency compatible with an observed |E_Jm/E_J1|.

    Inverts :func:`ratio_bound` by bisection to 1e-10.  Ratios above the
    point-contact value cannot be produced by any transparency mix and
    raise ValueError.
    """
    if m < 2:
        raise ValueError(f"harmonic order must be >= 2, got {m}")
    pc = abs(point_contact_ratio(m))
    if not 0.0 < ratio <= pc:
        raise ValueError(
            f"|E_Jm/E_J1| = {ratio} is infeasible for m = {m}; "
            f"channel mixes reach at most {pc:.6f}"
        )
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if abs(fourier_coeff(m, mid)) / (m * mid) < ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
