"""Closed-form and single-integral BER expressions.

The RIS-averaged expressions rest on a Gaussian (CLT) model of the aligned
cascade amplitude A, which makes the instantaneous SNR A**2 * Es/N0 a
non-central chi-square variable with a closed-form MGF. Error probabilities
follow from Craig's form of the Q-function,

    E[Q(sqrt(2 * gamma))] = 1/pi * int_0^{pi/2} M(-1/sin(xi)**2) dxi,

evaluated with a fixed Gauss-Legendre rule.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .special import (
    DEFAULT_QUAD_ORDER,
    QuadratureRule,
    gauss_legendre_half_pi,
    gaussian_q,
    stable_exp_ratio,
)

__all__ = [
    "NumericalWarning",
    "SubstitutionMode",
    "MgfParams",
    "mgf_ris_snr",
    "pe_mpsk",
    "pe_upper_bound",
    "pe_fu_conventional",
    "pe_nu_conventional",
    "pe_nu_sic_exact",
    "pe_fu_ris",
    "pe_nu_ris",
]

_VAR_COEF = (16.0 - math.pi ** 2) / 8.0
_MEAN_COEF = math.pi ** 2 / 16.0
_CLAMP_REPORT = 1e-9


class NumericalWarning(RuntimeWarning):
    """Out-of-range intermediate values that were clamped or sign-folded."""


class SubstitutionMode(str, enum.Enum):
    """How a NOMA decision distance enters the RIS-averaged integral.

    ``LITERAL`` plugs amplitude / sqrt(N0) into the Es/N0 slot, as the
    expressions are usually printed. ``CONSISTENT`` plugs in the SNR that
    makes each integral equal the fading average of the matching AWGN
    Q-term: Q(x) becomes the integral at Es/N0 = x**2 / 2.
    """

    LITERAL = "literal"
    CONSISTENT = "consistent"


@dataclass(frozen=True)
class MgfParams:
    n_elements: int
    es_over_n0: float
    s: float

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError(f"n_elements must be a positive integer, got {self.n_elements}")
        if not self.es_over_n0 >= 0:
            raise ValueError(f"es_over_n0 must be >= 0, got {self.es_over_n0}")

    @property
    def denominator(self) -> float:
        return 1.0 - self.s * self.n_elements * _VAR_COEF * self.es_over_n0


def mgf_ris_snr(p: MgfParams) -> float:
    """MGF E[exp(s * gamma)] of the instantaneous SNR over an aligned N-element RIS.

    Unit-power taps on both hops are assumed; a per-user power offset is
    absorbed by scaling ``es_over_n0``.
    """
    d = p.denominator
    if not d > 0.0:
        raise ValueError(f"MGF pole crossed: 1 - s*N*(16-pi^2)*Es/(8 N0) = {d} <= 0")
    numer = p.s * p.n_elements ** 2 * _MEAN_COEF * p.es_over_n0
    return stable_exp_ratio(numer, d) / math.sqrt(d)


def _craig_integrand(n: int, snr: float, xi) -> np.ndarray:
    inv_s2 = 1.0 / np.sin(xi) ** 2
    d = 1.0 + n * _VAR_COEF * snr * inv_s2
    with np.errstate(under="ignore"):
        return np.exp(-(n * n * _MEAN_COEF * snr * inv_s2) / d) / np.sqrt(d)


def _clamp(p: float, what: str) -> float:
    if 0.0 <= p <= 1.0:
        return p
    excess = -p if p < 0.0 else p - 1.0
    if excess > _CLAMP_REPORT:
        warnings.warn(f"{what}: probability {p!r} clamped to [0, 1]", NumericalWarning,
                      stacklevel=3)
    return min(max(p, 0.0), 1.0)


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"number of elements must be a positive integer, got {n}")
    return int(n)


def _rule(quad):
    return gauss_legendre_half_pi(DEFAULT_QUAD_ORDER) if quad is None else quad


def pe_mpsk(n_elements: int, es_over_n0: float, quad: QuadratureRule | None = None) -> float:
    """RIS-averaged antipodal error probability E[Q(sqrt(2 A^2 Es/N0))].

    Parameters
    ----------
    n_elements : int
        Number of RIS elements serving the link.
    es_over_n0 : float
        Linear SNR per unit cascade power.
    quad : QuadratureRule, optional
        Rule on [0, pi/2]; 64 nodes by default.
    """
    n = _check_n(n_elements)
    if not es_over_n0 >= 0:
        raise ValueError(f"es_over_n0 must be >= 0, got {es_over_n0}")
    rule = _rule(quad)
    p = rule.integrate(lambda xi: _craig_integrand(n, es_over_n0, xi)) / math.pi
    return _clamp(p, "pe_mpsk")


def pe_upper_bound(n_elements: int, es_over_n0: float) -> float:
    """Half the Craig integrand at xi = pi/2, where it peaks."""
    n = _check_n(n_elements)
    if not es_over_n0 >= 0:
        raise ValueError(f"es_over_n0 must be >= 0, got {es_over_n0}")
    return _clamp(0.5 * float(_craig_integrand(n, es_over_n0, math.pi / 2.0)), "pe_upper_bound")


def _check_energies(eps1, eps2, n0):
    if eps1 < 0 or eps2 < 0:
        raise ValueError(f"energies must be nonnegative, got eps1={eps1}, eps2={eps2}")
    if not n0 > 0:
        raise ValueError(f"n0 must be positive, got {n0}")


def pe_fu_conventional(eps1: float, eps2: float, n0: float) -> float:
    """FU (BPSK) bit error probability in AWGN with QPSK NU interference."""
    _check_energies(eps1, eps2, n0)
    sigma = math.sqrt(n0 / 2.0)
    a = math.sqrt(eps1 / 2.0)
    c = math.sqrt(eps2)
    return 0.5 * (gaussian_q((c + a) / sigma) + gaussian_q((c - a) / sigma))


def _nu_q_args(eps1, eps2, n0):
    r = math.sqrt(n0)
    return (math.sqrt(eps1) / r,
            (math.sqrt(2.0 * eps2) + math.sqrt(eps1)) / r,
            (math.sqrt(2.0 * eps2) - math.sqrt(eps1)) / r)


def _nu_combine(p_own, p_plus, p_minus):
    return 0.25 * (p_own * (4.0 - p_plus - p_minus) - p_plus)


def pe_nu_conventional(eps1: float, eps2: float, n0: float) -> float:
    """NU (QPSK after SIC) bit error probability in AWGN, in its customary closed form.

    This form drops the SIC error-propagation term, see :func:`pe_nu_sic_exact`.
    """
    _check_energies(eps1, eps2, n0)
    # arguments appear as sqrt(d**2 / N0), i.e. unsigned distances
    x_own, x_plus, x_minus = _nu_q_args(eps1, eps2, n0)
    return _nu_combine(gaussian_q(x_own), gaussian_q(x_plus), gaussian_q(abs(x_minus)))


def pe_nu_sic_exact(eps1: float, eps2: float, n0: float) -> float:
    """Exact NU bit error probability of hard-decision SIC in AWGN.

    Per-axis NU amplitude ``a = sqrt(eps1/2)``, FU amplitude ``c = sqrt(eps2)``.
    The quadrature bit sees only noise; the in-phase bit also suffers when
    the FU decision is wrong and the cancellation doubles the FU term.
    """
    _check_energies(eps1, eps2, n0)
    sigma = math.sqrt(n0 / 2.0)
    a = math.sqrt(eps1 / 2.0)
    c = math.sqrt(eps2)
    q = lambda d: gaussian_q(d / sigma)  # noqa: E731
    return q(a) + 0.25 * (q(c - a) - q(c + a) + q(2 * c + a) - q(2 * c - a))


def _signed_term(amplitude: float, what: str) -> float:
    if amplitude < 0:
        warnings.warn(f"{what}: negative decision distance {amplitude!r} "
                      f"(power split outside the NOMA ordering)", NumericalWarning, stacklevel=4)
    return amplitude


def _term_snr(q_arg: float, literal_surrogate: float, mode: SubstitutionMode,
              link_power: float, what: str) -> float:
    mode = SubstitutionMode(mode)
    if mode is SubstitutionMode.CONSISTENT:
        x = _signed_term(q_arg, what)
        return 0.5 * x * x * link_power
    s = _signed_term(literal_surrogate, what)
    return max(s, 0.0) * link_power


def pe_fu_ris(n_fu: int, eps1: float, eps2: float, n0: float,
              mode: SubstitutionMode = SubstitutionMode.CONSISTENT,
              quad: QuadratureRule | None = None, link_power: float = 1.0) -> float:
    """RIS-averaged FU bit error probability.

    ``link_power`` is the cascade power of the user's link relative to
    unit-power taps on both hops (1.0 for a 0 dB user, 10**(-0.3) for -3 dB).
    """
    n = _check_n(n_fu)
    _check_energies(eps1, eps2, n0)
    r = math.sqrt(n0)
    terms = []
    for sign in (+1.0, -1.0):
        d = math.sqrt(eps2) + sign * math.sqrt(eps1 / 2.0)
        snr = _term_snr(d / math.sqrt(n0 / 2.0), d / r, mode, link_power, "pe_fu_ris")
        terms.append(pe_mpsk(n, snr, quad))
    return _clamp(0.5 * (terms[0] + terms[1]), "pe_fu_ris")


def pe_nu_ris(n_nu: int, eps1: float, eps2: float, n0: float,
              mode: SubstitutionMode = SubstitutionMode.CONSISTENT,
              quad: QuadratureRule | None = None, link_power: float = 1.0) -> float:
    """RIS-averaged NU bit error probability, mirroring :func:`pe_nu_conventional`.

    Each Q-term of the AWGN form is replaced by its RIS-averaged integral.
    """
    n = _check_n(n_nu)
    _check_energies(eps1, eps2, n0)
    x_own, x_plus, x_minus = _nu_q_args(eps1, eps2, n0)
    r = math.sqrt(n0)
    literal = (eps1 / r,
               (math.sqrt(2.0 * eps2) + math.sqrt(eps1)) / r,
               (math.sqrt(2.0 * eps2) - math.sqrt(eps1)) / r)
    p_own, p_plus, p_minus = (
        pe_mpsk(n, _term_snr(x, lit, mode, link_power, "pe_nu_ris"), quad)
        for x, lit in zip((x_own, x_plus, x_minus), literal)
    )
    return _clamp(_nu_combine(p_own, p_plus, p_minus), "pe_nu_ris")
