"""Rayleigh cascade channel through a RIS.

Taps are handled as amplitude/phase arrays so that a whole batch of
independent channel realisations can be drawn and combined at once; every
array carries the element index on its last axis.

Scale convention: a tap drawn with scale ``s`` has E[amplitude**2] = 2 s**2,
so ``s = 1/sqrt(2)`` is a unit-power tap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "RayleighTap",
    "CascadeLink",
    "CltStats",
    "UNIT_POWER_SCALE",
    "draw_tap",
    "draw_taps",
    "draw_cascade",
    "align_phases",
    "cascade_gain",
    "clt_stats",
    "instantaneous_snr",
    "user_scales",
]

TWO_PI = 2.0 * math.pi
UNIT_POWER_SCALE = math.sqrt(0.5)


@dataclass(frozen=True)
class RayleighTap:
    amplitude: float
    phase: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"tap amplitude must be >= 0, got {self.amplitude}")

    @property
    def coefficient(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class CascadeLink:
    """BS->RIS taps ``h``, RIS->user taps ``g`` and RIS phase settings ``phi``.

    All five arrays share one shape ``(..., n_elements)``.
    """

    h_amp: np.ndarray
    h_phase: np.ndarray
    g_amp: np.ndarray
    g_phase: np.ndarray
    ris_phases: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(a) for a in (self.h_amp, self.h_phase, self.g_amp,
                                        self.g_phase, self.ris_phases)}
        if len(shapes) != 1:
            raise ValueError(f"cascade link arrays disagree in shape: {sorted(shapes)}")

    @property
    def n_elements(self) -> int:
        shape = np.shape(self.h_amp)
        return shape[-1] if shape else 1

    @classmethod
    def from_taps(cls, bs_to_ris, ris_to_user, ris_phases=None) -> "CascadeLink":
        """Build a single link from sequences of :class:`RayleighTap`."""
        bs_to_ris = list(bs_to_ris)
        ris_to_user = list(ris_to_user)
        if len(bs_to_ris) != len(ris_to_user):
            raise ValueError("bs_to_ris and ris_to_user must have the same length")
        if ris_phases is None:
            ris_phases = np.zeros(len(bs_to_ris))
        ris_phases = np.asarray(ris_phases, dtype=float)
        if ris_phases.shape != (len(bs_to_ris),):
            raise ValueError("ris_phases must have one entry per element")
        return cls(
            h_amp=np.array([t.amplitude for t in bs_to_ris], dtype=float),
            h_phase=np.array([t.phase for t in bs_to_ris], dtype=float),
            g_amp=np.array([t.amplitude for t in ris_to_user], dtype=float),
            g_phase=np.array([t.phase for t in ris_to_user], dtype=float),
            ris_phases=ris_phases,
        )


@dataclass(frozen=True)
class CltStats:
    """Gaussian (CLT) moments of the aligned cascade amplitude A."""

    mean_a: float
    var_a: float

    @property
    def second_moment(self) -> float:
        return self.var_a + self.mean_a ** 2


def _check_scale(scale):
    if not scale > 0:
        raise ValueError(f"Rayleigh scale must be positive, got {scale}")


def draw_tap(scale: float, rng: np.random.Generator) -> RayleighTap:
    _check_scale(scale)
    amp, phase = draw_taps(scale, (), rng)
    return RayleighTap(float(amp), float(phase))


def draw_taps(scale: float, size, rng: np.random.Generator):
    """Draw ``size`` independent taps; returns ``(amplitude, phase)`` arrays."""
    _check_scale(scale)
    amp = rng.rayleigh(scale, size)
    phase = rng.uniform(0.0, TWO_PI, size)
    return amp, phase


def draw_cascade(n_elements: int, scale_h: float, scale_g: float,
                 rng: np.random.Generator, batch=()) -> CascadeLink:
    """Draw ``batch`` independent cascades of ``n_elements`` elements each.

    RIS phases are left at zero; call :func:`align_phases` to configure them.
    """
    if n_elements < 0:
        raise ValueError("n_elements must be >= 0")
    shape = ((batch,) if isinstance(batch, (int, np.integer)) else tuple(batch))
    shape = shape + (int(n_elements),)
    h_amp, h_phase = draw_taps(scale_h, shape, rng)
    g_amp, g_phase = draw_taps(scale_g, shape, rng)
    return CascadeLink(h_amp, h_phase, g_amp, g_phase, np.zeros(shape))


def align_phases(link: CascadeLink) -> CascadeLink:
    """Set each RIS phase to theta_i + psi_i (mod 2 pi) so all paths add coherently."""
    phi = np.mod(np.asarray(link.h_phase) + np.asarray(link.g_phase), TWO_PI)
    return replace(link, ris_phases=phi)


def cascade_gain(link: CascadeLink):
    """sum_i alpha_i beta_i exp(j(phi_i - theta_i - psi_i)) over the last axis."""
    rot = np.asarray(link.ris_phases) - np.asarray(link.h_phase) - np.asarray(link.g_phase)
    terms = np.asarray(link.h_amp) * np.asarray(link.g_amp) * np.exp(1j * rot)
    return terms.sum(axis=-1)


def clt_stats(n_user: int, sigma_h: float = UNIT_POWER_SCALE,
              sigma_g: float = UNIT_POWER_SCALE) -> CltStats:
    """Mean and variance of A = sum of ``n_user`` products of Rayleigh amplitudes.

    ``sigma_h`` and ``sigma_g`` are Rayleigh scales. E[alpha*beta] is
    sigma_h*sigma_g*pi/2 and E[alpha^2 beta^2] = 4 sigma_h^2 sigma_g^2.
    """
    if int(n_user) != n_user or n_user < 1:
        raise ValueError(f"n_user must be a positive integer, got {n_user}")
    _check_scale(sigma_h)
    _check_scale(sigma_g)
    mean = n_user * sigma_h * sigma_g * math.pi / 2.0
    var = 4.0 * n_user * sigma_h ** 2 * sigma_g ** 2 * (1.0 - math.pi ** 2 / 16.0)
    return CltStats(mean_a=mean, var_a=var)


def instantaneous_snr(link: CascadeLink, es_over_n0: float):
    return np.abs(cascade_gain(link)) ** 2 * es_over_n0


def user_scales(var_db: float) -> tuple[float, float]:
    """Rayleigh scales ``(scale_h, scale_g)`` for a user with ``var_db`` channel variance.

    The per-user variance offset lives on the RIS->user segment only; the
    BS->RIS segment stays unit power.
    """
    scale_g = math.sqrt(0.5 * 10.0 ** (var_db / 10.0))
    return UNIT_POWER_SCALE, scale_g
