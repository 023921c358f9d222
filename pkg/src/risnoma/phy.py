"""Two-user power-domain NOMA transceiver.

Near user (NU): Gray-mapped QPSK, bit 0 on the in-phase sign and bit 1 on
the quadrature sign, ``(0, 0) -> (1 + 1j)/sqrt(2)``.
Far user (FU): BPSK on the real axis, ``0 -> +1``, ``1 -> -1``.

All functions broadcast over leading array axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DetectionError",
    "PowerSplit",
    "UserBits",
    "map_qpsk",
    "map_bpsk",
    "superpose",
    "detect_fu",
    "detect_nu_sic",
    "sic_residual",
    "slice_qpsk",
]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class DetectionError(ValueError):
    """Raised when a receiver is asked to slice with an undefined channel."""


@dataclass(frozen=True)
class PowerSplit:
    """NOMA power allocation: NU gets ``alpha * es``, FU gets the rest."""

    alpha: float
    es: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5), got {self.alpha}")
        if not self.es > 0.0:
            raise ValueError(f"es must be positive, got {self.es}")

    @property
    def eps1(self) -> float:
        return self.alpha * self.es

    @property
    def eps2(self) -> float:
        return self.es - self.eps1


@dataclass(frozen=True)
class UserBits:
    """``nu_bits`` has shape ``(..., 2)``, ``fu_bits`` the matching ``(...)``."""

    nu_bits: np.ndarray
    fu_bits: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu_bits)
        fu = np.asarray(self.fu_bits)
        if nu.shape[-1:] != (2,) or nu.shape[:-1] != fu.shape:
            raise ValueError(f"bit shapes do not line up: nu {nu.shape}, fu {fu.shape}")
        if np.any((nu != 0) & (nu != 1)) or np.any((fu != 0) & (fu != 1)):
            raise ValueError("bits must be 0 or 1")


def map_qpsk(bits) -> np.ndarray:
    b = np.asarray(bits)
    if b.shape[-1:] != (2,):
        raise ValueError(f"QPSK needs 2 bits on the last axis, got shape {b.shape}")
    return ((1.0 - 2.0 * b[..., 0]) + 1j * (1.0 - 2.0 * b[..., 1])) * _INV_SQRT2


def map_bpsk(bit) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bit, dtype=float)


def superpose(bits: UserBits, split: PowerSplit) -> np.ndarray:
    """Superposition-coded symbol sqrt(eps1)*x_nu + sqrt(eps2)*x_fu."""
    return (math.sqrt(split.eps1) * map_qpsk(bits.nu_bits)
            + math.sqrt(split.eps2) * map_bpsk(bits.fu_bits))


def detect_fu(received, effective_gain, split: PowerSplit) -> np.ndarray:
    """Sign detector on the real axis; NU interference is treated as noise.

    The decision does not depend on the gain or the split, both are accepted
    so the two receivers share a signature.
    """
    if np.any(np.asarray(effective_gain) < 0):
        raise ValueError("effective_gain must be nonnegative")
    return np.asarray(np.real(received) < 0).astype(np.uint8)


def detect_nu_sic(received, effective_gain, split: PowerSplit):
    """Hard-decision SIC: slice the FU bit, cancel it, slice QPSK quadrants.

    Returns ``(nu_bits, fu_bit_estimate)`` with ``nu_bits`` of shape ``(..., 2)``.
    """
    gain = np.asarray(effective_gain, dtype=float)
    if np.any(gain <= 0):
        raise DetectionError("SIC needs a strictly positive effective gain")
    received = np.asarray(received)
    fu_hat = np.asarray(received.real < 0).astype(np.uint8)
    return slice_qpsk(sic_residual(received, gain, split, fu_hat)), fu_hat


def sic_residual(received, effective_gain, split: PowerSplit, fu_estimate):
    """Remove the re-modulated FU decision from the received sample."""
    return (np.asarray(received)
            - np.asarray(effective_gain) * math.sqrt(split.eps2) * map_bpsk(fu_estimate))


def slice_qpsk(residual) -> np.ndarray:
    """Quadrant decision; a sample exactly on an axis maps to bit 0."""
    residual = np.asarray(residual)
    return np.stack([residual.real < 0, residual.imag < 0], axis=-1).astype(np.uint8)
