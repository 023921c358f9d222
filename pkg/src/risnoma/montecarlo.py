"""Monte Carlo BER engine for the two-user RIS-NOMA downlink.

Every trial draws fresh taps for both users' cascades, aligns the RIS phases
of each user's own elements, sends one superposition symbol and counts
2 NU bits and 1 FU bit.

Reproducibility: the trials of a grid point are cut into fixed-size chunks.
Chunk ``k`` of grid index ``i`` draws from a stream seeded by
``SeedSequence(seed, spawn_key=(tag, i, k))``. Chunks are reduced in index
order and the stopping rule is evaluated on that ordered prefix, so the
number of worker processes never changes a result.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .analytic import (
    SubstitutionMode,
    pe_fu_conventional,
    pe_fu_ris,
    pe_nu_conventional,
    pe_nu_ris,
)
from .channel import align_phases, cascade_gain, draw_cascade, draw_taps, user_scales
from .phy import PowerSplit, UserBits, detect_fu, detect_nu_sic, superpose
from .special import QuadratureRule

__all__ = [
    "ConfigError",
    "PrecisionError",
    "BracketError",
    "SimConfig",
    "BerPoint",
    "BerCurve",
    "DEFAULT_SNR_GRID_DB",
    "run_point",
    "run_sweep",
    "run_conventional_baseline",
    "analytic_point",
    "analytic_awgn_point",
    "analytic_curve",
    "snr_at_ber",
    "gain_at_ber",
    "allocation_table",
    "equalize_allocation",
    "run_n_scaling",
    "run_alpha_sweep",
]

DEFAULT_SNR_GRID_DB = tuple(float(x) for x in range(-40, 11, 2))
LOW_CONFIDENCE_ERRORS = 50
Z95 = 1.96

_TAG_RIS = 0
_TAG_RAYLEIGH = 1
_TAG_AWGN = 2


class ConfigError(ValueError):
    """Invalid or contradictory simulation settings."""


class PrecisionError(ArithmeticError):
    """A computation underflowed to a value that carries no information."""


class BracketError(ValueError):
    """A BER curve does not cross the requested target inside its grid."""


@dataclass(frozen=True)
class SimConfig:
    """One experiment: RIS split, power split, SNR grid, channel and stopping rule.

    ``n_nu``/``n_fu`` default to an equal split of ``n_total``; giving one of
    them fixes the other.
    """

    n_total: int = 16
    n_nu: int | None = None
    n_fu: int | None = None
    alpha: float = 0.4
    es: float = 1.0
    snr_grid_db: Sequence[float] = DEFAULT_SNR_GRID_DB
    nu_var_db: float = 0.0
    fu_var_db: float = -3.0
    seed: int = 42
    min_errors: int = 200
    max_trials: int = 10_000_000
    chunk_size: int = 1 << 16
    noiseless: bool = False

    def __post_init__(self):
        def fail(key, msg):
            raise ConfigError(f"{key}: {msg}")

        if not isinstance(self.n_total, (int, np.integer)) or self.n_total < 2:
            fail("n_total", f"must be an integer >= 2, got {self.n_total!r}")
        n_nu, n_fu = self.n_nu, self.n_fu
        if n_nu is None and n_fu is None:
            n_nu = self.n_total // 2
        if n_nu is None:
            n_nu = self.n_total - n_fu
        if n_fu is None:
            n_fu = self.n_total - n_nu
        for key, v in (("n_nu", n_nu), ("n_fu", n_fu)):
            if not isinstance(v, (int, np.integer)) or v < 1:
                fail(key, f"must be an integer in [1, n_total-1], got {v!r}")
        if n_nu + n_fu != self.n_total:
            fail("n_nu", f"n_nu + n_fu = {n_nu + n_fu} must equal n_total = {self.n_total}")
        object.__setattr__(self, "n_nu", int(n_nu))
        object.__setattr__(self, "n_fu", int(n_fu))

        if not 0.0 < self.alpha < 0.5:
            fail("alpha", f"must lie in the open range (0, 0.5), got {self.alpha!r}")
        if not self.es > 0:
            fail("es", f"must be positive, got {self.es!r}")
        grid = tuple(float(x) for x in self.snr_grid_db)
        if not grid:
            fail("snr_grid_db", "must contain at least one value")
        if any(not math.isfinite(x) for x in grid):
            fail("snr_grid_db", "values must be finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            fail("snr_grid_db", "must be strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)
        if not 0 <= self.seed < 2 ** 64:
            fail("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.min_errors < LOW_CONFIDENCE_ERRORS:
            fail("min_errors", f"must be >= {LOW_CONFIDENCE_ERRORS}, got {self.min_errors!r}")
        if self.max_trials < 10_000:
            fail("max_trials", f"must be >= 10000, got {self.max_trials!r}")
        if self.chunk_size < 1:
            fail("chunk_size", f"must be >= 1, got {self.chunk_size!r}")

    @property
    def split(self) -> PowerSplit:
        return PowerSplit(self.alpha, self.es)

    def n0(self, snr_db: float) -> float:
        return self.es / 10.0 ** (snr_db / 10.0)

    @property
    def nu_link_power(self) -> float:
        return 10.0 ** (self.nu_var_db / 10.0)

    @property
    def fu_link_power(self) -> float:
        return 10.0 ** (self.fu_var_db / 10.0)

    def grid_index(self, snr_db: float) -> int:
        try:
            return self.snr_grid_db.index(float(snr_db))
        except ValueError:
            raise ConfigError(f"snr_db: {snr_db} is not on the configured grid") from None


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    trials: int
    nu_bit_errors: int
    fu_bit_errors: int
    flags: tuple[str, ...] = ()

    @property
    def nu_bits(self) -> int:
        return 2 * self.trials

    @property
    def fu_bits(self) -> int:
        return self.trials

    @property
    def nu_ber(self) -> float:
        return self.nu_bit_errors / self.nu_bits

    @property
    def fu_ber(self) -> float:
        return self.fu_bit_errors / self.fu_bits

    @property
    def ci95_nu(self) -> float:
        p = self.nu_ber
        return Z95 * math.sqrt(p * (1.0 - p) / self.nu_bits)

    @property
    def ci95_fu(self) -> float:
        p = self.fu_ber
        return Z95 * math.sqrt(p * (1.0 - p) / self.fu_bits)

    def ber(self, user: str) -> float:
        return {"nu": self.nu_ber, "fu": self.fu_ber}[user]


@dataclass
class BerCurve:
    points: list[BerPoint] = field(default_factory=list)
    label: str = ""

    def __len__(self):
        return len(self.points)

    def __iter__(self) -> Iterator[BerPoint]:
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    def ber(self, user: str) -> np.ndarray:
        return np.array([p.ber(user) for p in self.points])


def _stream(seed: int, tag: int, snr_index: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(tag, snr_index, chunk))
    return np.random.Generator(np.random.PCG64(ss))


def _simulate_chunk(task) -> tuple[int, int]:
    (tag, n_nu, n_fu, alpha, es, nu_power, fu_power, n0, noiseless,
     seed, snr_index, chunk, n_trials) = task
    rng = _stream(seed, tag, snr_index, chunk)
    split = PowerSplit(alpha, es)
    nu_bits = rng.integers(0, 2, (n_trials, 2), dtype=np.uint8)
    fu_bits = rng.integers(0, 2, n_trials, dtype=np.uint8)
    x = superpose(UserBits(nu_bits, fu_bits), split)

    def receive(n_elements, link_power):
        if tag == _TAG_RIS:
            link = align_phases(draw_cascade(n_elements, *user_scales(10 * math.log10(link_power)),
                                             rng, n_trials))
            gain = cascade_gain(link)
            eff = np.abs(gain)
        elif tag == _TAG_RAYLEIGH:
            amp, phase = draw_taps(math.sqrt(link_power / 2.0), n_trials, rng)
            gain = amp * np.exp(1j * phase)
            eff = amp
        else:
            gain = np.full(n_trials, math.sqrt(link_power), dtype=complex)
            eff = gain.real
        sigma = 0.0 if noiseless else math.sqrt(n0 / 2.0)
        noise = sigma * (rng.standard_normal(n_trials) + 1j * rng.standard_normal(n_trials))
        r = gain * x + noise
        if tag == _TAG_RAYLEIGH:
            # coherent receiver with perfect CSI removes the tap phase
            r = r * np.exp(-1j * phase)
        return r, eff

    r_nu, g_nu = receive(n_nu, nu_power)
    nu_hat, _ = detect_nu_sic(r_nu, g_nu, split)
    r_fu, g_fu = receive(n_fu, fu_power)
    fu_hat = detect_fu(r_fu, g_fu, split)
    return int(np.count_nonzero(nu_hat != nu_bits)), int(np.count_nonzero(fu_hat != fu_bits))


@contextmanager
def _executor(workers: int):
    if workers is None or workers <= 1:
        yield None
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            yield ex


def _run_point(cfg: SimConfig, snr_db: float, tag: int, ex, workers: int) -> BerPoint:
    i = cfg.grid_index(snr_db)
    if cfg.n_nu < 1 or cfg.n_fu < 1:
        raise ConfigError("every active user needs at least one RIS element")
    base = (tag, cfg.n_nu, cfg.n_fu, cfg.alpha, cfg.es, cfg.nu_link_power, cfg.fu_link_power,
            cfg.n0(snr_db), cfg.noiseless, cfg.seed, i)
    n_chunks = -(-cfg.max_trials // cfg.chunk_size)
    wave = 1 if ex is None else 2 * workers
    trials = nu_err = fu_err = 0
    k = 0
    while k < n_chunks:
        ks = range(k, min(k + wave, n_chunks))
        tasks = [base + (c, min(cfg.chunk_size, cfg.max_trials - c * cfg.chunk_size))
                 for c in ks]
        results = map(_simulate_chunk, tasks) if ex is None else ex.map(_simulate_chunk, tasks)
        done = False
        for task, (e_nu, e_fu) in zip(tasks, results):
            trials += task[-1]
            nu_err += e_nu
            fu_err += e_fu
            if (nu_err >= cfg.min_errors and fu_err >= cfg.min_errors) or trials >= cfg.max_trials:
                done = True
                break
        if done:
            break
        k += wave
    flags = []
    if trials >= cfg.max_trials:
        if nu_err < LOW_CONFIDENCE_ERRORS:
            flags.append("nu_low_confidence")
        if fu_err < LOW_CONFIDENCE_ERRORS:
            flags.append("fu_low_confidence")
    return BerPoint(float(snr_db), trials, nu_err, fu_err, tuple(flags))


def run_point(cfg: SimConfig, snr_db: float, workers: int = 1) -> BerPoint:
    """Simulate one grid point of the RIS-NOMA link."""
    with _executor(workers) as ex:
        return _run_point(cfg, snr_db, _TAG_RIS, ex, workers)


def run_sweep(cfg: SimConfig, workers: int = 1, label: str = "") -> BerCurve:
    """Simulate every point of ``cfg.snr_grid_db``."""
    with _executor(workers) as ex:
        pts = [_run_point(cfg, s, _TAG_RIS, ex, workers) for s in cfg.snr_grid_db]
    return BerCurve(pts, label or f"ris_N{cfg.n_total}")


def run_conventional_baseline(cfg: SimConfig, workers: int = 1, fading: str = "rayleigh",
                              label: str = "") -> BerCurve:
    """Same transceiver without a RIS: one tap per user of power ``10**(var_db/10)``.

    ``fading="rayleigh"`` draws a Rayleigh tap per symbol, ``fading="awgn"``
    uses a fixed real gain.
    """
    tags = {"rayleigh": _TAG_RAYLEIGH, "awgn": _TAG_AWGN}
    if fading not in tags:
        raise ConfigError(f"fading: must be one of {sorted(tags)}, got {fading!r}")
    with _executor(workers) as ex:
        pts = [_run_point(cfg, s, tags[fading], ex, workers) for s in cfg.snr_grid_db]
    return BerCurve(pts, label or f"conventional_{fading}")


def analytic_point(cfg: SimConfig, snr_db: float,
                   mode: SubstitutionMode = SubstitutionMode.CONSISTENT,
                   quad: QuadratureRule | None = None) -> tuple[float, float]:
    """``(nu_ber, fu_ber)`` from the RIS-averaged expressions."""
    split = cfg.split
    n0 = cfg.n0(snr_db)
    nu = pe_nu_ris(cfg.n_nu, split.eps1, split.eps2, n0, mode, quad, cfg.nu_link_power)
    fu = pe_fu_ris(cfg.n_fu, split.eps1, split.eps2, n0, mode, quad, cfg.fu_link_power)
    return nu, fu


def analytic_awgn_point(cfg: SimConfig, snr_db: float) -> tuple[float, float]:
    """``(nu_ber, fu_ber)`` of the conventional link over fixed gains."""
    split = cfg.split
    n0 = cfg.n0(snr_db)
    return (pe_nu_conventional(split.eps1, split.eps2, n0 / cfg.nu_link_power),
            pe_fu_conventional(split.eps1, split.eps2, n0 / cfg.fu_link_power))


def analytic_curve(cfg: SimConfig, mode: SubstitutionMode = SubstitutionMode.CONSISTENT,
                   quad: QuadratureRule | None = None) -> dict[str, np.ndarray]:
    rows = [analytic_point(cfg, s, mode, quad) for s in cfg.snr_grid_db]
    return {"snr_db": np.array(cfg.snr_grid_db),
            "nu": np.array([r[0] for r in rows]),
            "fu": np.array([r[1] for r in rows])}


def snr_at_ber(snr_db, ber, target_ber: float, name: str = "curve") -> float:
    """SNR where a decreasing BER curve first crosses ``target_ber``.

    Interpolates linearly in (SNR dB, log10 BER) between the bracketing points.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    if not 0.0 < target_ber < 1.0:
        raise ValueError(f"target_ber must be in (0, 1), got {target_ber}")
    for i in range(len(ber) - 1):
        hi, lo = ber[i], ber[i + 1]
        if hi >= target_ber > lo:
            if lo <= 0.0:
                raise BracketError(f"{name}: no errors counted at {snr_db[i + 1]} dB, "
                                   f"cannot interpolate to BER {target_ber:g}")
            t = (math.log10(hi) - math.log10(target_ber)) / (math.log10(hi) - math.log10(lo))
            return float(snr_db[i] + t * (snr_db[i + 1] - snr_db[i]))
    raise BracketError(f"{name}: BER {target_ber:g} is not bracketed by the curve "
                       f"(range {np.min(ber):.3g}..{np.max(ber):.3g})")


def gain_at_ber(curve_a: BerCurve, curve_b: BerCurve, target_ber: float,
                user: str = "nu") -> float:
    """Horizontal gap SNR_b - SNR_a (dB) at ``target_ber``; positive when a is better."""
    snr_a = snr_at_ber(curve_a.snr_db, curve_a.ber(user), target_ber, curve_a.label or "curve_a")
    snr_b = snr_at_ber(curve_b.snr_db, curve_b.ber(user), target_ber, curve_b.label or "curve_b")
    return snr_b - snr_a


def allocation_table(cfg: SimConfig, snr_db: float,
                     mode: SubstitutionMode = SubstitutionMode.CONSISTENT,
                     quad: QuadratureRule | None = None):
    """Analytic BERs and ``|log10 nu - log10 fu|`` for every split of ``n_total``.

    Returns a list of ``(n_nu, n_fu, nu_ber, fu_ber, gap)`` ordered by ``n_fu``.
    """
    rows = []
    for n_fu in range(1, cfg.n_total):
        sub = replace(cfg, n_nu=cfg.n_total - n_fu, n_fu=n_fu)
        nu, fu = analytic_point(sub, snr_db, mode, quad)
        if nu > 0.0 and fu > 0.0:
            gap = abs(math.log10(nu) - math.log10(fu))
        elif nu == fu == 0.0:
            gap = math.nan
        else:
            gap = math.inf
        rows.append((cfg.n_total - n_fu, n_fu, nu, fu, gap))
    return rows


def equalize_allocation(cfg: SimConfig, snr_db: float,
                        mode: SubstitutionMode = SubstitutionMode.CONSISTENT,
                        quad: QuadratureRule | None = None) -> tuple[int, int]:
    """Split of the RIS elements that brings NU and FU error rates closest.

    Exhaustive over ``n_fu`` in ``[1, n_total - 1]``; ties go to the larger
    ``n_fu``.
    """
    rows = allocation_table(cfg, snr_db, mode, quad)
    finite = [r for r in rows if math.isfinite(r[4])]
    if not finite:
        raise PrecisionError(f"analytic BERs underflow at {snr_db} dB for every split; "
                             f"probe a lower SNR")
    best = min(finite, key=lambda r: (r[4], -r[1]))
    return best[0], best[1]


def run_n_scaling(cfg: SimConfig, n_values: Sequence[int], workers: int = 1) -> dict[int, BerCurve]:
    """Equal-split sweeps for each total element count in ``n_values``."""
    out = {}
    for n in n_values:
        sub = replace(cfg, n_total=int(n), n_nu=None, n_fu=None)
        out[int(n)] = run_sweep(sub, workers, label=f"ris_N{n}")
    return out


def run_alpha_sweep(cfg: SimConfig, alphas: Sequence[float], workers: int = 1) -> dict[float, BerCurve]:
    out = {}
    for a in alphas:
        sub = replace(cfg, alpha=float(a))
        out[float(a)] = run_sweep(sub, workers, label=f"ris_N{cfg.n_total}_alpha{a:g}")
    return out
