"""Link-level simulation and analytical BER for RIS-assisted two-user downlink NOMA."""

from .analytic import (
    MgfParams,
    SubstitutionMode,
    mgf_ris_snr,
    pe_fu_conventional,
    pe_fu_ris,
    pe_mpsk,
    pe_nu_conventional,
    pe_nu_ris,
    pe_nu_sic_exact,
    pe_upper_bound,
)
from .channel import (
    CascadeLink,
    CltStats,
    RayleighTap,
    align_phases,
    cascade_gain,
    clt_stats,
    draw_cascade,
    draw_tap,
    instantaneous_snr,
)
from .montecarlo import (
    BerCurve,
    BerPoint,
    SimConfig,
    equalize_allocation,
    gain_at_ber,
    run_conventional_baseline,
    run_point,
    run_sweep,
)
from .phy import (
    PowerSplit,
    UserBits,
    detect_fu,
    detect_nu_sic,
    map_bpsk,
    map_qpsk,
    superpose,
)
from .special import QuadratureRule, gauss_legendre_half_pi, gaussian_q, stable_exp_ratio

__version__ = "0.1.0"
