"""Hecke eigenvalue sign experiments.

Normalized multiplicative coefficient sequences (an exact integer series
for the weight 12 cusp form, a CM elliptic curve family, synthetic
semicircle samples), their extension to arbitrary windows, the sieve
weights certifying nonvanishing and sign changes in short intervals, and
the statistics that test the expected behavior at desk scale.
"""

from .errors import CacheError, CapacityError
from .coeffs import (
    FormSpec,
    PrimeEigenvalueTable,
    TAU_SERIES_LIMIT,
    cm_ap,
    cm_prime_table,
    delta_prime_table,
    delta_prime_table_float,
    satotate_sample,
    tau_series,
    vanishing_model,
)
from .cache import read_table, write_table
from .multeval import (
    CoefficientWindow,
    MultiplicativeSpec,
    density_nonzero,
    euler_product_M,
    evaluate_window,
    halasz_bound,
    hecke_extend,
    sign_spec,
    spf_table,
)
from .sieveweights import (
    DEFAULT_GAMMA,
    SieveParams,
    WeightWindow,
    WppDiagnostics,
    enumerate_Dplus,
    in_Dplus,
    rho_plus_window,
    weights_window,
    wpp_majorant,
    ym_schedule,
)
from .stats import (
    CMDensityReport,
    CorCheckReport,
    IntervalScanReport,
    MomentReport,
    PrimeMomentReport,
    SatoTateHistogram,
    ShiftedConvReport,
    SignReport,
    chowla_correlation,
    cor_proof_check,
    full_sign_report,
    interval_scan,
    moment_report,
    prime_moment_checks,
    satotate_histogram,
    serre_cm_density,
    shifted_convolution,
    sign_changes,
    sign_counts,
    variance_short,
)

__version__ = "0.1.0"

__all__ = [
    "CacheError",
    "CapacityError",
    "FormSpec",
    "PrimeEigenvalueTable",
    "TAU_SERIES_LIMIT",
    "cm_ap",
    "cm_prime_table",
    "delta_prime_table",
    "delta_prime_table_float",
    "satotate_sample",
    "tau_series",
    "vanishing_model",
    "read_table",
    "write_table",
    "CoefficientWindow",
    "MultiplicativeSpec",
    "density_nonzero",
    "euler_product_M",
    "evaluate_window",
    "halasz_bound",
    "hecke_extend",
    "sign_spec",
    "spf_table",
    "DEFAULT_GAMMA",
    "SieveParams",
    "WeightWindow",
    "WppDiagnostics",
    "enumerate_Dplus",
    "in_Dplus",
    "rho_plus_window",
    "weights_window",
    "wpp_majorant",
    "ym_schedule",
    "CMDensityReport",
    "CorCheckReport",
    "IntervalScanReport",
    "MomentReport",
    "PrimeMomentReport",
    "SatoTateHistogram",
    "ShiftedConvReport",
    "SignReport",
    "chowla_correlation",
    "cor_proof_check",
    "full_sign_report",
    "interval_scan",
    "moment_report",
    "prime_moment_checks",
    "satotate_histogram",
    "serre_cm_density",
    "shifted_convolution",
    "sign_changes",
    "sign_counts",
    "variance_short",
    "__version__",
]
