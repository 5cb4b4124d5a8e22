"""Parametric models: AR(1), Vasicek, AR(1)+GARCH(1,1) and Nelson-Siegel."""
from .ar import Ar1Params, fit_ar1, ols_ar1, simulate_ar1
from .garch import Garch11Params, filter_state, fit_garch11, garch_loglik, garch_paths, simulate_garch11
from .nelson_siegel import (NS_LAMBDA, NsFactors, curvature_peak, factors_from_curves, fit_ns_factors, ns_design,
                            ns_loadings, ns_vasicek_paths, parse_tenor, simulate_ns_vasicek)
from .vasicek import VasicekParams, ar1_to_vasicek, fit_vasicek, simulate_vasicek, vasicek_step

__all__ = [
    "Ar1Params", "fit_ar1", "ols_ar1", "simulate_ar1",
    "Garch11Params", "filter_state", "fit_garch11", "garch_loglik", "garch_paths", "simulate_garch11",
    "NS_LAMBDA", "NsFactors", "curvature_peak", "factors_from_curves", "fit_ns_factors", "ns_design",
    "ns_loadings", "ns_vasicek_paths", "parse_tenor", "simulate_ns_vasicek",
    "VasicekParams", "ar1_to_vasicek", "fit_vasicek", "simulate_vasicek", "vasicek_step",
]
