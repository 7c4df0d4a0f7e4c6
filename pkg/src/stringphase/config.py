"""Central tolerance record shared by the library, the suites and the tests."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-12
    projector: float = 1e-10
    frame: float = 1e-10
    degenerate: float = 1e-14
    # discretisation suites
    min_order: float = 1.8
    adjusted_ricci_finest: float = 1e-3
    gauss_bonnet_rel: float = 1e-3
    deformation_invariance_rel: float = 2e-3
    slice_independence_rel: float = 1e-3
    slice_floor: float = 1e-12
    psi_agreement_rel: float = 1e-6
    catenoid_area_rel: float = 5e-3
    gauge_roundoff: float = 1e-12
    # variations
    variation_step: float = 1e-4


TOL = Tolerances()
