"""Bifurcation analysis of the Gilet walking-droplet map family."""
from .kernels import (
    ContractError,
    MapModel,
    NonSmoothPointError,
    Variant,
    WavePotential,
    eval_map,
    jacobian,
    jacobian_det,
    symmetry_conjugate,
)
from .fixedpoints import (
    Classification,
    FixedPointRecord,
    classify,
    enumerate_fixed_points,
    find_critical_points,
    find_zeros,
    ns_threshold,
    solve_z_fixed,
)
from .manifold import (
    ManifoldPolyline,
    StableLine,
    crossings_with_line,
    grow_unstable,
    seed_fundamental_domain,
    stable_line,
)
from .scan import (
    ScanConfig,
    ScanEvent,
    ScanResult,
    detect_events,
    lyapunov_spectrum,
    rotation_number,
    run_orbit,
    verify_assumptions,
)
from .slices import SliceRegion, cusp_height, det_sign, distance_to_slice, in_slice, make_slice, slice_boundary

__version__ = "0.1.0"
