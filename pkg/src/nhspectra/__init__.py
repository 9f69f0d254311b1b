"""Spectra, generalized Brillouin zones and spectral winding topology of
one-dimensional non-Hermitian tight-binding chains."""

__version__ = "0.1.0"

from .model import (
    CharPoly,
    MultiBandModel,
    OneBandModel,
    bloch_eigenvalues,
    bloch_eval,
    char_poly,
    extended_hn,
    model_from_dict,
    model_to_dict,
    nfold_bloch_momenta,
    nfold_construct,
    nh_ssh,
    real_space_hamiltonian,
    standard_hn,
)
from .polyalg import MultiPoly, SylvesterMatrix, UniPoly, poly_roots, resultant, sylvester
from .spectra import (
    ObcSpectrum,
    SpectrumCurve,
    hausdorff_distance,
    obc_finite,
    obc_thermodynamic,
    pbc_spectrum,
)
from .gbz import (
    AgbzPoint,
    ImplicitCurve,
    RootOrdering,
    agbz_implicit,
    agbz_sample_theta,
    gbz_extract,
    ordered_roots,
    sub_boundary_zero_count,
    verify_agbz_candidate,
)
from .topology import WindingRaster, unit_circle, winding_bz, winding_contour, winding_raster
from .intersect import (
    CorrespondenceReport,
    LocalStructure,
    SelfIntersection,
    bz_agbz_intersections,
    find_intersections,
    local_structure,
    verify_correspondence,
    verify_nfold_condition,
)

__all__ = [
    "AgbzPoint",
    "CharPoly",
    "CorrespondenceReport",
    "ImplicitCurve",
    "LocalStructure",
    "MultiBandModel",
    "MultiPoly",
    "ObcSpectrum",
    "OneBandModel",
    "RootOrdering",
    "SelfIntersection",
    "SpectrumCurve",
    "SylvesterMatrix",
    "UniPoly",
    "WindingRaster",
    "agbz_implicit",
    "agbz_sample_theta",
    "bloch_eigenvalues",
    "bloch_eval",
    "bz_agbz_intersections",
    "char_poly",
    "extended_hn",
    "find_intersections",
    "gbz_extract",
    "hausdorff_distance",
    "local_structure",
    "model_from_dict",
    "model_to_dict",
    "nfold_bloch_momenta",
    "nfold_construct",
    "nh_ssh",
    "obc_finite",
    "obc_thermodynamic",
    "ordered_roots",
    "pbc_spectrum",
    "poly_roots",
    "real_space_hamiltonian",
    "resultant",
    "standard_hn",
    "sub_boundary_zero_count",
    "sylvester",
    "unit_circle",
    "verify_agbz_candidate",
    "verify_correspondence",
    "verify_nfold_condition",
    "winding_bz",
    "winding_contour",
    "winding_raster",
]
