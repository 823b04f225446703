"""Direct and inverse scattering for the Gerdjikov-Ivanov spectral problem."""
from .direct import (BoundStateSearchError, JostTable, ScatteringData, SpectralPoint, SystemKind,
                     jost_table, locate_bound_states, scattering_coefficients)
from .evolution import evolve_data, evolve_triplets, gi_residual, gi_residual_at, soliton_snapshot
from .marchenko import (MarchenkoKernel, NystromError, assemble_kernels, fourier_reflection,
                        reconstruct_jost, recover_potentials, solve_marchenko, solve_marchenko_grid)
from .potentials import (GaugeData, Grid1D, PotentialError, PotentialPair, SampledField, compute_gauge,
                         gaussian_pair, single_soliton_pair, zero_pair)
from .reflectionless import (SingularGammaError, closed_form_kernels, reflectionless_gauge,
                             reflectionless_jost, reflectionless_potentials, reflectionless_transmission)
from .triplets import BoundState, BoundStateSpec, MatrixTriplet, TripletPair, build_triplet

__all__ = [
    "BoundStateSearchError", "JostTable", "ScatteringData", "SpectralPoint", "SystemKind", "jost_table",
    "locate_bound_states", "scattering_coefficients", "evolve_data", "evolve_triplets", "gi_residual",
    "gi_residual_at", "soliton_snapshot", "MarchenkoKernel", "NystromError", "assemble_kernels",
    "fourier_reflection", "reconstruct_jost", "recover_potentials", "solve_marchenko", "solve_marchenko_grid",
    "GaugeData", "Grid1D", "PotentialError", "PotentialPair", "SampledField", "compute_gauge",
    "gaussian_pair", "single_soliton_pair", "zero_pair", "SingularGammaError", "closed_form_kernels",
    "reflectionless_gauge", "reflectionless_jost", "reflectionless_potentials", "reflectionless_transmission",
    "BoundState", "BoundStateSpec", "MatrixTriplet", "TripletPair", "build_triplet",
]

__version__ = "0.1.0"
