"""Exact quantum dynamics of a two-waveguide coupler with linear and parametric exchange.

Modules:

* ``coupler_core``: closed-form evolution coefficients K, L, M, N;
* ``photon_stats``: squeezing, photon-number moments and g2;
* ``quasiprob``: characteristic functions and s-parametrized quasiprobabilities;
* ``fock_oracle``: truncated Fock-space propagation used for cross-checks;
* ``cli``: the ``nlcoupler`` command.
"""

from .coupler_core import (CouplerParams, EvolutionCoefficients, check_symplectic,
                           classify_regime, derive_spectral, evolution_coefficients)
from .errors import (BranchAmbiguity, ConfigError, CouplerError, CutoffExceeded,
                     IntegratorFailure, PNotRepresentable, TruncatedTransform,
                     UnsupportedClosedForm, UnsupportedState, ZeroIntensity)
from .states import Coherent, Fock, InputState, Thermal

__version__ = "0.1.0"

__all__ = [
    "CouplerParams", "EvolutionCoefficients", "check_symplectic", "classify_regime",
    "derive_spectral", "evolution_coefficients",
    "BranchAmbiguity", "ConfigError", "CouplerError", "CutoffExceeded", "IntegratorFailure",
    "PNotRepresentable", "TruncatedTransform", "UnsupportedClosedForm", "UnsupportedState",
    "ZeroIntensity", "Coherent", "Fock", "InputState", "Thermal",
]
