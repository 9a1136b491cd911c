"""Photon-photon correlations of a two-photon driven biexciton-exciton cascade.

``lindblad``      four-level master equation, evolution, steady state
``correlations``  g2 / g1 / spectra from the quantum regression theorem
``analytic``      closed forms of the adiabatic two-photon dynamics
``cli``           figure presets and deviation reports
"""

from .analytic import AdiabaticIC, DressedEigensystem, NormalizedRates, dressed_eigensystem
from .correlations import (
    CorrelationSeries,
    DetectionSequence,
    collapse,
    g1,
    g2,
    g2_batch,
    power_spectrum,
)
from .lindblad import (
    DensityMatrix,
    SystemParams,
    build_hamiltonian,
    dissipator,
    evolve,
    liouvillian_rhs,
    steady_state,
)
from .states import BareLevel, DressedLabel, TransitionOp

__version__ = "0.1.0"
