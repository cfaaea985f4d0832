"""
Gravitational phase shifts of E1-M1 two-photon clock transitions.

Submodules
----------
core            units, species, gravity frame, Gaussian wavepackets
polarization    selection rules and Doppler-free coupling sets
twolevel        adiabatic elimination of the ancilla level
beam            Gaussian-beam expansions and pulse coefficients
pulses          generalized pi and pi/2 pulse operators
phasespace      canonical unitaries and analytic Gaussian overlaps
interferometer  clock-interferometer sequences and exit-port signals
gridoracle      split-step grid propagation used as an independent check
cli             batch front end
"""
from .core import AtomSpecies, GaussianWavepacket, GravityFrame, UnitSystem, make_wavepacket
from .polarization import CouplingSet
from .beam import GaussianBeamParams, PulseCoefficients, pulse_coefficients
from .twolevel import effective_hamiltonian, rabi_populations
from .pulses import generalized_pulse, ideal_matrix
from .interferometer import (SchemeASequence, SchemeBSequence, scheme_a_observables, scheme_a_reference,
                             scheme_b_observables, scheme_b_reference, double_differential)

__version__ = "0.1.0"
