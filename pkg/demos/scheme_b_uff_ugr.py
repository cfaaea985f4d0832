"""
Scheme B: four Bragg pulses around two clock pulses.

Runs start in g and in e.  The sum of the two phases tests free fall
universality, the difference tests the redshift.  Without a mass defect
both ports interfere perfectly and the difference vanishes.
"""
import numpy as np

from _common import desk_coeffs, wrap
from e1m1clock import interferometer as ifo
from e1m1clock.core import AtomSpecies, GravityFrame, make_wavepacket

psi = make_wavepacket([0, 0, 0], [0.3, 0.3, 0.3])
c = desk_coeffs(100.0)
seq = ifo.SchemeBSequence(T=30.0, deltaT=10.0, t_pi=np.pi, k_p=5.0)
print("Pulse times:", {k: round(v, 4) for k, v in seq.times.items()}, f"clock time {seq.clock_time:.4f}")

for g in (0.0, 0.01):
    for eps in (0.0, 1e-3):
        o = ifo.scheme_b_observables(seq, AtomSpecies(1.0, eps), GravityFrame(g), c, psi)
        r = ifo.scheme_b_reference(seq, AtomSpecies(1.0, eps), GravityFrame(g))
        print(f"g = {g:.2f}, eps = {eps:.0e}: dphi_plus = {o['dphi_plus']:+.6f}, "
              f"dphi_minus = {o['dphi_minus']:+.3e}, dphi_g = {o['dphi_g']:+.6f} (ref {wrap(r['dphi_g']):+.6f}), "
              f"I_g = {o['I_g']:.4f}, V = ({o['V_g']:.6f}, {o['V_e']:.6f})")
