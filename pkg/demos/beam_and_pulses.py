"""
Finite Rayleigh length: the beam kicks the atom.

The Gouy phase of a Gaussian beam makes the two-photon coupling phase vary
along the axis, so a pulse imparts momentum 2 hbar / z_R.  This demo checks
the kick on a grid, then shows the generalized pulse matrices and how they
return to the ideal plane-wave ones as z_R grows.
"""
import numpy as np

from _common import desk_coeffs
from e1m1clock import gridoracle as go
from e1m1clock.beam import GaussianBeamParams, beam_factors, effective_kick, remainder_bounds
from e1m1clock.core import make_wavepacket
from e1m1clock.pulses import generalized_pulse, ideal_matrix

beam = GaussianBeamParams(1e-3, 5.0)
Z = np.linspace(-0.3, 0.3, 7) * beam.z_R
f = beam_factors(Z, beam)
bw, bR, bz = remainder_bounds(Z, beam)
print("Gouy phase: exact vs expanded (bound on the difference)")
for z, a, b, r in zip(Z / beam.z_R, f.gouy, f.gouy_expanded, bz):
    print(f"  Z/z_R = {z:+.2f}: {a:+.6f} {b:+.6f} ({abs(a - b):.1e} <= {r:.1e})")
print(f"effective kick vector {effective_kick(beam)} (2/z_R = {2 / beam.z_R})")

print("\nGrid pi pulse from g to e")
zr = 1e4
c = desk_coeffs(zr, Phi0=0.3)
grid = go.Grid1D(40.0, 256)
f0 = go.gaussian_field(grid, make_wavepacket(0, 0.5), "g")
res = go.propagate_two_level_beam(f0, c, np.pi / c.Omega0, 400, p_width=0.5)
dp = go.momentum_mean(grid, res.field["e"]) - go.momentum_mean(grid, f0["g"])
print(f"  <P_z> shift {dp:.6e}, 2/z_R = {2 / zr:.6e}, P_e = {res.field.populations()['e']:.6f}")

print("\nGeneralized pulses approach the ideal matrices")
for zr in (1e2, 1e4, 1e6):
    c = desk_coeffs(zr, ac_plus=0.0, ac_minus=0.0)
    dev = max(float(np.max(np.abs(generalized_pulse(k, c).internal_matrix(0.0) - ideal_matrix(k))))
              for k in ("pi", "pi_half"))
    print(f"  z_R = {zr:.0e}: max cell deviation {dev:.1e}")

P = generalized_pulse("pi_half", desk_coeffs(100.0))
print("\npi/2 pulse branches (to, from, index, weight, b_z, c_z):")
for to, frm, i, w, bz_, cz, a, th in P.table():
    print(f"  {to}<-{frm} #{i}: |w| = {abs(w):.4f}, b_z = {bz_:+.4f}, c_z = {cz:+.4f}")
