"""
Phase-space calculus against brute-force grids.

Branches are represented by canonical unitaries and overlaps are closed-form
Gaussian integrals.  Here the same quantities are computed on a split-step
Fourier grid.
"""
import numpy as np

from e1m1clock import gridoracle as go
from e1m1clock import phasespace as ps
from e1m1clock.core import make_wavepacket

grid = go.Grid1D(80.0, 1024, center=-4.0)
psi = make_wavepacket([0, 0, 0.3], 0.6)
f0 = go.gaussian_field(grid, psi, "g")

print("Free fall: canonical unitary vs grid")
for m, T, g in ((1.0, 1.0, 0.0), (1.2, 2.5, 0.9), (0.8, 3.0, -0.5)):
    out = go.free_evolution(f0, T, m, g=g, steps=50)["g"]
    ana = go.apply_canonical_on_grid(ps.free_fall_segment(m, T, g), f0["g"], grid)
    print(f"  m = {m}, T = {T}, g = {g:+.1f}: 1 - fidelity = {abs(1 - abs(go.overlap_numeric(ana, out, grid)) ** 2):.1e}")

print("\nExpectation values: Gaussian formula vs quadrature")
amp = psi.position_amplitude_1d(grid.z)
for a in (0.0, 0.35, 1.0):
    u = ps.CanonicalUnitary([0, 0, 0.9], [0, 0, -0.6], a)
    num = go.overlap_numeric(amp, go.apply_canonical_on_grid(u, amp, grid), grid)
    ana = np.exp(np.sum(ps._log_expectation_axes(u, psi)[2]))
    print(f"  a = {a}: |difference| = {abs(num - ana):.1e}, |<U>| = {abs(ana):.6f}")

print("\nTwo arms that separate lose contrast")
u = ps.free_fall_segment(1.0, 2.0)
for d in (0.0, 1.0, 3.0, 10.0):
    far = ps.compose(ps.translation([0, 0, d]), u)
    res = ps.gaussian_overlap([ps.WeightedBranch(0.5, u), ps.WeightedBranch(0.5, far)], None, psi)
    print(f"  separation {d:5.1f}: exit signal {ps.exit_signal(res):.6f}")
