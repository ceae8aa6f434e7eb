"""
Wavelength dependence of the coupler tree
=========================================

Off the design wavelength each 2x2 coupler becomes slightly unbalanced, so
the 16 bins no longer receive equal power. To first order some bins gain,
some lose and some stay flat; the ones that do not lose power set an
effective array size.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pnrarray.multiplexer import (
    MultiplexerSpec,
    bin_ports,
    bin_weights,
    effective_array_size,
    loss_budget,
    overall_efficiency,
)

spec = MultiplexerSpec()

for (fiber, delay), c in zip(bin_ports(spec), bin_weights(spec).linear_coeffs):
    print(f"fiber {fiber}  delay {delay:6.0f} ns  d(power)/d(a*dl) = {c:+.2f}")

grid = np.linspace(-40, 40, 161)
weights = np.array([bin_weights(spec, dl).fractions for dl in grid])
fig, ax = plt.subplots()
ax.plot(grid, weights * 16)
ax.set_xlabel("wavelength offset (nm)")
ax.set_ylabel("bin power x 16")
fig.savefig("bin_power.png", dpi=120)

print("effective size at +-5 nm:", effective_array_size(spec, -5.0), effective_array_size(spec, 5.0))

db, t = loss_budget(spec)
print(f"expected loss {db:.3f} dB, transmission {t:.3f}")
print(f"overall efficiency with detectors at 0.49 and 0.65: {overall_efficiency(spec, [0.49, 0.65]):.3f}")
