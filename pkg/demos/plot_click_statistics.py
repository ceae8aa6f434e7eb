"""
Click statistics of a 16-bin array
===================================

A temporal array splits each pulse over 16 time bins watched by on/off
detectors. For coherent light the number of clicking bins is binomial.
Here the analytic distribution is compared with a Monte Carlo run, and
with the click distribution of photon-number (Fock) states.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pnrarray import DetectorConfig, click_moments, click_pmf_fock, click_pmf_poisson, variance_maximizing_mu
from pnrarray.montecarlo import Source, run_experiment, uniform_detector

cfg = DetectorConfig(n=16, eta=0.49, p_d=0.0)
x = np.arange(cfg.n + 1)

# analytic PMF against 10^6 simulated pulses
fig, ax = plt.subplots()
for mu in (1.0, 10.0, 50.0):
    pmf = click_pmf_poisson(cfg, mu)
    sim = run_experiment(uniform_detector(cfg), Source.poisson(mu), 10**6, seed=1)
    ax.plot(x, pmf.probs, "-", label=f"mu = {mu:g}")
    ax.plot(x, sim.pmf(), "k.", ms=4)
    print(f"mu={mu:5g}  TV(analytic, simulated) = {pmf.tv_distance(sim.pmf()):.1e}")
ax.set_xlabel("clicks x")
ax.set_ylabel("P(x)")
ax.legend()
fig.savefig("click_pmf.png", dpi=120)

# the click variance peaks where half the bins are expected to fire
mu_grid = np.linspace(0, 100, 501)
var = [click_moments(cfg, mu)[1] for mu in mu_grid]
peak = variance_maximizing_mu(cfg)
print(f"variance peak at mu = {peak:.3f} (mu*eta = {peak * cfg.eta:.3f})")

fig, ax = plt.subplots()
ax.plot(mu_grid, var)
ax.axvline(peak, ls=":")
ax.set_xlabel("mean photon number mu")
ax.set_ylabel("Var(x)")
fig.savefig("click_variance.png", dpi=120)

# Fock states: m photons never give more than m clicks without dark counts
for m in (1, 3, 5):
    pmf = click_pmf_fock(cfg, m)
    print(f"m={m}: P(x) =", np.round(pmf.probs[: m + 1], 4))
