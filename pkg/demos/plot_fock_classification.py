"""
Single-shot photon-number classification
========================================

Given one pulse with x clicks, which photon number m produced it? The
decision map picks the likeliest m, and the success probability
P(correct | m) says how far the array resolves single shots. The number of
resolvable photons falls quickly with loss.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pnrarray import DetectorConfig, fock_classify

for eta in (1.0, 0.86, 0.49):
    cfg = DetectorConfig(16, eta, 0.0)
    cls = fock_classify(cfg, m_max=12)
    direct = fock_classify(cfg, m_max=12, rule="direct")
    print(f"eta={eta}: resolvable up to {cls.max_resolvable} photons")
    print("   likeliest-m success:", np.round(cls.success_probs[:7], 4))
    print("   m = x success:      ", np.round(direct.success_probs[:7], 4))

etas = np.linspace(0.05, 1.0, 40)
fig, ax = plt.subplots()
for rule in ("map", "direct"):
    ax.step(etas, [fock_classify(DetectorConfig(16, e, 0.0), rule=rule).max_resolvable for e in etas],
            where="mid", label=rule)
ax.set_xlabel("efficiency eta")
ax.set_ylabel("largest m with P(correct) >= 0.5")
ax.legend()
fig.savefig("classification.png", dpi=120)

cls = fock_classify(DetectorConfig(16, 0.86, 0.0), m_max=10)
fig, ax = plt.subplots()
ax.imshow(cls.matrix, origin="lower", aspect="auto")
ax.set_xlabel("clicks x")
ax.set_ylabel("photons m")
fig.savefig("fock_click_matrix.png", dpi=120)
