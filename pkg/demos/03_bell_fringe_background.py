"""Why the singlet fringe of a real source only reaches ~17 % visibility.

Only a fraction of the source output is entangled; the rest behaves like
unpolarized pairs and fills in the fringe minima.

Run: python demos/03_bell_fringe_background.py
"""

import numpy as np

from photonfusion.protocol import bell_fringe_via_state, fringe_visibility

phis = np.linspace(0, 2 * np.pi, 9)
for f in (1.0, 0.5, 0.17):
    curve = [bell_fringe_via_state(p, f)[0] for p in phis]
    shown = " ".join(f"{x:.3f}" for x in curve)
    print(f"entangled fraction {f:4.2f}: P_HH = {shown}  visibility {fringe_visibility(curve):.3f}")
