"""Heralded N00N and Bell states delivered to the two remote nodes.

Runs shortened versions of the bundled network experiments: the N00N
four-fold dip versus delay, and the heralded Bell fringe versus LCVR phase.
The bundled configs use the measured source imperfections, so the contrast
is limited the same way as in the lab.

Run: python demos/07_heralded_states_over_network.py
"""

from photonfusion.config import apply_overrides, build, load_config
from photonfusion.montecarlo import scan

for name, quantity in (("heralded_noon", "fourfold"), ("heralded_bell", "HeHf")):
    cfg = apply_overrides(load_config(name), ["experiment.duration_s=200", "scan.range.num=7"])
    rc = build(cfg)
    rows = scan(rc.experiment, rc.scan_axis, rc.scan_points, rc.seed, rc.coincidence, rc.counts, workers=4)
    print(f"{name} ({rc.scan_axis}):")
    for r in rows:
        if r.quantity == quantity:
            print(f"  {float(r.point):7.3f}  {r.subtracted:4d} {'#' * r.subtracted}")
