"""Sixteen polarization projections at the fusion dip: four peaks.

First the exact probabilities, then a lossless Monte Carlo run of the same
detector layout to show the counts landing where they should.

Run: python demos/06_projection_spectrum.py
"""

import dataclasses

from photonfusion import fuse, projection_spectrum
from photonfusion.config import build, load_config
from photonfusion.montecarlo import CoincidenceSpec, count_coincidences, simulate
from photonfusion.network import RoutePlan
from photonfusion.source import SpdcSpec

exact = projection_spectrum(fuse().final_state)
rc = build(load_config("network_projection"))
exp = dataclasses.replace(
    rc.experiment,
    source=SpdcSpec.ideal(pair_rate_hz=1e5),
    detectors=tuple(dataclasses.replace(d, efficiency=1.0, dark_rate_hz=0.0) for d in rc.experiment.detectors),
    plan=RoutePlan(),
    topology=None,
    duration_s=5.0,
    block_s=1.0,
)
run = simulate(exp, 1)
print(f"{run.events} fused events")
for label, channels in rc.counts.items():
    n = count_coincidences(run.streams, CoincidenceSpec(tuple(channels), 2000))
    bar = "#" * (n // 25)
    print(f"{label}  p={exact[label]:.4f}  counts={n:5d} {bar}")
