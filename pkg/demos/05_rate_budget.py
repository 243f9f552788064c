"""Four-fold rates in the lab and after distributing e and f over the metro loops.

Run: python demos/05_rate_budget.py
"""

from photonfusion.config import build, load_config
from photonfusion.network import rate_budget

rc = build(load_config("throughput"))
b = rate_budget(rc.throughput, rc.plan, rc.topology, rc.quoted_remote_rate_hz)
print(f"local four-fold rate: {b['local_fourfold_rate_hz']:.2f} Hz")
print(f"losses: {b['network_loss_db']:.0f} dB network + {b['insertion_loss_db']:.0f} dB insertion")
for k, v in b["distributed_rate_hz"].items():
    print(f"  delivered {k:7s}: {v:.3f} Hz")
print(
    f"The quoted {b['quoted_remote_rate_hz']} Hz would need another "
    f"{b['extra_loss_db_to_match']:.1f} dB that this budget does not list."
)
