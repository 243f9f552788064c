"""Fuse two singlets on a beamsplitter and look at what each herald leaves behind.

Run: python demos/01_fusion_and_heralding.py
"""

from photonfusion import fuse, herald, splitter_tree_success
from photonfusion.fock import to_text

outcome = fuse()
print(f"Routing two pairs through the splitter tree succeeds with p = {outcome.success_probability}.")
print("The fused four-photon state (amplitude | occupied slots):")
print(to_text(outcome.final_state))

# Measuring b and d picks out one block of the superposition.
for pattern in [("H", "H"), ("V", "V"), ("V", "H"), ("H", "V")]:
    res = herald(outcome.final_state, pattern)
    print(f"b,d = {pattern}: {res.herald_class.name} with probability {res.probability:.3f}")
    print("  remote e,f state:")
    for line in to_text(res.remote_state).splitlines():
        print("   ", line)
    if res.postselected_state is not None:
        print(f"  one photon per side (weight {res.postselected_weight:.2f}):")
        for line in to_text(res.postselected_state).splitlines():
            print("   ", line)

print("Without swapping, only", splitter_tree_success(allow_swap=False), "of routings succeed.")
