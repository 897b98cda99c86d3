"""
The three transfer-graph shapes and their features
==================================================

Legitimate tokens grow one big interconnected component and stay active
across the whole window.  Two scam shapes look nothing like that: the
honeypot/rug-pull star (everything routed through one pool plus the null
address) and the address-poisoning spray (hundreds of 2-4 node scraps
sending dust).  The per-graph features make the difference measurable.
"""

from tokengraphs import (ArchetypeConfig, BlockWindow, build_graphs,
                         degree_stats, extract_features,
                         gen_counterfeit_poisoning, gen_honeypot_star,
                         gen_legitimate, weak_components)
from tokengraphs.features import histogram_bins

window = BlockWindow(18_000_000, 18_100_000)

configs = [
    ("legitimate", gen_legitimate,
     ArchetypeConfig(kind="legitimate", node_budget=2_000, window=window,
                     lifetime=90_000, seed=7)),
    ("honeypot star", gen_honeypot_star,
     ArchetypeConfig(kind="honeypot_star", node_budget=2_173, window=window,
                     lifetime=8_000, temporal_concentration=0.3, seed=7)),
    ("address poisoning", gen_counterfeit_poisoning,
     ArchetypeConfig(kind="counterfeit_poisoning", node_budget=900,
                     window=window, lifetime=6_000,
                     temporal_concentration=0.3, seed=7)),
]

vectors = []
for name, generator, cfg in configs:
    events, label = generator(cfg)
    graph, = build_graphs(events, window).values()
    comps = weak_components(graph)
    fv = extract_features(graph, comps)
    vectors.append(fv)
    hubs = degree_stats(graph).nodes_with_degree_over(3)
    print(f"{name} (label={label}):")
    print(f"  nodes={fv.num_nodes} edges={fv.num_edges} "
          f"components={fv.num_components} avg_comp_size={fv.avg_comp_size:.1f}")
    print(f"  lifetime={fv.lifetime} blocks, std_dev={fv.transfer_std_dev:.0f}, "
          f"density={fv.density:.5f}")
    print(f"  giant component share={max(comps.sizes) / fv.num_nodes:.0%}, "
          f"addresses with degree>3: {len(hubs)}")
    print()

# the same numbers as histogram bins, ready for external plotting
bins = histogram_bins(vectors, bins=5)
print("lifetime histogram over the three graphs:")
for lo, hi, count in bins["lifetime"]:
    print(f"  [{lo:>8.0f}, {hi:>8.0f}): {'#' * count}")
