"""
From raw event logs to a transfer graph
=======================================

Decode a handful of raw logs the way an Ethereum node would return them,
drop the ones that are not fungible-token transfers, and look at the
resulting per-token multigraph.
"""

from tokengraphs import (RawLog, build_graphs, decode_logs, degree_stats,
                         partition_windows, transfer_topic_hash,
                         weak_components)

TOPIC = transfer_topic_hash()
print(f"Transfer topic0: {TOPIC}")

# three raw logs: two fungible transfers and one NFT transfer (the NFT
# standard indexes the token id as a fourth topic and carries no data)
def topic(addr_suffix):
    return "0x" + "0" * 24 + addr_suffix.rjust(40, "0")

raw = [
    {"address": "0x" + "a1".rjust(40, "0"),
     "topics": [TOPIC, topic("b1"), topic("c1")],
     "data": "0x" + format(1_500_000, "064x"),
     "blockNumber": hex(18_000_010), "transactionHash": "0x" + "01" * 32,
     "logIndex": "0x0"},
    {"address": "0x" + "a1".rjust(40, "0"),
     "topics": [TOPIC, topic("c1"), topic("d1")],
     "data": "0x" + format(9_000, "064x"),
     "blockNumber": hex(18_000_025), "transactionHash": "0x" + "02" * 32,
     "logIndex": "0x3"},
    {"address": "0x" + "ee".rjust(40, "0"),  # NFT: filtered out
     "topics": [TOPIC, topic("b1"), topic("c1"), "0x" + format(7, "064x")],
     "data": "0x",
     "blockNumber": hex(18_000_030), "transactionHash": "0x" + "03" * 32,
     "logIndex": "0x1"},
]

events = list(decode_logs(RawLog.from_rpc(entry) for entry in raw))
print(f"decoded {len(events)} transfers (the NFT-shaped log was dropped)")
for event in events:
    print(f"  {event.from_addr[-6:]} -> {event.to_addr[-6:]} "
          f"value={event.value} block={event.block}")

# group into 100K-block windows and build one graph per token
for window, bucket in partition_windows(events).items():
    for token, graph in build_graphs(bucket, window).items():
        comps = weak_components(graph)
        degrees = degree_stats(graph)
        print(f"\ntoken {token[-6:]} in window {window}:")
        print(f"  {graph.num_nodes} nodes, {graph.num_edges} edges, "
              f"{comps.count} weak component(s)")
        busiest = max(graph.nodes, key=degrees.degree)
        print(f"  busiest address {busiest[-6:]} has degree {degrees.degree(busiest)}")
