#!/usr/bin/env python3
"""One-pass recount of a TU corpus straight from the raw files.

Prints per-raw-label graph counts, average node and edge counts, and the
maximum node count. Values are frozen into tests/unit/test_graph.cpp.
"""
import collections
import sys
from pathlib import Path


def main(root):
    root = Path(root)
    name = root.name
    labels = [line.strip() for line in open(root / f"{name}_graph_labels.txt") if line.strip()]
    indicator = [int(line) for line in open(root / f"{name}_graph_indicator.txt") if line.strip()]
    nodes = collections.Counter(indicator)
    edges = set()
    for line in open(root / f"{name}_A.txt"):
        if not line.strip():
            continue
        a, b = (int(x) for x in line.split(","))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    print("graphs", len(labels))
    for raw, count in sorted(collections.Counter(labels).items(), key=lambda kv: int(kv[0])):
        print("label", raw, count)
    print("avg_nodes %.6f" % (sum(nodes.values()) / len(labels)))
    print("avg_edges %.6f" % (len(edges) / len(labels)))
    print("max_nodes", max(nodes.values()))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/MUTAG")
