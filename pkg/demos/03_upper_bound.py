"""
How well can structure alone do?
================================

Colour refinement (1-WL) groups nodes that no structural method can tell
apart. The ratio of classes to nodes bounds structure-only Hits@1, and the
bound for a graph pair is the smaller of the two ratios.
"""

from iteralign import Graph, tub, wl_refine

# A triangle with a pendant node: the two triangle nodes away from the
# pendant are interchangeable, so 4 nodes fall into 3 classes
source = Graph(4, [(0, 1), (1, 2), (2, 0), (0, 3)])
colours = wl_refine(source)
print("source classes:", [c.tolist() for c in colours.classes()])

# A 5-node path mirrors around its centre: 3 classes over 5 nodes
target = Graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
print("target classes:", [c.tolist() for c in wl_refine(target).classes()])

# min(3/4, 3/5)
print("upper bound:", tub(source, target))

# Regular graphs are the worst case: every node looks the same
cycle = Graph(6, [(i, (i + 1) % 6) for i in range(6)])
print("6-cycle bound:", tub(cycle, cycle))
