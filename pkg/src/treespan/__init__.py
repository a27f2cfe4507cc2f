"""Constructive spanning-tree embedding in expander graphs, desk scale.

The package splits into certification (spectral), tree structure
(trees), matching and connection machinery (matching, extendable,
tree_array, path_cover), the case-dispatched embedding pipelines
(pipeline), and a batch experiment harness (hosts, experiment, cli).
"""

__version__ = "0.1.0"
