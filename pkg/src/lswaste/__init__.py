"""Energy wasted by flooding in tree-structured sensor networks, and the
Levelling & Sectoring protocol that avoids it."""

from .analytic import Controlled, EnergyModel, Pure, WastageReport, binary, geometric_sum, linear, nested, qary
from .topology import Binary, Linear, Nested, Qary, Tree, build, extract_spanning_tree, nodes_at_depth

__version__ = "0.1.0"
