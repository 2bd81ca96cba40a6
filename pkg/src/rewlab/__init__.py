"""Real entanglement witnesses and local-unitary orbits of bipartite states."""

__version__ = "0.1.0"
