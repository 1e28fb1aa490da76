"""Edge-server task partitioning and frequency control with Dirichlet-headed actor-critic agents."""

__version__ = "0.1.0"
