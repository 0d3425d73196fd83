"""Neural-network solver for the Monge-Ampere equation with transport boundary condition."""

__version__ = "0.1.0"
