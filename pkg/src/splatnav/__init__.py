"""Image-goal navigation over a renderable scene prior with a Monte Carlo MPC planner."""

__version__ = "0.1.0"
