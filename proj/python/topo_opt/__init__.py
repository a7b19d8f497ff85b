"""Persistence-based topological optimization (C++ core)."""

from ._core import descend, experiment_loss, fg_distance, gen_circle, gen_sphere, rips_diagram

__all__ = ["descend", "experiment_loss", "fg_distance", "gen_circle", "gen_sphere", "rips_diagram"]
