"""HTTP service exposing the pipeline: simulation, training, transfer,
prediction, evaluation, grid fitting, and activation export."""

from .app import create_app

__all__ = ["create_app"]
