"""Figure rendering for geofence-sim sweep outputs."""

from .frontier import render_frontier
from .heatmaps import render_heatmaps
from .io import SchemaError, load_nmin, load_sweep

__all__ = ["SchemaError", "load_nmin", "load_sweep", "render_frontier",
           "render_heatmaps"]
