"""brakkenet: curvature flow and structural analysis for labeled planar networks."""

__version__ = "0.1.0"
