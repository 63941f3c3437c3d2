"""Synthetic orbital-imagery laboratory.

Renders camera sweeps over procedural scenes with a deterministic
software rasterizer, annotates targets from object-id buffers, and
characterizes detector performance across altitude, radius, azimuth, and
illumination.
"""

__version__ = "0.1.0"
