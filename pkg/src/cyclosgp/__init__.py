"""Short-generator recovery on 2-power cyclotomic rings, with its statistics and cost models."""

__version__ = "0.1.0"
