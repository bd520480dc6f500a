"""Vision-only leader-follower formation control for fin-driven underwater robots."""

__version__ = "0.1.0"
