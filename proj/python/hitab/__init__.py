"""Certified output bounds and closed-loop reachability for smooth networks."""

from hitab._core import *  # noqa: F401,F403
