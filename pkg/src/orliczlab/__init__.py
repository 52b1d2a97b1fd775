"""Orlicz-space numerics on the unit ball of C^N."""
