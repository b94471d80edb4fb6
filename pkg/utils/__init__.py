"""Logging, settings, timing and trial-failure bookkeeping shared by the commands."""
