"""Simulation and reinforcement-learning toolkit for UAV base-station crews
whose membership changes over time, plus solar-aware charging schedules."""

__version__ = "0.1.0"
