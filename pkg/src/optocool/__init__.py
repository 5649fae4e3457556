"""Quantum-noise budgets and feedback cooling of optomechanical test masses."""

__version__ = "0.1.0"
