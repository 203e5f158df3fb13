"""Concurrence classes for multi-qubit pure and mixed states."""
