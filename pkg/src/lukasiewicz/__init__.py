"""Łukasiewicz logic, neural rule extraction, Ω-automata and relational specifications."""

__version__ = "0.1.0"
