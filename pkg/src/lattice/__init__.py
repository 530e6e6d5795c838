# src/lattice/__init__.py
