# src/hamiltonian/__init__.py
