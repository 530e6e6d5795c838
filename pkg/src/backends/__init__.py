# src/backends/__init__.py
