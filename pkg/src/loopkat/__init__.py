"""Equational reasoning for Kleene algebra with graph loops over binary relations."""
from __future__ import annotations

__version__ = "0.1.0"
