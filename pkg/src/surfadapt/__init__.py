"""Defect-tolerant rotated surface codes with bandage-like super-stabilizers."""

__version__ = "0.1.0"
