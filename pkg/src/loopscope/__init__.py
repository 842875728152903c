"""Symbolic-execution verifier with loop-scope rules for while- and for-loops."""

__version__ = "0.1.0"
