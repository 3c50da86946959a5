"""Lexical-normalization toolkit: corpus format, baselines, lookup, LLM pipeline, scoring."""

__version__ = "0.1.0"
