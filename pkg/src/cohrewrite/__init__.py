"""Coherent rewriting toolkit."""
