"""Test package for the docgraph-h8 pipeline."""
