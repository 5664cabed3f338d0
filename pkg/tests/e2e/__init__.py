"""Acceptance sweeps over generated and demo instances."""
