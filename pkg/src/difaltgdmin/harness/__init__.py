"""Experiment configuration, orchestration, CSV output and plotting."""
