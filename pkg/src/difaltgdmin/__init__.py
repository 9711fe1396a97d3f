"""Decentralized multi-task representation learning simulator."""
