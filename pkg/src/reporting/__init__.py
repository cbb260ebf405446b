"""Artifact writers and figures."""
