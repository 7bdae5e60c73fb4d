"""Acceptance criteria test package."""
