"""Dataset loading and synthetic generation."""
