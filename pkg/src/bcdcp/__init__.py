"""Bivariate compound dynamic contagion process."""
