"""Estimation of the weights of a finite mixture of quantum states."""
__version__ = '0.1.0'
