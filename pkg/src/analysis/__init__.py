"""Trap analysis: minima, guide profiles and harmonic characterization"""
