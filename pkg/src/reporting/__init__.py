"""Output writers and provenance"""
