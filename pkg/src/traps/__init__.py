"""Trap library: parameterized layouts, spacing search, rotation, limits and conveyor chips"""
