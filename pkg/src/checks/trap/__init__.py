"""Checks on characterized traps"""
