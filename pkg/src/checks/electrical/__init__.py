"""Electrical checks on chip conductors"""
