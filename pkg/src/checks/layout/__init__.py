"""Layout-level design checks"""
