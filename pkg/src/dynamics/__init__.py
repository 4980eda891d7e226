"""Time-dependent potentials, conveyor transport and the linear collider"""
