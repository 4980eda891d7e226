"""Design checks for layouts, conductors and traps"""
