"""Field synthesis: Biot-Savart kernels, the field engine and grid sweeps"""
