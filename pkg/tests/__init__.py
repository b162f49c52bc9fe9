"""
Tests package for composite CNOT sequences.
"""
