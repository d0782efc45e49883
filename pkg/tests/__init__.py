"""
Test package for mdrsp-solver.
"""
