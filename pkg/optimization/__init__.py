"""
Fractional-programming transforms and the BCD/PDD solvers.
"""
