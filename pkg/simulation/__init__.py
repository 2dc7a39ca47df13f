"""
Channel simulation, link metrics and reciprocity analysis.
"""
