"""
Experiment runner, file export, CLI and explorer UI for the BD-RIS simulator.
"""
