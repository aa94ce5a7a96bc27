"""
Test suite for charflow
"""
