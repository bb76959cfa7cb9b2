"""
Test suite for NLFS regression.
"""
