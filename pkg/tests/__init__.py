"""
Test package for covest
"""
