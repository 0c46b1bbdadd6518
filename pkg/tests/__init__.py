"""
Tests for ssprofile.
"""
