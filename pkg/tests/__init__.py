"""Test suites for the tube toolkit"""
