"""Per-module unit tests"""
