"""Geometry, medial-axis and tube-loss modules"""
