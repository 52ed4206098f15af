"""End-to-end CLI and script tests"""
