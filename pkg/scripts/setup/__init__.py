"""Environment setup scripts"""
