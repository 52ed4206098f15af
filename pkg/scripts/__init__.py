"""Environment setup and report inspection scripts"""
