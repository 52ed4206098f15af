"""Report inspection scripts"""
