"""Configuration, logging setup and the command-line surface"""
