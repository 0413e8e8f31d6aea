"""
Utilities: kernel spec files and saved verification runs
"""
