"""
Command-line front end of thetalab.
"""
