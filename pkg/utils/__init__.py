"""
SISI Operator Toolkit - Utilities Package

Report serialization and the SQLite result store used by the command line.
"""
