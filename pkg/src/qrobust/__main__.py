"""
Entry point for qrobust when run as a module.

Usage: python -m qrobust
"""
from .app import run

if __name__ == "__main__":
    run()
