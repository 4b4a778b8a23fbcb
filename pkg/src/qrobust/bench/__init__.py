"""Benchmark harness: grid runs, result records and performance profiles."""
from .harness import run_grid, run_one
from .profile import ProfileTable, emit_profile_csv, emit_svg, performance_profile
from .records import HEADER, BenchRecord, RecordStatus, emit_csv, parse_csv

__all__ = [
    "HEADER",
    "BenchRecord",
    "ProfileTable",
    "RecordStatus",
    "emit_csv",
    "emit_profile_csv",
    "emit_svg",
    "parse_csv",
    "performance_profile",
    "run_grid",
    "run_one",
]
