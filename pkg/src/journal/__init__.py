"""
Journal: persist evaluations, training runs and metrics as append-only JSON lines for audit.
"""

from journal.writer import RunJournal

__all__ = ["RunJournal"]
