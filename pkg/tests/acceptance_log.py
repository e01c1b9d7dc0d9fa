"""Pass/fail registry for the acceptance criteria.

Each acceptance test runs inside ``criterion(n, title)``; the outcome is
printed immediately and collected so that ``conftest.py`` can repeat one line
per criterion in the terminal summary.
"""
from __future__ import annotations

import contextlib

RESULTS = {}


@contextlib.contextmanager
def criterion(number, title):
    details = []
    try:
        yield details
    except BaseException:
        RESULTS[number] = (title, False, "; ".join(details))
        print(f"criterion {number:2d}: FAIL  {title}  {'; '.join(details)}")
        raise
    RESULTS[number] = (title, True, "; ".join(details))
    print(f"criterion {number:2d}: PASS  {title}  {'; '.join(details)}")


def summary_lines():
    return [f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{d}]" if d else "")
            for n, (title, ok, d) in sorted(RESULTS.items())]
