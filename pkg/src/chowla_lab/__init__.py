"""Desk-scale number theory workbench.

Bulk multiplicative-function tables, real primitive characters and their
polynomial sums, Smith normal form parametrizations, sieve counts and the
correlation/moment experiments built on top of them.
"""

__version__ = "0.1.0"
