"""Average treatment effect estimation in randomized trials with prognostic scores.

Subpackages: :mod:`dataset`, :mod:`learners`, :mod:`prognostic`,
:mod:`estimators`, :mod:`simulation` and the :mod:`cli`.
"""
__version__ = "0.1.0"
