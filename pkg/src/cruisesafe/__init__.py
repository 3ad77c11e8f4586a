"""Functional-safety workbench for a conventional cruise control system.

Modules: funcmodel (architecture + traceability), ccstate (mode logic),
hara (ASIL determination, safety goals), simcore (longitudinal simulation
with fault injection), safemon (runtime actuation-rate monitor) and
workbench (classifier, campaigns, CLI glue).
"""

__version__ = "0.1.0"
