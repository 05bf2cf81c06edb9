"""Symbolic shape, weight and FLOP audit of the decoder networks."""
from .layers import KINDS, AuditError, Layer, LayerCost
from .models import (ARCH_NAMES, ArchReport, ArchSpec, GcaParams, LayerReport, audit,
                     builtin_arch)
from .suite import FRONTENDS, PUBLISHED, SuiteRow, audit_row, audit_suite, format_suite

__all__ = [
    "KINDS", "AuditError", "Layer", "LayerCost", "ARCH_NAMES", "ArchReport", "ArchSpec",
    "GcaParams", "LayerReport", "audit", "builtin_arch", "FRONTENDS", "PUBLISHED", "SuiteRow",
    "audit_row", "audit_suite", "format_suite",
]
