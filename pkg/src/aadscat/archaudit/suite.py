"""Batch audit of the published cost table (one-second inputs).

Input geometry per frontend, with EEG at ``64 * C_e`` features per frame:

==============  =====  =====  =====  =====
frontend          T     T_a    C_e    C_a
==============  =====  =====  =====  =====
baseline         128    128     1      1
scat88             8      8    50     456
scat1616          16     16    24     374
ssq                8     32    64    1024
==============  =====  =====  =====  =====

The scattering channel counts are the path totals for ``Q=8`` at 8 and 16 Hz.
The SSQ sizes follow from a 64-sample EEG window with hop 16 at 128 Hz and a
1024-sample audio window with hop 512 at 16384 Hz, keeping one row per
window sample.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from .layers import AuditError
from .models import ArchReport, audit, builtin_arch

FRONTENDS = {
    "baseline": dict(T=128, C_e=1, C_a=1),
    "scat88": dict(T=8, C_e=50, C_a=456),
    "scat1616": dict(T=16, C_e=24, C_a=374),
    "ssq": dict(T=8, T_a=32, C_e=64, C_a=1024),
}
FRONTEND_LABELS = {"baseline": "Baseline", "scat88": "Scat(8,8)", "scat1616": "Scat(16,16)", "ssq": "SSQ"}

WEIGHT_TOL = 0.10
GCA_WEIGHT_TOL = 0.25
FLOP_FACTOR = 2.0

# (model, frontend, printed FLOPs, printed weights)
PUBLISHED = [
    ("GCANet", "baseline", 70e6, 3e6),
    ("GCANet-NoEn", "scat88", 50e6, 1.3e6),
    ("GCANet-NoEn", "scat1616", 50e6, 1.4e6),
    ("GCANet-NoEn", "ssq", 61e6, 1.3e6),
    ("LSTM-X", "baseline", 1.8e6, 7.0e3),
    ("LSTM-X", "scat88", 4e6, 237e3),
    ("LSTM-X", "scat1616", 4.5e6, 125e3),
    ("LSTM-X", "ssq", 12e6, 330e3),
    ("LSTM-2", "baseline", 1.8e6, 7.7e3),
    ("LSTM-2", "scat88", 4e6, 237e3),
    ("LSTM-2", "scat1616", 4.5e6, 125e3),
    ("LSTM-2", "ssq", 12e6, 331e3),
    ("CNN-Dil", "baseline", 1.5e6, 4.4e3),
    ("CNN-Dil", "scat88", 1.0e6, 54.9e3),
    ("CNN-Dil", "scat1616", 1.6e6, 37e3),
    ("CNN-C1", "baseline", 1.5e6, 7.2e3),
    ("CNN-C1", "scat88", 1.7e6, 193e3),
    ("CNN-C1", "scat1616", 2.0e6, 108e3),
]

# Rows whose printed weights cannot come from the layer table at these input
# sizes. The transcription is still audited and shown, but the row is not
# compared against the printed value.
INCONSISTENT = {
    ("CNN-C1", "scat1616"): "layer table gives {weights} weights at T=16, C_e=24, C_a=374; "
                            "the printed count is less than half of that",
}


@dataclass
class SuiteRow:
    model: str
    frontend: str
    printed_flops: float
    printed_weights: float
    status: str  # "ok", "out_of_tolerance" or "not_audited"
    reason: str = ""
    report: Optional[ArchReport] = field(default=None, repr=False)

    @property
    def weights(self) -> Optional[int]:
        return self.report.total_weights if self.report else None

    @property
    def flops(self) -> Optional[float]:
        return self.report.total_flops if self.report else None

    @property
    def weight_tolerance(self) -> float:
        return GCA_WEIGHT_TOL if self.model.startswith("GCANet") else WEIGHT_TOL

    @property
    def weight_error(self) -> Optional[float]:
        return None if self.report is None else self.weights / self.printed_weights - 1.0

    @property
    def flop_ratio(self) -> Optional[float]:
        return None if self.report is None else self.flops / self.printed_flops

    @property
    def flops_within_factor(self) -> Optional[bool]:
        r = self.flop_ratio
        return None if r is None else 1.0 / FLOP_FACTOR <= r <= FLOP_FACTOR

    def as_dict(self) -> dict:
        return {
            "model": self.model, "variant": FRONTEND_LABELS[self.frontend], "status": self.status,
            "reason": self.reason, "printed_weights": self.printed_weights,
            "printed_flops": self.printed_flops, "weights": self.weights,
            "non_trainable": self.report.total_non_trainable if self.report else None,
            "flops": self.flops, "weight_error": self.weight_error, "flop_ratio": self.flop_ratio,
        }


def audit_row(model: str, frontend: str, n: int = 2) -> ArchReport:
    return audit(builtin_arch(model, n=n, **FRONTENDS[frontend]))


def audit_suite() -> List[SuiteRow]:
    """Audit every row of the published table, in table order."""
    rows = []
    for model, fe, pf, pw in PUBLISHED:
        try:
            report = audit_row(model, fe)
        except AuditError as exc:
            rows.append(SuiteRow(model, fe, pf, pw, "not_audited", f"shape error: {exc}"))
            continue
        if (model, fe) in INCONSISTENT:
            reason = INCONSISTENT[(model, fe)].format(weights=report.total_weights)
            rows.append(SuiteRow(model, fe, pf, pw, "not_audited", reason, report))
            continue
        row = SuiteRow(model, fe, pf, pw, "ok", "", report)
        if abs(row.weight_error) > row.weight_tolerance:
            row.status = "out_of_tolerance"
            row.reason = f"weights off by {row.weight_error:+.1%}"
        rows.append(row)
    return rows


def format_suite(rows: List[SuiteRow]) -> str:
    lines = [f"{'model':<12} {'variant':<12} {'weights':>10} {'printed':>9} {'err':>7} "
             f"{'FLOPs':>9} {'printed':>8} {'ratio':>6}  status"]
    for r in rows:
        if r.report is None:
            lines.append(f"{r.model:<12} {FRONTEND_LABELS[r.frontend]:<12} {'-':>10} "
                         f"{r.printed_weights:>9.4g} {'-':>7} {'-':>9} {r.printed_flops:>8.3g} {'-':>6}  "
                         f"{r.status}: {r.reason}")
            continue
        tail = r.status if not r.reason else f"{r.status}: {r.reason}"
        lines.append(f"{r.model:<12} {FRONTEND_LABELS[r.frontend]:<12} {r.weights:>10d} "
                     f"{r.printed_weights:>9.4g} {r.weight_error:>+7.1%} {r.flops:>9.3g} "
                     f"{r.printed_flops:>8.3g} {r.flop_ratio:>6.2f}  {tail}")
    return "\n".join(lines)
