from .campaign import Campaign, load_campaign, report_payload, run_campaign, write_report
from .classify import HazardLabel, Thresholds, classify_trace, rule_hits

__all__ = [
    "Campaign", "load_campaign", "report_payload", "run_campaign", "write_report",
    "HazardLabel", "Thresholds", "classify_trace", "rule_hits",
]
