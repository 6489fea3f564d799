from .labeldict import LabelDict
from .negotiator import negotiate
from .renderer import render
from .session import EvaluationReport, build_report, run_condition, run_sweep

__version__ = "26.10.0"
