from .engine import (
    EvalOutcome, ExecState, NoRuleApplies, ProgramAnalysis, RuleEvent, Summary,
    analyze_function, analyze_program, run_program,
)
from .leaks import LeakFinding, detect_leaks_at_exit
from .rules import Rule, RuleTable

__all__ = ["EvalOutcome", "ExecState", "NoRuleApplies", "ProgramAnalysis", "RuleEvent",
           "Summary", "analyze_function", "analyze_program", "run_program",
           "LeakFinding", "detect_leaks_at_exit", "Rule", "RuleTable"]
