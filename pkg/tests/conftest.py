import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from silc.blame import BugCatalog, classify_all  # noqa: E402
from silc.config import AnalysisConfig  # noqa: E402
from silc.executor import run_program  # noqa: E402
from silc.frontend import parse  # noqa: E402
from silc.report import bundled_corpus  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


def scenario_config(d: Path) -> AnalysisConfig:
    cfg = AnalysisConfig(seed=0)
    if (d / "config.json").exists():
        cfg = cfg.merged(json.loads((d / "config.json").read_text()))
    return cfg


def corpus_files():
    root = bundled_corpus()
    return sorted(root.glob("*/*.mc"))


def analyze(src: str, cfg=None, filename="t.mc", trace=None):
    """Parse, summarise and classify. Returns (program, analysis, findings, problems)."""
    cfg = cfg or AnalysisConfig(seed=0)
    p = parse(src, filename)
    run = run_program(p, cfg, trace)
    findings, problems = classify_all(run.summaries, BugCatalog.from_config(cfg))
    return p, run, findings, problems


@pytest.fixture
def corpus_dir() -> Path:
    return bundled_corpus()
