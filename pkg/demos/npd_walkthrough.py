"""The SWF reader: the client clears a buffer pointer after the first frame,
the loop runs again, and the vendor copies from NULL.

    python3 demos/npd_walkthrough.py
"""
import json

from silc.config import AnalysisConfig
from silc.report import analyze_text, bundled_corpus, sanitize_text

SCENARIO = bundled_corpus() / "npd_swf"


def main():
    src = SCENARIO / "swf.mc"
    cfg = AnalysisConfig(seed=0).merged(json.loads((SCENARIO / "config.json").read_text()))
    text = src.read_text()
    a = analyze_text(text, src.name, cfg)
    for f in a.findings:
        e = f.triple.err
        print(f"{f.kind} [{f.status}] reported in {f.function}")
        print(f"  faults at {e.fault} inside {f.world}")
        print(f"  the NULL was written by {f.blamed}")
        print(f"  entered the vendor through {e.vendor_call}")
    out = sanitize_text(text, src.name, cfg)
    for p in out.patches:
        print(f"\nguard: {p['condition']}\n")
        print(p["wrapper"])
    print(f"\nfindings after sanitizing: {len(out.final.findings)}")


if __name__ == "__main__":
    main()
