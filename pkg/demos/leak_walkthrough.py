"""The client-list leak: a vendor destructor frees a record but not one of
its fields, and the client caller is left holding nothing that reaches it.

    python3 demos/leak_walkthrough.py
"""
from silc.config import AnalysisConfig
from silc.report import analyze_text, bundled_corpus, sanitize_text

SCENARIO = bundled_corpus() / "leak_client_list" / "server.mc"


def main():
    text = SCENARIO.read_text()
    cfg = AnalysisConfig(seed=0)
    a = analyze_text(text, SCENARIO.name, cfg)
    print("findings before sanitizing:")
    for f in a.findings:
        print(f"  {f.kind} [{f.status}] in {f.function}")
        print(f"    lost through field '{f.triple.err.edge}' at {f.triple.err.site}")
        print(f"    blamed on {f.blamed}")
        print(f"    wrapper goes around {f.culprit}")
    out = sanitize_text(text, SCENARIO.name, cfg)
    for p in out.patches:
        print(f"\n{p['template']} sanitizer {p['name']}:\n")
        print(p["diff"])
    print(f"findings after sanitizing: {len(out.final.findings)}")


if __name__ == "__main__":
    main()
