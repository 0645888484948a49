#!/usr/bin/env python3
"""Grade the bundled transfer-function corpus and print margins.

A nonzero exit means at least one entry disagrees with its hand-derived
ground truth.
"""

from hyperstab.corpus import bundled_corpus_path, corpus_check, load_corpus
from hyperstab.realness import classify_pr


def main() -> int:
    entries = load_corpus(bundled_corpus_path())
    print(f"{'id':<16} {'grade':<6} {'d':>12} {'d0':>12} {'d1':>12}")
    for entry in entries:
        c = classify_pr(entry.plant)
        print(
            f"{entry.id:<16} {c.grade.value:<6} "
            f"{c.d:>12.6g} {c.d0:>12.6g} {c.d1:>12.6g}"
        )
    report = corpus_check(entries)
    print(f"{report.checked} entries, {len(report.mismatches)} mismatches")
    return 0 if report.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
