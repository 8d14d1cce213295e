"""Regenerate docs/tail_calibration.md from the published count evidence.

The report documents which comparison convention reproduces the reference
study's published p-values, computed with this package's own exact test.
Run from the repository root:

    python tools/make_calibration_report.py
"""

from pathlib import Path

from periscreen.cooccurrence import TableScheme, comparison_table
from periscreen.stats import ContingencyTable, TailMode, fisher_exact

# (label, counts a/b/c/d as complement tables, published p or bound)
CONDITION_CASES = [
    ("severity 4 x swollen joints", (14, 16, 56, 198), "0.0422"),
    ("severity 4 x family history of eye disease", (2, 28, 1, 253), "0.0337"),
    ("severity 1 x optic-nerve abnormality", (5, 34, 0, 245), "<0.0001"),
    ("female stratum: severity 4 x swollen joints", (7, 3, 20, 87), "0.0195"),
    ("female stratum: severity 4 x hearing difficulty", (5, 5, 12, 95), "0.0245"),
    ("female stratum: severity 4 x difficulty walking", (4, 6, 7, 100), "0.0193"),
    ("male stratum: severity 4 x family history of eye disease", (2, 18, 0, 147), "0.0163"),
    ("male stratum: severity 1 x optic-nerve abnormality", (4, 13, 0, 150), "0.0002"),
    ("middle-age stratum: severity 1 x asthma", (3, 5, 6, 85), "0.0475"),
    ("young-adult stratum: severity 4 x family history of eye disease", (2, 3, 0, 86), "0.0049"),
]

DEMOGRAPHIC_CASES = [
    ("males more likely at severity 3", (67, 100, 25, 92), "0.0012"),
    ("females more likely at severity 2", (58, 59, 62, 105), "0.0389"),
    ("middle-age vs adolescent at severity 4", (16, 83, 0, 52), "0.0013"),
    ("middle-age vs young-adult at severity 4", (16, 83, 5, 86), "0.0213"),
    ("old-age vs adolescent at severity 3", (18, 24, 10, 42), "0.0224"),
    ("old-age vs adolescent at severity 4", (9, 33, 0, 52), "0.0004"),
]


def p_for(counts, scheme, tail):
    table = comparison_table(ContingencyTable(*counts), scheme)
    return fisher_exact(table, tail).p_value


def fmt(p: float) -> str:
    return f"{p:.4f}" if p >= 5e-5 else f"{p:.2e}"


def rows(cases):
    out = []
    for label, counts, published in cases:
        cells = [label, str(counts), published]
        for scheme in (TableScheme.COMPLEMENT, TableScheme.RATIO_PAIRS):
            for tail in (TailMode.TWO_SIDED, TailMode.GREATER):
                cells.append(fmt(p_for(counts, scheme, tail)))
        out.append("| " + " | ".join(cells) + " |")
    return out


def render() -> str:
    lines = [
        "# Comparison-convention calibration",
        "",
        "Every published significance value from the reference study's summary",
        "tables was recomputed under each candidate convention: complement",
        "tables `[[a, b], [c, d]]` versus ratio-pair tables `[[a, a+b], [c, c+d]]`,",
        "each with two-sided and upper tails. Counts below are the complement",
        "form (a = group with condition, b = group without, c/d the rest).",
        "",
        "## Condition grids (questionnaire, routine and device screenings)",
        "",
        "| comparison | counts | published | comp 2-sided | comp greater | ratio 2-sided | ratio greater |",
        "|---|---|---|---|---|---|---|",
        *rows(CONDITION_CASES),
        "",
        "## Demographic comparisons (gender, age cohorts)",
        "",
        "| comparison | counts | published | comp 2-sided | comp greater | ratio 2-sided | ratio greater |",
        "|---|---|---|---|---|---|---|",
        *rows(DEMOGRAPHIC_CASES),
        "",
        "## Adopted convention",
        "",
        "The two-sided tail (probabilities at most the observed table's, with",
        "relative tie slack 1e-7) reproduces every published value once the",
        "table construction is split by comparison family:",
        "",
        "* **Condition grids use ratio-pair tables.** All ten published",
        "  condition p-values match to four decimals under",
        "  `[[a, a+b], [c, c+d]]`, and none match under the complement",
        "  construction. The study's condition analysis evidently entered the",
        "  two incidence ratios' numerator/denominator pairs directly into the",
        "  test. `ratio-pairs` is therefore the default scheme for condition",
        "  grids, keeping regenerated reports aligned with the published ones;",
        "  pass `--scheme complement` for the statistically standard variant.",
        "* **Demographic comparisons use complement tables.** Both gender",
        "  values and all four pairwise cohort values match exactly; the",
        "  cohort findings are pairwise splits against the adolescent or",
        "  young-adult cohort, not one-vs-rest.",
        "",
        "Known irreproducible values, recorded rather than forced:",
        "",
        "* The old-age stratum optic-nerve value (published 0.0002) computes",
        "  to 0.0106 under the adopted convention; 0.0002 equals the male",
        "  stratum's value for the same cell.",
        "* The unequal-variance t comparison of overlap scores (published",
        "  0.4099) computes to 0.2260 from the published summary moments; the",
        "  sample sizes actually used were not stated.",
        "",
        "This file is generated by `tools/make_calibration_report.py`.",
        "",
    ]
    return "\n".join(lines)


def main() -> None:
    out = Path(__file__).resolve().parents[1] / "docs" / "tail_calibration.md"
    out.parent.mkdir(exist_ok=True)
    out.write_text(render(), encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
