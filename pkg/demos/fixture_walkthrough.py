"""Walk the bundled 20-article fixture through annotation aggregation.

Prints the per-article frame labels, the extracted narrative roles, and
the inter-annotator reliability report. Run with no arguments:

    python demos/fixture_walkthrough.py
"""

from importlib import resources

from nframe.agreement import agreement_report
from nframe.annotation import (
    FRAMES,
    aggregate_frames,
    default_codebook,
    extract_role_entities,
    load_annotations,
)


def main():
    codebook = default_codebook()
    fixture = resources.files("nframe").joinpath("data/fixture")
    records = load_annotations(str(fixture.joinpath("annotations.jsonl")), codebook)

    groups = {}
    for record in records:
        groups.setdefault(record.article_id, []).append(record)

    print(f"{len(records)} annotation records over {len(groups)} articles\n")
    print(f"{'article':<9}{'frames':<22}roles")
    for article_id in sorted(groups):
        group = groups[article_id]
        labels = aggregate_frames(group, codebook)
        frames = ", ".join(f for f in FRAMES if f in labels.frames) or "-"
        roles = extract_role_entities(group)
        role_text = "; ".join(
            f"{role}: {', '.join(sorted({e for _, e in entries}))}"
            for role, entries in roles.items()
        ) or "-"
        print(f"{article_id:<9}{frames:<22}{role_text}")

    report = agreement_report(records, codebook)
    print(f"\nreliability: alpha={report['alpha']:.4f}  "
          f"pairwise mean={report['pairwise']['mean']:.4f} "
          f"(min {report['pairwise']['min']:.4f}, max {report['pairwise']['max']:.4f})")
    if report.get("entities"):
        for role, scores in report["entities"].items():
            print(f"  {role:<8} exact={scores['exact']:.3f}  rouge_l={scores['rouge_l']:.3f}")


if __name__ == "__main__":
    main()
