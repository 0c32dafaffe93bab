"""
Markdown summaries of certification runs and sweeps.

Renderers take the plain-dict form of a report (``RunReport.to_dict()``)
so they stay independent of the experiment tools.

Functions
---------
format_run_summary : Headline rate, per-group table, timing.
format_rows_table : Any list of flat records as a Markdown table.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from typing import Any

from mdutils.mdutils import MdUtils


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _percent(rate: float | None) -> str:
    return "-" if rate is None else f"{100.0 * rate:.2f}%"


def _table(md: MdUtils, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    text = [str(h) for h in header]
    for row in rows:
        text.extend(_cell(v) for v in row)
    md.new_table(columns=len(header), rows=len(rows) + 1, text=text, text_align="left")


def format_run_summary(
    report: Mapping[str, Any], timing: Mapping[str, Any] | None = None
) -> str:
    """
    Render a certification report as Markdown.

    Parameters
    ----------
    report : mapping
        ``RunReport.to_dict()`` output.
    timing : mapping, optional
        ``RunReport.timing``.

    Returns
    -------
    str
    """
    config = report.get("config", {})
    aggregates = report.get("aggregates", {})
    overall = aggregates.get("overall", {})

    md = MdUtils(file_name="", title="Label Multiplicity Certification")
    md.new_line(f"**Mode:** {config.get('mode')}  ")
    md.new_line(f"**Task:** {config.get('task')}  ")
    md.new_line(f"**Spec:** {config.get('spec', {}).get('name')} (k = {config.get('k')})  ")
    md.new_line(f"**Lambda:** {config.get('lambda')}  ")
    if config.get("task") == "regression":
        md.new_line(f"**Epsilon:** {config.get('epsilon')}  ")
    md.new_line(
        f"**Robustness rate:** {_percent(overall.get('rate'))} "
        f"({overall.get('robust', 0)} of {overall.get('count', 0)} test points)  "
    )
    if aggregates.get("accuracy") is not None:
        md.new_line(f"**Test accuracy:** {aggregates['accuracy']:.2f}  ")
    md.new_line()

    groups = aggregates.get("groups", {})
    if groups:
        md.new_header(level=2, title="Subgroups", add_table_of_contents="n")
        _table(
            md,
            ["Group", "Count", "Robust", "Rate"],
            [
                [name, g.get("count"), g.get("robust"), _percent(g.get("rate"))]
                for name, g in groups.items()
            ],
        )

    if timing:
        md.new_header(level=2, title="Timing", add_table_of_contents="n")
        _table(
            md,
            ["Phase", "Seconds"],
            [[phase, seconds] for phase, seconds in sorted(timing.items())],
        )

    return md.get_md_text()


def format_rows_table(
    title: str, rows: Sequence[Mapping[str, Any]], columns: Sequence[str]
) -> str:
    """Flat records as one Markdown table under a title."""
    md = MdUtils(file_name="", title=title)
    if rows:
        _table(md, list(columns), [[row.get(c) for c in columns] for row in rows])
    else:
        md.new_paragraph("No rows.")
    return md.get_md_text()
