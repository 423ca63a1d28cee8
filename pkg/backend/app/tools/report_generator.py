"""Report Generator - canonical JSON and Markdown renderings of a BookSummary"""

import json
import re
from typing import Any, Dict, List

from app.schemas.pipeline import BookSummary, OutputFormat, StrategyComparison
from app.schemas.summary import RougeReport

FLOAT_DECIMALS = 6
ROUGE_LABELS = {"rouge1": "ROUGE-1", "rouge2": "ROUGE-2", "rougeL": "ROUGE-L"}


# floats travel through json.dumps as tagged strings, then lose their quotes
_FLOAT_TAG = "\x00f"
_TAGGED_FLOAT = re.compile(r'"\\u0000f(-?[0-9]+\.[0-9]+)"')


def _label(key: str) -> str:
    return ROUGE_LABELS.get(key, key.replace("rouge", "ROUGE-"))


def _fixed(value: Any) -> Any:
    """Format every float with FLOAT_DECIMALS places so output is stable across platforms"""
    if isinstance(value, float):
        return f"{_FLOAT_TAG}{round(value, FLOAT_DECIMALS) + 0.0:.{FLOAT_DECIMALS}f}"
    if isinstance(value, dict):
        return {k: _fixed(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_fixed(v) for v in value]
    return value


def rouge_json(report: RougeReport) -> Dict[str, Dict[str, float]]:
    return {
        key: {"p": score.precision, "r": score.recall, "f": score.f1}
        for key, score in report.rows().items()
    }


def canonical_json(data: Any) -> bytes:
    text = json.dumps(_fixed(data), sort_keys=True, indent=2, ensure_ascii=False)
    text = _TAGGED_FLOAT.sub(r"\1", text)
    return (text + "\n").encode("utf-8")


def format_rouge_table(report: RougeReport) -> str:
    """Aligned text table: metrics across, Precision / Recall / F-Score down"""
    rows = report.rows()
    header = [""] + [_label(k) for k in rows]
    body = [
        ["Precision"] + [f"{s.precision:.{FLOAT_DECIMALS}f}" for s in rows.values()],
        ["Recall"] + [f"{s.recall:.{FLOAT_DECIMALS}f}" for s in rows.values()],
        ["F-Score"] + [f"{s.f1:.{FLOAT_DECIMALS}f}" for s in rows.values()],
    ]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in [header] + body]
    return "\n".join(lines) + "\n"


def rouge_markdown_table(report: RougeReport) -> List[str]:
    rows = report.rows()
    lines = [
        "| | " + " | ".join(_label(k) for k in rows) + " |",
        "|---|" + "---|" * len(rows),
    ]
    for name, attr in (("Precision", "precision"), ("Recall", "recall"), ("F-Score", "f1")):
        cells = " | ".join(f"{getattr(s, attr):.{FLOAT_DECIMALS}f}" for s in rows.values())
        lines.append(f"| {name} | {cells} |")
    return lines


class ReportGenerator:
    def __init__(self, include_timings: bool = False):
        self.include_timings = include_timings

    def to_dict(self, summary: BookSummary) -> Dict[str, Any]:
        data = summary.model_dump(mode="json", exclude={"rouge_report", "chapters"})
        data["chapters"] = []
        for chapter in summary.chapters:
            entry = chapter.model_dump(mode="json", exclude={"rouge"})
            entry["rouge"] = rouge_json(chapter.rouge) if chapter.rouge else None
            data["chapters"].append(entry)
        data["rouge_report"] = rouge_json(summary.rouge_report) if summary.rouge_report else None
        if not self.include_timings:
            data.pop("timings", None)
        return data

    def generate_json(self, summary: BookSummary) -> bytes:
        return canonical_json(self.to_dict(summary))

    def generate_markdown(self, summary: BookSummary) -> bytes:
        report = [f"# Summary of {summary.source_id}", ""]

        report.append("## Abstract")
        report.append("")
        report.append(summary.abstract.summary)
        report.append("")
        report.append(f"*Mode: {summary.abstract.mode.value} ({summary.abstract.model_id})*")
        report.append("")
        for note in summary.abstract.warnings:
            report.append(f"> {note}")
            report.append("")

        report.append(f"## Chapters ({summary.strategy.value})")
        report.append("")
        for chapter in summary.chapters:
            report.append(f"### {chapter.index + 1}. {chapter.title}")
            report.append("")
            report.append(" ".join(chapter.summary))
            report.append("")
            for note in chapter.warnings:
                report.append(f"> {note}")
                report.append("")
            if chapter.rouge:
                report.extend(rouge_markdown_table(chapter.rouge))
                report.append("")

        if self.include_timings and summary.timings:
            report.append("## Timings")
            report.append("")
            for stage, ms in summary.timings.items():
                report.append(f"- **{stage}:** {ms:.1f} ms")
            report.append("")

        if summary.rouge_report:
            report.append("## ROUGE")
            report.append("")
            report.extend(rouge_markdown_table(summary.rouge_report))
            report.append("")

        return "\n".join(report).encode("utf-8")

    def generate_comparison(self, comparison: StrategyComparison, fmt: OutputFormat) -> bytes:
        if fmt == OutputFormat.JSON:
            return canonical_json(
                {
                    "source_id": comparison.source_id,
                    "reports": {s.value: rouge_json(r) for s, r in comparison.reports.items()},
                }
            )
        lines = [
            f"# Strategy comparison for {comparison.source_id}",
            "",
            "| Strategy | ROUGE-1 F | ROUGE-2 F | ROUGE-L F |",
            "|---|---|---|---|",
        ]
        for strategy, report in comparison.reports.items():
            lines.append(
                f"| {strategy.value} | {report.rouge1.f1:.{FLOAT_DECIMALS}f} | "
                f"{report.rouge2.f1:.{FLOAT_DECIMALS}f} | {report.rougeL.f1:.{FLOAT_DECIMALS}f} |"
            )
        return ("\n".join(lines) + "\n").encode("utf-8")


def emit_report(summary: BookSummary, fmt: OutputFormat, include_timings: bool = False) -> bytes:
    generator = ReportGenerator(include_timings=include_timings)
    if fmt == OutputFormat.MARKDOWN:
        return generator.generate_markdown(summary)
    return generator.generate_json(summary)
