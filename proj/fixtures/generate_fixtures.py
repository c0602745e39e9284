"""Writes the bundled demo corpus, its gold CSV and the scripted mock replies.

Every planted budget line is defined once below; the interchange documents,
the gold spreadsheet and the mock model replies are all derived from it, so
they cannot drift apart. Run from anywhere:

    python3 fixtures/generate_fixtures.py [out_dir]
"""

import csv
import sys
import json
from decimal import Decimal
from pathlib import Path

HERE = Path(__file__).resolve().parent

# (pillar, component, activity, amount text as printed in the table, amount)
PROJECTS = {
    "sahel_hydromet": {
        "title": "Sahel Hydromet Resilience Project",
        "country": "the Sahel region",
        "lines": [
            ("P1", "Risk knowledge", "Flood hazard mapping and loss data rescue", "1,250,000", "1250000"),
            ("P2", "Observation and forecasting", "Upgrade of the hydromet observing network", "2,400,000", "2400000"),
            ("P3", "Warning dissemination", "Cell broadcast alerting and village sirens", "600,000", "600000"),
            ("P4", "Preparedness", "Community evacuation drills and contingency planning", "350,000", "350000"),
            ("XP", "Governance", "Project management and institutional coordination", "400,000", "400000"),
        ],
    },
    "pacific_alerts": {
        "title": "Pacific Islands Multi-Hazard Alerts",
        "country": "four Pacific island states",
        "lines": [
            ("P2", "Forecasting services", "Marine forecasting and tide gauge monitoring", "0.95 million", "950000"),
            ("P3", "Last-mile communication", "Common alerting protocol rollout to broadcasters", "0.75 million", "750000"),
            ("XP", "Policy", "National EWS legislation and policy drafting", "0.30 million", "300000"),
        ],
    },
    "caribbean_ews": {
        "title": "Caribbean Early Warning Strengthening",
        "country": "small island developing states of the Caribbean",
        "lines": [
            ("P1", "Risk information", "Vulnerability mapping of coastal settlements", "310,500", "310500"),
            ("P2", "Detection", "Weather radar refurbishment", "1,100,000", "1100000"),
            ("P2", "Detection", "Automatic weather stations network", "275,250", "275250"),
            ("P4", "Anticipatory action", "Anticipatory action protocols and shelters", "420,000", "420000"),
        ],
    },
}

FUND = "Synthetic EWS Fund"
TABLE_PAGE = 2


def table_markdown(lines):
    rows = ["| Component | Activity | Pillar | Amount (USD) |", "| --- | --- | --- | --- |"]
    for pillar, component, activity, printed, _ in lines:
        rows.append(f"| {component} | {activity} | {pillar} | {printed} |")
    total = sum(Decimal(l[4]) for l in lines)
    rows.append(f"| Total | | | {total:,.0f} |")
    return "\n".join(rows)


def document(stem, spec):
    file_name = f"{stem}.pdf"
    intro = (
        f"# {spec['title']}\n\n"
        f"The project strengthens end-to-end early warning services in {spec['country']}. "
        "It combines investment in observation infrastructure with institutional support, "
        "so that national meteorological and disaster management agencies can issue timely, "
        "impact-based warnings that reach the last mile. The results framework tracks lead time, "
        "coverage of warnings and the share of the population covered by preparedness plans."
    )
    background = (
        "## Background and rationale\n\n"
        "Recurrent floods, storms and droughts cause heavy losses. Existing monitoring stations are sparse "
        "and ageing, forecasts are rarely translated into actionable advice, and local authorities lack "
        "rehearsed procedures. Consultations with communities identified dissemination gaps in remote areas."
    )
    arrangements = (
        "## Implementation arrangements\n\n"
        "A project steering committee chaired by the ministry responsible for disaster risk management "
        "oversees implementation. The implementing entity reports twice a year and the budget below is "
        "expressed in United States dollars. Procurement follows the rules of the implementing entity."
    )
    return {
        "file_name": file_name,
        "elements": [
            {"kind": "text", "page": 1, "markdown": intro},
            {"kind": "text", "page": 1, "markdown": background},
            {
                "kind": "table",
                "page": TABLE_PAGE,
                "markdown": table_markdown(spec["lines"]),
                "table_dims": {"rows": len(spec["lines"]) + 2, "cols": 4},
            },
            {
                "kind": "image",
                "page": 3,
                "markdown": "",
                "image_ref": f"{stem}/figure-1.png",
                "caption": "Figure 1: Map of the target area",
            },
            {"kind": "text", "page": 3, "markdown": arrangements},
        ],
    }


def table_chunk_id(stem):
    # Chunks are numbered in reading order; the two introductory text
    # sections stay separate, so the budget table is chunk 2.
    return f"{stem}.pdf#2#table"


def evidence(stem, line):
    pillar, _, activity, printed, _ = line
    return [{"chunk_id": table_chunk_id(stem), "quote": f"{activity} | {pillar} | {printed}", "page": TABLE_PAGE}]


def item(stem, line):
    return {
        "amount": f"USD {line[3]}",
        "currency": "USD",
        "row_label": line[2],
        "evidence": evidence(stem, line),
    }


def script(stem, spec):
    lines = spec["lines"]
    pillars = ["P1", "P2", "P3", "P4", "XP"]
    rules = [
        {
            "tag": "ctx",
            "contains": "",
            "reply": f"This excerpt belongs to the {spec['title']} document. "
            "It describes part of the project's early warning investments.",
        }
    ]
    for p in pillars:
        items = [item(stem, l) for l in lines if l[0] == p]
        rules.append(
            {
                "tag": "class_budget",
                "contains": f"Target pillar: {p} (",
                "reply": {"applies": bool(items), "items": items},
            }
        )
        rules.append({"tag": "budget", "contains": f"Pillar: {p} (", "reply": {"items": items}})
    planted = sorted({l[0] for l in lines}, key=pillars.index)
    rules.append({"tag": "class", "contains": f"(chunk {table_chunk_id(stem)})", "reply": {"labels": planted}})
    rules.append({"tag": "class", "contains": "", "reply": {"labels": []}})
    rules.append(
        {
            "tag": "reformat",
            "contains": "",
            "reply": "\n".join(f"- {l[2]}: {l[3]} USD ({l[0]})" for l in lines),
        }
    )
    rules.append(
        {
            "tag": "agent_plan",
            "contains": "",
            "reply": {
                "instructions": [
                    {"id": "i1", "text": "Locate the project budget table with amounts per component", "needs_retrieval": True},
                    {"id": "i2", "text": "Find the activities funded under each component", "needs_retrieval": True},
                    {"id": "i3", "text": "Assign every budget line to one pillar", "needs_retrieval": False},
                ],
                "queries": ["budget table amount per component USD", "activities funded by component"],
            },
        }
    )
    rules.append({"tag": "agent_map", "contains": "", "reply": {"mapping": {"i1": 0, "i2": 1}}})
    rules.append({"tag": "agent_validate", "contains": "", "reply": {"sufficient": True}})
    rules.append({"tag": "agent_step", "contains": "", "reply": "; ".join(f"{l[2]}: {l[3]} ({l[0]})" for l in lines)})
    total = sum(Decimal(l[4]) for l in lines)
    rules.append(
        {
            "tag": "format",
            "contains": "",
            "reply": {
                "currency": "USD",
                "total_ews_budget": f"USD {total:,.0f}",
                "allocations": [dict(pillar=l[0], **item(stem, l)) for l in lines],
            },
        }
    )
    return {"rules": rules}


def gold_rows():
    rows = []
    for stem, spec in PROJECTS.items():
        for pillar, component, activity, _, amount in spec["lines"]:
            rows.append([FUND, stem, component, f"Stronger {component.lower()}", component, activity, TABLE_PAGE, amount, pillar])
    return rows


def write_json(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def main(out=HERE):
    out = Path(out)
    for stem, spec in PROJECTS.items():
        write_json(out / "corpus" / f"{stem}.json", document(stem, spec))
        write_json(out / "scripts" / f"{stem}.json", script(stem, spec))
    with open(out / "gold.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["Fund", "Project ID", "Component", "Outcome/Expected-Outcome/Objectives", "Output/Sub-component",
                    "Activity/Output Indicator", "Page Number", "Amount", "Label"])
        w.writerows(gold_rows())
    expected = {}
    for stem, spec in PROJECTS.items():
        per = {}
        for l in spec["lines"]:
            per[l[0]] = str(Decimal(per.get(l[0], "0")) + Decimal(l[4]))
        expected[stem] = {"file_name": f"{stem}.pdf", "table_chunk": table_chunk_id(stem), "pillars": per,
                          "total": str(sum(Decimal(l[4]) for l in spec["lines"]))}
    write_json(out / "expected.json", expected)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else HERE)
