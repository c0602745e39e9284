"""EWS budget tracking engine.

Structured values come back as plain Python objects; amounts stay decimal
strings so nothing is lost to binary floating point.
"""

import json as _json
from decimal import Decimal as _Decimal

from . import _core
from ._core import EwsError, budget_tp, chunk_id, hash_embed, rrf_fuse, run_cli

__version__ = _core.__version__

__all__ = [
    "EwsError",
    "budget_tp",
    "check_extraction",
    "chunk_document",
    "chunk_id",
    "gold_budgets",
    "hash_embed",
    "parse_document",
    "parse_money",
    "percentage_tenths",
    "render_report",
    "rrf_fuse",
    "run_cli",
    "validate_corpus",
]


def _text(doc):
    return doc if isinstance(doc, str) else _json.dumps(doc)


def parse_document(doc):
    """Validate an interchange document (dict or JSON text); returns the canonical dict."""
    return _json.loads(_core.parse_document(_text(doc)))


def validate_corpus(docs):
    """List of (code, subject, detail) issues across documents; empty when clean."""
    return _core.validate_corpus([_text(d) for d in docs])


def chunk_document(doc, max_text_chars=4000, min_text_chars=200):
    return _json.loads(_core.chunk_document(_text(doc), max_text_chars, min_text_chars))


def parse_money(text):
    """("USD 1.2 million") -> (Decimal("1200000"), "USD")."""
    amount, currency = _core.parse_money(text)
    return _Decimal(amount), currency


def gold_budgets(path):
    """{project: {"pillars": {P1..XP: Decimal}, "total": Decimal}} from a gold CSV."""
    raw = _json.loads(_core.gold_budgets(str(path)))
    return {
        project: {"pillars": {k: _Decimal(v) for k, v in e["pillars"].items()}, "total": _Decimal(e["total"])}
        for project, e in raw.items()
    }


def check_extraction(result):
    return _core.check_extraction(_text(result))


def percentage_tenths(result):
    """Per-pillar shares in tenths of a percent, P1..XP."""
    return _core.percentage_tenths(_text(result))


def render_report(result):
    """(text, dict) for an extraction result."""
    text, data = _core.render_report(_text(result))
    return text, _json.loads(data)
