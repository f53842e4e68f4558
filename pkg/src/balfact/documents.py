"""JSON certificate documents.

A document is a self-contained record of one factorisation.  ``verified``
is recomputed whenever a document is emitted; :func:`check_document`
recomputes everything again from the text alone.
"""

from __future__ import annotations

import json

from .errors import BalfactError
from .fields import make_field
from .matrices import format_matrix, parse_matrix
from .scalar import ScalarCertificate, certificate_problem, is_power_tuple
from .search import MatrixCertificate, matrix_certificate_problem

SCHEMA_VERSION = "1"


class DocumentError(BalfactError, ValueError):
    """Malformed document or unsupported schema version."""


def scalar_document(cert: ScalarCertificate) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "scalar",
        "field": cert.ctx.spec,
        "k": cert.k,
        "target": str(cert.target),
        "factors": [str(f) for f in cert.factors],
        "flags": {"balanced": True, "nonpower": cert.nonpower, "commuting": False},
        "provenance": cert.provenance,
        "verified": certificate_problem(cert) is None,
    }


def matrix_document(cert: MatrixCertificate) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "matrix",
        "field": cert.target.ctx.spec,
        "n": cert.target.n,
        "k": cert.k,
        "target": format_matrix(cert.target),
        "factors": [format_matrix(f) for f in cert.factors],
        "flags": {"balanced": True, "nonpower": False, "commuting": cert.commuting},
        "provenance": cert.provenance,
        "verified": matrix_certificate_problem(cert) is None,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def check_document(doc) -> str | None:
    """Re-verify a document; returns the reason it fails, or None.

    Raises DocumentError when the document cannot be interpreted at all.
    """
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DocumentError(f"unsupported schema_version {version!r}")
    try:
        kind = doc["kind"]
        ctx = make_field(str(doc["field"]))
        k = int(doc["k"])
        flags = doc.get("flags", {})
        factors_text = list(doc["factors"])
        target_text = str(doc["target"])
        if kind == "scalar":
            target = ctx.parse(target_text)
            factors = tuple(ctx.parse(str(f)) for f in factors_text)
        elif kind == "matrix":
            n = int(doc["n"])
            target = parse_matrix(ctx, target_text, n)
            factors = tuple(parse_matrix(ctx, str(f), n) for f in factors_text)
        else:
            raise DocumentError(f"unknown kind {kind!r}")
    except DocumentError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed document: {exc}") from exc

    if not flags.get("balanced", True):
        return "document does not claim a balanced factorisation"
    if kind == "scalar":
        if flags.get("commuting") not in (None, False, True):
            return "bad commuting flag"
        cert = ScalarCertificate(ctx, target, k, factors, bool(flags.get("nonpower")),
                                 str(doc.get("provenance", "")))
        return certificate_problem(cert)
    if flags.get("nonpower") and is_power_tuple(factors):
        return "power factorisation flagged non-power"
    cert = MatrixCertificate(target, k, factors, bool(flags.get("commuting")), False,
                             str(doc.get("provenance", "")))
    return matrix_certificate_problem(cert)
