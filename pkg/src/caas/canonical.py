"""Canonical JSON serialization and content digests.

Implements RFC 8785 (JSON Canonicalization Scheme): object keys sorted by
UTF-16 code units, no insignificant whitespace, minimal string escapes and
ES6 shortest-round-trip number formatting.  Two semantically equal records
therefore always yield byte-identical serializations, which is what the
trust log hashes.
"""

from __future__ import annotations

import hashlib
import math
from typing import Any

from .errors import NonSerializable

# Control characters with a short escape form per RFC 8785.
_SHORT_ESCAPES = {
    "\b": "\\b",
    "\t": "\\t",
    "\n": "\\n",
    "\f": "\\f",
    "\r": "\\r",
    '"': '\\"',
    "\\": "\\\\",
}


def _escape_string(value: str) -> str:
    out = ['"']
    for ch in value:
        if ch in _SHORT_ESCAPES:
            out.append(_SHORT_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _format_number(value: float) -> str:
    """Shortest round-trip decimal form per ECMAScript Number::toString."""
    if math.isnan(value) or math.isinf(value):
        raise NonSerializable("NaN and infinity are not serializable")
    if value == 0:
        return "0"  # covers -0.0 as well
    if value == int(value) and abs(value) < 2**53:
        return str(int(value))

    # Python repr already yields the shortest round-trip digits; re-shape
    # the exponent per the ES6 thresholds (>= 1e21 or < 1e-6 use e-notation).
    text = repr(abs(value))
    if "e" in text or "E" in text:
        mantissa, _, exp_text = text.lower().partition("e")
        exponent = int(exp_text)
    else:
        mantissa, exponent = text, 0
    if "." in mantissa:
        int_part, _, frac_part = mantissa.partition(".")
    else:
        int_part, frac_part = mantissa, ""
    digits = (int_part + frac_part).lstrip("0")
    # Decimal point position relative to the first significant digit.
    n = len(int_part.lstrip("0")) + exponent if int_part.lstrip("0") else exponent - (
        len(frac_part) - len(frac_part.lstrip("0"))
    )
    digits = digits.rstrip("0") or "0"
    k = len(digits)

    sign = "-" if value < 0 else ""
    if k <= n <= 21:
        body = digits + "0" * (n - k)
    elif 0 < n <= 21:
        body = digits[:n] + "." + digits[n:]
    elif -6 < n <= 0:
        body = "0." + "0" * (-n) + digits
    else:
        exp = n - 1
        head = digits[0] if k == 1 else digits[0] + "." + digits[1:]
        body = f"{head}e{'+' if exp >= 0 else '-'}{abs(exp)}"
    return sign + body


def _serialize(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, str):
        out.append(_escape_string(value))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(_format_number(value))
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _serialize(item, out)
        out.append("]")
    elif isinstance(value, dict):
        out.append("{")
        # RFC 8785 orders keys by UTF-16 code units.
        keys = sorted(value.keys(), key=_utf16_key)
        for i, key in enumerate(keys):
            if i:
                out.append(",")
            if not isinstance(key, str):
                raise NonSerializable(f"object keys must be strings, got {type(key).__name__}")
            out.append(_escape_string(key))
            out.append(":")
            _serialize(value[key], out)
        out.append("}")
    else:
        raise NonSerializable(f"type {type(value).__name__} is not canonically serializable")


def _utf16_key(key: Any) -> bytes:
    if not isinstance(key, str):
        raise NonSerializable(f"object keys must be strings, got {type(key).__name__}")
    return key.encode("utf-16-be")


def canonical_bytes(value: Any) -> bytes:
    """Serialize ``value`` to canonical JSON (RFC 8785) encoded as UTF-8."""
    out: list[str] = []
    _serialize(value, out)
    return "".join(out).encode("utf-8")


def canonical_digest(value: Any) -> str:
    """SHA-256 hex digest of the canonical serialization of ``value``."""
    return hashlib.sha256(canonical_bytes(value)).hexdigest()
