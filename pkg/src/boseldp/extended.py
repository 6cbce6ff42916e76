"""Extended-real values.

Infinite quantities are IEEE ``inf`` floats, which carry the right order
and arithmetic.  A quantity that does not exist (for instance a pressure
derivative at a kink) is the distinct marker :data:`UNDEFINED`, never a
float.
"""

import json
import math


class _Undefined:
    """Marker for a quantity with no value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Undefined, ())


UNDEFINED = _Undefined()


def is_undefined(x) -> bool:
    return x is UNDEFINED


def format_number(x) -> str:
    """Text form used in CSV output: 17 significant digits, ``inf``,
    ``-inf``, ``nan`` or ``undefined``."""
    if x is UNDEFINED:
        return "undefined"
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def parse_number(text: str):
    """Inverse of :func:`format_number` for numeric fields."""
    if text == "undefined":
        return UNDEFINED
    return float(text)


def to_json_value(x):
    """Replace non-finite and undefined values by tagged objects."""
    if x is UNDEFINED:
        return {"extended": "undefined"}
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if math.isnan(x):
            return {"extended": "nan"}
        if math.isinf(x):
            return {"extended": "+inf" if x > 0 else "-inf"}
        return x
    if isinstance(x, dict):
        return {str(k): to_json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_json_value(v) for v in x]
    if hasattr(x, "tolist"):
        return to_json_value(x.tolist())
    return str(x)


def from_json_value(x):
    """Inverse of :func:`to_json_value`."""
    if isinstance(x, dict):
        if set(x) == {"extended"}:
            tag = x["extended"]
            return {"undefined": UNDEFINED, "nan": math.nan,
                    "+inf": math.inf, "-inf": -math.inf}[tag]
        return {k: from_json_value(v) for k, v in x.items()}
    if isinstance(x, list):
        return [from_json_value(v) for v in x]
    return x


class _Float17(float):
    def __repr__(self):
        text = format(float(self), ".17g")
        if not any(ch in text for ch in ".en"):
            text += ".0"
        return text


def _mark_floats(x):
    if isinstance(x, float):
        return _Float17(x)
    if isinstance(x, dict):
        return {k: _mark_floats(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_mark_floats(v) for v in x]
    return x


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # float.__repr__ is bypassed by the C encoder; use the Python one
        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.py_encode_basestring, self.indent,
            lambda f: repr(f) if isinstance(f, _Float17) else float.__repr__(f),
            self.key_separator, self.item_separator, self.sort_keys,
            self.skipkeys, _one_shot)(o, 0)


def dumps(obj, indent=2) -> str:
    """JSON text with tagged extended reals and 17-digit floats."""
    return json.dumps(_mark_floats(to_json_value(obj)), cls=_Encoder, indent=indent)
