import json
import logging
import math
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from methods.tableau import AffineForm, ParametricTableau, RknTableau
from .errors import InvalidTableauError, TableauFormatError

logger = logging.getLogger(__name__)

FORMAT_TAG = "rkn-tableau/1"
REQUIRED_FIELDS = ("format", "r", "c", "a_bar", "b_bar", "b")

Tableau = Union[RknTableau, ParametricTableau]


class TableauDocumentValidator:
    """
    Validation of tableau JSON documents before they become tableau objects.

    Checks, in order:
    1. Required top-level fields and the format tag
    2. Shapes of c, a_bar, b_bar and b against r
    3. Every numeric leaf (plain number or affine {"const", "lin"} object)

    Errors carry the path of the offending field, e.g. "a_bar[1][0]".
    """

    def __init__(self):
        self.logger = logger

    def validate(self, document: Any) -> Dict[str, Any]:
        """
        Validate a parsed document and normalize its leaves.

        Args:
            document: result of json.loads

        Returns:
            Dict with r, c, a_bar, b_bar, b (floats or AffineForms), meta and
            a 'parametric' flag

        Raises:
            TableauFormatError: first problem found, with its field path
        """
        if not isinstance(document, dict):
            raise TableauFormatError("$", "document must be a JSON object")

        for name in REQUIRED_FIELDS:
            if name not in document:
                self.logger.warning(f"Tableau document is missing field '{name}'")
                raise TableauFormatError(name, "required field is missing")

        if document["format"] != FORMAT_TAG:
            raise TableauFormatError("format", f"expected {FORMAT_TAG!r}, got {document['format']!r}")

        r = document["r"]
        if isinstance(r, bool) or not isinstance(r, int) or r < 1:
            raise TableauFormatError("r", f"must be a positive integer, got {r!r}")

        c = self._validate_vector(document["c"], "c", r)
        a_bar = self._validate_matrix(document["a_bar"], "a_bar", r)
        b_bar = self._validate_vector(document["b_bar"], "b_bar", r)
        b = self._validate_vector(document["b"], "b", r)

        meta = document.get("meta", {})
        if not isinstance(meta, dict):
            raise TableauFormatError("meta", "must be an object")
        self._validate_meta(meta)

        leaves = c + b_bar + b + [leaf for row in a_bar for leaf in row]
        parametric = any(isinstance(leaf, AffineForm) for leaf in leaves)
        return {"r": r, "c": c, "a_bar": a_bar, "b_bar": b_bar, "b": b, "meta": meta, "parametric": parametric}

    def _validate_vector(self, value: Any, path: str, r: int) -> List[Any]:
        """Check a length-r list and validate each leaf."""
        if not isinstance(value, list):
            raise TableauFormatError(path, "must be a list")
        if len(value) != r:
            raise TableauFormatError(path, f"has length {len(value)} but r = {r}")
        return [self._validate_leaf(item, f"{path}[{i}]") for i, item in enumerate(value)]

    def _validate_matrix(self, value: Any, path: str, r: int) -> List[List[Any]]:
        """Check an r x r nested list."""
        if not isinstance(value, list):
            raise TableauFormatError(path, "must be a list of rows")
        if len(value) != r:
            raise TableauFormatError(path, f"has {len(value)} rows but r = {r}")
        return [self._validate_vector(row, f"{path}[{i}]", r) for i, row in enumerate(value)]

    def _validate_leaf(self, value: Any, path: str) -> Union[float, AffineForm]:
        """A finite number, or an affine form {"const": x, "lin": {name: coeff}}."""
        if isinstance(value, dict):
            if set(value) - {"const", "lin"} or "const" not in value:
                raise TableauFormatError(path, "affine leaf needs 'const' and optional 'lin' only")
            const = self._validate_number(value["const"], f"{path}.const")
            lin = value.get("lin", {})
            if not isinstance(lin, dict):
                raise TableauFormatError(f"{path}.lin", "must be an object")
            coeffs = {name: self._validate_number(coeff, f"{path}.lin.{name}") for name, coeff in lin.items()}
            return AffineForm(const, coeffs)
        return self._validate_number(value, path)

    def _validate_number(self, value: Any, path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TableauFormatError(path, f"must be a number, got {type(value).__name__}")
        if not math.isfinite(value):
            raise TableauFormatError(path, "must be finite")
        return float(value)

    def _validate_meta(self, meta: Dict[str, Any]) -> None:
        order = meta.get("source_family_order")
        if order is not None and (isinstance(order, bool) or not isinstance(order, int)):
            raise TableauFormatError("meta.source_family_order", "must be an integer")
        params = meta.get("params")
        if params is not None:
            if not isinstance(params, dict):
                raise TableauFormatError("meta.params", "must be an object")
            for name, value in params.items():
                self._validate_number(value, f"meta.params.{name}")
        quadrature = meta.get("quadrature")
        if quadrature is not None and not isinstance(quadrature, str):
            raise TableauFormatError("meta.quadrature", "must be a string such as 'gauss:2'")
        parameters = meta.get("parameters")
        if parameters is not None and not (isinstance(parameters, list)
                                           and all(isinstance(p, str) for p in parameters)):
            raise TableauFormatError("meta.parameters", "must be a list of names")


def _render(value: Any, indent: int, level: int) -> str:
    """JSON text with doubles written to 17 significant digits."""
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite number {value!r}")
        text = format(float(value), ".17g")
        if text == "-0":
            text = "-0.0"
        return text
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_render(v, indent, level + 1)}" for k, v in value.items()]
        if indent == 0:
            return "{" + ", ".join(items) + "}"
        return "{\n" + ",\n".join(pad + item for item in items) + "\n" + close + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        items = [_render(v, indent, level + 1) for v in value]
        # numeric rows stay on one line
        if indent == 0 or all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in value):
            return "[" + ", ".join(items) + "]"
        return "[\n" + ",\n".join(pad + item for item in items) + "\n" + close + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(document: Dict[str, Any], indent: int = 2) -> str:
    return _render(document, indent, 0) + "\n"


def _form_leaf(form: AffineForm) -> Dict[str, Any]:
    return {"const": form.const, "lin": dict(sorted(form.lin.items()))}


def _meta_document(meta: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key in sorted(meta):
        value = meta[key]
        out[key] = dict(sorted(value.items())) if isinstance(value, dict) else value
    return out


def to_document(t: Tableau) -> Dict[str, Any]:
    """Plain-data document for a tableau (numbers or affine leaves)."""
    if isinstance(t, ParametricTableau):
        meta = _meta_document({**dict(t.meta), "parameters": list(t.parameters)})
        return {
            "format": FORMAT_TAG,
            "r": t.r,
            "c": [_form_leaf(f) for f in t.c],
            "a_bar": [[_form_leaf(f) for f in row] for row in t.a_bar],
            "b_bar": [_form_leaf(f) for f in t.b_bar],
            "b": [_form_leaf(f) for f in t.b],
            "meta": meta,
        }
    return {
        "format": FORMAT_TAG,
        "r": t.r,
        "c": [float(x) for x in t.c],
        "a_bar": [[float(x) for x in row] for row in t.a_bar],
        "b_bar": [float(x) for x in t.b_bar],
        "b": [float(x) for x in t.b],
        "meta": _meta_document(dict(t.meta)),
    }


def serialize(t: Tableau, indent: int = 2) -> str:
    """
    Render a tableau as an rkn-tableau/1 JSON document.

    Args:
        t: RknTableau or ParametricTableau
        indent: spaces per nesting level (0 for a single line)

    Returns:
        JSON text; identical inputs always give identical bytes
    """
    return dumps(to_document(t), indent)


def _as_form(leaf: Union[float, AffineForm]) -> AffineForm:
    return leaf if isinstance(leaf, AffineForm) else AffineForm(leaf)


def deserialize(text: str) -> Tableau:
    """
    Parse an rkn-tableau/1 document.

    Returns:
        RknTableau, or ParametricTableau when any leaf is an affine form

    Raises:
        TableauFormatError: malformed JSON or document; field_path names the culprit
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise TableauFormatError("$", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")

    data = TableauDocumentValidator().validate(document)
    meta = dict(data["meta"])

    if data["parametric"]:
        declared = meta.pop("parameters", None)
        forms = [_as_form(x) for x in data["c"] + data["b_bar"] + data["b"]]
        forms += [_as_form(x) for row in data["a_bar"] for x in row]
        seen = sorted({name for f in forms for name in f.lin})
        parameters = tuple(declared) if declared is not None else tuple(seen)
        missing = [name for name in seen if name not in parameters]
        if missing:
            raise TableauFormatError("meta.parameters", f"does not list parameter(s) {missing}")
        return ParametricTableau(
            c=tuple(_as_form(x) for x in data["c"]),
            a_bar=tuple(tuple(_as_form(x) for x in row) for row in data["a_bar"]),
            b_bar=tuple(_as_form(x) for x in data["b_bar"]),
            b=tuple(_as_form(x) for x in data["b"]),
            parameters=parameters,
            meta=meta,
        )

    meta.pop("parameters", None)
    try:
        return RknTableau(c=data["c"], a_bar=data["a_bar"], b_bar=data["b_bar"], b=data["b"], meta=meta)
    except InvalidTableauError as e:
        raise TableauFormatError(e.field, e.message)


def save_tableau(t: Tableau, path: str, indent: int = 2) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize(t, indent))
    logger.info(f"Wrote {type(t).__name__} with r={t.r} to {path}")


def load_tableau(path: str) -> Tableau:
    """Read and parse a tableau file; OSError propagates with the path."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        return deserialize(text)
    except TableauFormatError as e:
        raise TableauFormatError(e.field_path, f"{e.message} (in {path})")


def require_concrete(t: Tableau, path: Optional[str] = None) -> RknTableau:
    """Reject parametric tableaux where numbers are needed."""
    if isinstance(t, ParametricTableau):
        where = f" in {path}" if path else ""
        raise TableauFormatError("$", f"tableau{where} is parametric in {list(t.parameters)}; specialize it first")
    return t
