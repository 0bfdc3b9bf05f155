"""Module names and the JSON module format.

Names follow ``product := term ("*" term)*`` with
``term := subset:n | quotient:N:n | trivial:N | dual:term | <path.json>``.
"""

import json
import logging
from functools import reduce
from pathlib import Path

from torvan.errors import InputError, TorvanError
from torvan.linalg import matrix_from_json, matrix_to_json
from torvan.modules import (
    FiniteModule,
    build_quotient_module,
    build_subset_module,
    build_trivial_module,
    dual_module,
    tensor_product,
)
from torvan.scalars import RATIONALS, FieldSpec

LOGGER = logging.getLogger(__name__)


def module_to_json(M: FiniteModule) -> dict:
    doc = {
        "field": M.field.render(),
        "num_vars": M.num_vars,
        "dim": M.dim,
        "actions": [matrix_to_json(T) for T in M.actions],
    }
    if M.labels is not None:
        doc["labels"] = list(M.labels)
    return doc


def module_from_json(doc: dict, name: str = "") -> FiniteModule:
    """Decode a module document. Commutativity is left to :func:`validate`."""
    try:
        field = FieldSpec.parse(str(doc.get("field", "q")))
        num_vars = int(doc["num_vars"])
        dim = int(doc["dim"])
        actions = [matrix_from_json(m, field) for m in doc["actions"]]
        labels = doc.get("labels")
        labels = tuple(str(x) for x in labels) if labels is not None else None
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise InputError(f"Malformed module document: {e}") from e
    try:
        return FiniteModule(
            field, num_vars, dim, tuple(actions), labels,
            bool(doc.get("locally_nilpotent", True)),
            name,
        )
    except TorvanError as e:
        raise InputError(f"Inconsistent module document: {e}") from e


def load_module(path: Path) -> FiniteModule:
    try:
        with open(path, "r", encoding="utf-8") as mf:
            doc = json.load(mf)
    except FileNotFoundError as e:
        raise InputError(f"Module file not found: {path}") from e
    except OSError as e:
        raise InputError(f"Cannot read module file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"Module file {path} is not valid JSON: {e}") from e
    return module_from_json(doc, name=str(path))


def _count(text: str, what: str) -> int:
    if not text.isdigit():
        raise InputError(f"{what} must be a non-negative integer, got {text!r}")
    return int(text)


def parse_term(term: str, field: FieldSpec) -> FiniteModule:
    term = term.strip()
    if not term:
        raise InputError("Empty module term")
    kind, _, rest = term.partition(":")
    match kind:
        case "dual":
            return dual_module(parse_term(rest, field))
        case "subset":
            return build_subset_module(_count(rest, "n"), field)
        case "trivial":
            return build_trivial_module(_count(rest, "N"), field)
        case "quotient":
            ambient, _, level = rest.partition(":")
            ambient, level = _count(ambient, "N"), _count(level, "n")
            if level > ambient:
                raise InputError(f"Level {level} exceeds ambient {ambient}")
            return build_quotient_module(ambient, level, field)
        case _:
            path = Path(term)
            if path.suffix == ".json" or path.exists():
                return load_module(path)
            raise InputError(
                f"Unknown module {term!r}. Use subset:n, quotient:N:n, trivial:N, "
                "dual:<module> or a JSON file"
            )


def is_builtin(name: str) -> bool:
    """True when every factor of ``name`` is a built-in family, not a file."""
    for term in name.split("*"):
        term = term.strip()
        while term.startswith("dual:"):
            term = term[5:]
        if term.partition(":")[0] not in ("subset", "trivial", "quotient"):
            return False
    return True


def parse_module(name: str, field: FieldSpec = RATIONALS) -> FiniteModule:
    factors = [parse_term(term, field) for term in name.split("*")]
    return reduce(tensor_product, factors)
