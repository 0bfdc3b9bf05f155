"""Künneth check: Tor of a tensor product against the product of Poincaré polynomials.

The homology ranks are recomputed twice more: once with Markowitz
elimination only, once with the dense sympy oracle. Builtin modules are
also recomputed over a second field.
"""

import logging
from functools import reduce

from torvan.complexes import homology_dims, koszul_complex
from torvan.linalg import DENSE_FALLBACK_LIMIT
from torvan.linalg.dense import dense_rank
from torvan.modules import tensor_product
from torvan.modules.catalog import is_builtin, parse_term
from torvan.scalars import RATIONALS, FieldSpec

LOGGER = logging.getLogger(__name__)


def poincare_product(left: list, right: list) -> list:
    """Coefficients of the product of two polynomials given by coefficient lists."""
    out = [0] * (len(left) + len(right) - 1)
    for a, x in enumerate(left):
        for b, y in enumerate(right):
            out[a + b] += x * y
    return out


def dense_homology_dims(C) -> list:
    """Homology dims from dense sympy ranks, no sparse elimination involved."""
    ranks = {j: dense_rank(d) for j, d in C.differentials.items()}
    return [
        C.terms[j] - ranks.get(j, 0) - ranks.get(C.previous_degree(j), 0)
        for j in C.degrees
    ]


def default_factors(ambient: int, level: int) -> str:
    """quotient(N, n) written as n copies of k[t]/t^2 and N - n copies of k."""
    return "*".join(["quotient:1:1"] * level + ["trivial:1"] * (ambient - level))


def _tor_of(name: str, field: FieldSpec, dense_limit: int):
    factors = [parse_term(term, field) for term in name.split("*")]
    product = reduce(tensor_product, factors)
    K = koszul_complex(product)
    return factors, product, K, homology_dims(K, dense_limit)


def _check(name, ok, witness):
    return {"name": name, "status": "pass" if ok else "fail", "witness": witness}


def kunnethreport(name: str, field: FieldSpec, crosscheck_prime: int,
                  dense_limit: int = DENSE_FALLBACK_LIMIT) -> dict:
    factors, product, K, dims = _tor_of(name, field, dense_limit)
    predicted = reduce(
        poincare_product, (homology_dims(koszul_complex(F), dense_limit) for F in factors)
    )
    LOGGER.info(f"Tor of {product.name}: {dims}, predicted {predicted}")

    checks = [_check("kunneth", dims == predicted, {"observed": dims, "predicted": predicted})]

    sparse = homology_dims(K, dense_limit=0)
    oracle = dense_homology_dims(K)
    checks.append(_check("dense-oracle", sparse == oracle == dims, {"sparse": sparse, "dense": oracle}))

    other = FieldSpec.prime(crosscheck_prime) if not field.is_prime else RATIONALS
    if is_builtin(name):
        *_, other_dims = _tor_of(name, other, dense_limit)
        checks.append(_check("field-agreement", other_dims == dims,
                             {field.render(): dims, other.render(): other_dims}))
    else:
        checks.append({"name": "field-agreement", "status": "skip",
                       "witness": "user modules may depend on the characteristic"})

    failed = any(c["status"] == "fail" for c in checks)
    return {
        "command": "kunneth-check",
        "field": field.render(),
        "module": name,
        "factors": [F.name for F in factors],
        "degrees": list(range(len(dims))),
        "dims": dims,
        "predicted": predicted,
        "checks": checks,
        "status": "fail" if failed else "pass",
    }

