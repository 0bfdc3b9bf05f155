import logging

from torvan.complexes import (
    ce_complex,
    ce_cohomology_dims,
    euler_characteristic,
    homology_dims,
    koszul_complex,
)
from torvan.errors import InputError, InvariantViolation
from torvan.linalg import DENSE_FALLBACK_LIMIT
from torvan.modules import FiniteModule, validate

LOGGER = logging.getLogger(__name__)


def _require_commuting(module: FiniteModule):
    report = validate(module)
    if not report.commuting:
        first = report.violations[0]
        raise InvariantViolation(
            f"{module.name or 'Module'}: t_{first.operators[0]} and t_{first.operators[1]} "
            "do not commute",
            witness=first.witness,
            report=report,
        )


def _select(dims: list, degree: int | None):
    if degree is None:
        return list(range(len(dims))), dims
    if not 0 <= degree < len(dims):
        raise InputError(f"Degree {degree} outside 0..{len(dims) - 1}")
    return [degree], [dims[degree]]


def _dims_report(command, module, complex_, dims, degree):
    degrees, selected = _select(dims, degree)
    return {
        "command": command,
        "field": module.field.render(),
        "module": module.name,
        "num_vars": module.num_vars,
        "dim": module.dim,
        "terms": list(complex_.terms),
        "euler_characteristic": euler_characteristic(complex_),
        "degrees": degrees,
        "dims": selected,
        "status": "pass",
    }


def torreport(module: FiniteModule, degree: int | None = None,
              dense_limit: int = DENSE_FALLBACK_LIMIT) -> dict:
    """Tor_j(M, k) as Koszul homology."""
    _require_commuting(module)
    K = koszul_complex(module)
    dims = homology_dims(K, dense_limit)
    LOGGER.info(f"Tor of {module.name}: {dims}")
    return _dims_report("tor", module, K, dims, degree)


def cereport(module: FiniteModule, degree: int | None = None,
             dense_limit: int = DENSE_FALLBACK_LIMIT) -> dict:
    """H^j of the Chevalley-Eilenberg complex; for a nilpotent W this is Ext^j(k, W)."""
    _require_commuting(module)
    dims = ce_cohomology_dims(module, dense_limit)
    LOGGER.info(f"CE cohomology of {module.name}: {dims}")
    return _dims_report("ce", module, ce_complex(module), dims, degree)
