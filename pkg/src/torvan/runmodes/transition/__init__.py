import logging

from torvan.linalg import DENSE_FALLBACK_LIMIT
from torvan.limits import paper_system, vanishing_certificate
from torvan.scalars import FieldSpec

LOGGER = logging.getLogger(__name__)


def transitionreport(ambient: int, level: int, field: FieldSpec,
                     dense_limit: int = DENSE_FALLBACK_LIMIT) -> dict:
    """Certificate for the single step A_N/I_n -> A_N/I_{n+1}."""
    system = paper_system(ambient, field, start=level, stop=level + 1)
    cert = vanishing_certificate(system, dense_limit=dense_limit)

    return {
        "command": "transition-check",
        "module": f"quotient:{ambient}:{level} -> quotient:{ambient}:{level + 1}",
        **cert.to_json(),
        "status": "pass" if cert.passed else "fail",
    }
