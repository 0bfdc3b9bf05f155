import logging

from torvan.linalg import DENSE_FALLBACK_LIMIT
from torvan.limits import paper_system, vanishing_certificate
from torvan.scalars import FieldSpec

LOGGER = logging.getLogger(__name__)


def certifyreport(ambient: int, field: FieldSpec, workers: int = 1,
                  dense_limit: int = DENSE_FALLBACK_LIMIT) -> dict:
    system = paper_system(ambient, field)
    cert = vanishing_certificate(system, workers=workers, dense_limit=dense_limit)

    for failure in cert.failures:
        LOGGER.warning(f"Check {failure.name} failed at level {failure.level}, degree {failure.degree}")

    return {
        "command": "certify",
        "module": system.name,
        **cert.to_json(),
        "status": "pass" if cert.passed else "fail",
    }
