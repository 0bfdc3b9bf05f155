import logging

from torvan.modules import FiniteModule, hom_to_trivial, validate

LOGGER = logging.getLogger(__name__)


def validatereport(module: FiniteModule) -> dict:
    report = validate(module)
    LOGGER.info(f"{module.name}: {len(report.violations)} violations")

    return {
        "command": "validate",
        "field": module.field.render(),
        "module": module.name,
        "num_vars": module.num_vars,
        "dim": module.dim,
        "validation": report.to_dict(module.field),
        "hom_to_trivial": hom_to_trivial(module) if report.commuting else None,
        "status": "pass" if report.ok else "fail",
    }
