import csv
import io
import json
import logging
import os
import sys
import tempfile

LOGGER = logging.getLogger(__name__)

VALID_OUTPUT_FORMATS = ["json", "table"]


def _dims_rows(report, key):
    degrees = report["degrees"]
    return [
        ["degree", *degrees],
        [key, *report[key]],
    ]


def _check_rows(checks):
    rows = [["check", "status", "level", "degree", "witness"]]
    for check in checks:
        witness = check.get("witness")
        rows.append([
            check["name"],
            check["status"],
            check.get("level", ""),
            check.get("degree", ""),
            "" if witness is None else json.dumps(witness, sort_keys=True),
        ])
    return rows


def _level_rows(levels):
    rows = [["level", "dim", "level_module", "tor_dims"]]
    for entry in levels:
        tor_dims = entry["tor_dims"]
        rows.append([
            entry["level"],
            entry["dim"],
            entry["module"],
            "-" if tor_dims is None else " ".join(str(d) for d in tor_dims),
        ])
    return rows


def _colimit_rows(colimit):
    rows = [["degree", "dims", "colim_dim", "surviving_ranks", "death_steps"]]
    for entry in colimit:
        rows.append([
            entry["degree"],
            " ".join(str(d) for d in entry["dims"]),
            entry["colim_dim"],
            " ".join(str(r) for r in entry["surviving_ranks"]),
            " ".join("-" if s is None else str(s) for s in entry["death_steps"]),
        ])
    return rows


def table_rows(report: dict) -> list:
    """Tabular form of a report; carries the same numbers as the JSON form."""
    rows = [["command", report["command"]], ["field", report["field"]]]
    if "module" in report:
        rows.append(["module", report["module"]])

    match report["command"]:
        case "validate":
            rows.append(["num_vars", report["num_vars"]])
            rows.append(["dim", report["dim"]])
            rows.append(["commuting", report["validation"]["commuting"]])
            rows.append(["nilpotency_degrees",
                         *("-" if d is None else d for d in report["validation"]["nilpotency_degrees"])])
            rows.append(["square_zero", *report["validation"]["square_zero"]])
            if report["hom_to_trivial"] is not None:
                rows.append(["hom_to_trivial", report["hom_to_trivial"]])
            for violation in report["validation"]["violations"]:
                rows.append(["violation", violation["kind"],
                             " ".join(str(i) for i in violation["operators"]),
                             json.dumps(violation["witness"], sort_keys=True)])
        case "tor" | "ce":
            rows.append(["num_vars", report["num_vars"]])
            rows.append(["dim", report["dim"]])
            rows.append(["terms", *report["terms"]])
            rows.append(["euler_characteristic", report["euler_characteristic"]])
            rows.extend(_dims_rows(report, "dims"))
        case "kunneth-check":
            rows.append(["factors", *report["factors"]])
            rows.extend(_dims_rows(report, "dims"))
            rows.append(["predicted", *report["predicted"]])
            rows.extend(_check_rows(report["checks"]))
        case "transition-check" | "certify":
            rows.append(["ambient", report["ambient"]])
            rows.extend(_level_rows(report["levels"]))
            rows.extend(_check_rows(report["checks"]))
            rows.extend(_colimit_rows(report["colimit"]))
            rows.append(["conclusion", report["conclusion"]])
            rows.append(["caveat", report["caveat"]])

    rows.append(["status", report["status"]])
    return rows


def render_report(report: dict, output_format: str) -> str:
    if output_format == "json":
        return json.dumps(report, indent=2, ensure_ascii=False) + "\n"

    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
    for row in table_rows(report):
        writer.writerow(row)
    return buffer.getvalue()


def exportreport(report: dict, output_format: str, export_file=None):
    """Write the rendered report once: atomically to ``export_file``, else to stdout."""
    text = render_report(report, output_format)

    if export_file is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    (export_file.parent).mkdir(parents=True, exist_ok=True)

    fd, temp_name = tempfile.mkstemp(dir=export_file.parent, prefix=f".{export_file.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as ef:
            ef.write(text)
        os.replace(temp_name, export_file)
    except BaseException:
        os.unlink(temp_name)
        raise
    LOGGER.info(f"Report written to {export_file}")
