#!/usr/bin/env python3
"""Fetch COMPAS and Adult and write the CSV files the harness reads.

The raw files come from the `responsibly` wheel on PyPI, which bundles the
UCI Adult files and ProPublica's compas-scores-two-years.csv. Output goes to
data/ (or --out), next to the schema files in data/schemas/.

    python3 scripts/fetch_datasets.py [--wheel path/to/responsibly.whl] [--out data]
"""

import argparse
import csv
import glob
import io
import os
import subprocess
import sys
import tempfile
import zipfile

WHEEL_SPEC = "responsibly==0.1.2"
COMPAS_MEMBER = "responsibly/dataset/compas/compas-scores-two-years.csv"
ADULT_MEMBERS = ("responsibly/dataset/adult/adult.data", "responsibly/dataset/adult/adult.test")

COMPAS_COLUMNS = [
    "sex", "age", "race", "juv_fel_count", "juv_misd_count", "juv_other_count",
    "priors_count", "c_charge_degree", "two_year_recid",
]

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
    "occupation", "relationship", "race", "sex", "capital_gain", "capital_loss",
    "hours_per_week", "native_country", "income",
]


def download_wheel(dest):
    cmd = [sys.executable, "-m", "pip", "download", "--no-deps", "-d", dest, WHEEL_SPEC]
    subprocess.run(cmd, check=True)
    found = glob.glob(os.path.join(dest, "responsibly-*.whl"))
    if not found:
        sys.exit("pip download produced no wheel")
    return found[0]


def compas_rows(raw):
    reader = csv.DictReader(io.StringIO(raw))
    for r in reader:
        # ProPublica's screening filter, restricted to the two largest groups.
        if r["days_b_screening_arrest"] == "":
            continue
        if abs(float(r["days_b_screening_arrest"])) > 30:
            continue
        if r["is_recid"] == "-1" or r["c_charge_degree"] == "O" or r["score_text"] == "N/A":
            continue
        if r["race"] not in ("African-American", "Caucasian"):
            continue
        yield [r[c] for c in COMPAS_COLUMNS]


def adult_rows(raw):
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(ADULT_COLUMNS):
            continue
        fields[-1] = fields[-1].rstrip(".")
        yield fields


def write(path, header, rows):
    n = 0
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)
            n += 1
    return n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wheel", help="local responsibly wheel; downloaded when omitted")
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or download_wheel(tmp)
        with zipfile.ZipFile(wheel) as z:
            compas = z.read(COMPAS_MEMBER).decode("utf-8")
            adult = "\n".join(z.read(m).decode("utf-8") for m in ADULT_MEMBERS)

    n = write(os.path.join(args.out, "compas.csv"), COMPAS_COLUMNS, compas_rows(compas))
    print(f"compas.csv: {n} rows")
    n = write(os.path.join(args.out, "adult.csv"), ADULT_COLUMNS, adult_rows(adult))
    print(f"adult.csv: {n} rows (rows with '?' are dropped by the schema)")


if __name__ == "__main__":
    main()
