"""Runs each CLI command and validates what it writes.

JSON documents are checked against the schema named by their "kind", PGM
files for a well-formed P5 header and payload size, CSV files for a header
and rectangular rows.
"""
import csv
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

TOOL, SCHEMAS = sys.argv[1], pathlib.Path(sys.argv[2])

COMMANDS = {
    "classify": ["classify", "--system", "cubic_interval", "--depth", "7", "--format", "json,csv,pgm"],
    "classify-2d": ["classify", "--system", "nested_rings", "--depth", "6", "--epsilon", "0.5w"],
    "core-scan": ["core-scan", "--system", "nested_rings", "--schedule", "5:0.03125,6:0.015625,7:0.0078125"],
    "merge-scan": ["merge-scan", "--system", "cubic_interval", "--depth", "6", "--sweep", "a=0.1:0.3:3",
                   "--format", "csv,json,pgm"],
    "portrait": ["portrait", "--D", "0.2", "--beta", "2", "--T", "3", "--format", "json"],
    "portrait-polar": ["portrait", "--flow", "polar", "--D", "0", "--beta", "2.5", "--T", "1"],
    "verify": ["verify", "--system", "nf_timeq", "--param", "D=0", "--radius", "0.2", "--range=-0.2:0.2"],
    "verify-spot": ["verify", "--system", "periodic_spot", "--involution", "conj", "--param", "q=3"],
    "noisy": ["noisy", "--system", "cubic_interval", "--depth", "7", "--epsilon", "1e-2", "--x0", "0.5",
              "--trials", "3", "--seed", "4"],
}


def schemas():
    out = {}
    for p in SCHEMAS.glob("*.schema.json"):
        doc = json.loads(p.read_text())
        jsonschema.Draft202012Validator.check_schema(doc)
        out[doc["properties"]["kind"]["const"]] = doc
    return out


def check_pgm(path):
    data = path.read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1
    assert fields[0] == b"P5", f"{path}: magic {fields[0]!r}"
    w, h, maxval = map(int, fields[1:])
    assert w > 0 and h > 0 and maxval == 255, f"{path}: header {w} {h} {maxval}"
    assert len(data) - pos == w * h, f"{path}: payload {len(data) - pos} != {w * h}"


def check_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows, f"{path}: empty"
    width = len(rows[0])
    assert all(len(r) == width for r in rows), f"{path}: ragged rows"


def main():
    by_kind = schemas()
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for name, args in COMMANDS.items():
            out = pathlib.Path(tmp) / name
            proc = subprocess.run([TOOL, *args, "--out", str(out)], capture_output=True, text=True)
            if proc.returncode != 0:
                print(f"FAIL {name}: exit {proc.returncode}: {proc.stderr.strip()}")
                failures += 1
                continue
            seen = []
            for f in sorted(out.rglob("*")):
                try:
                    if f.suffix == ".json":
                        doc = json.loads(f.read_text())
                        jsonschema.validate(doc, by_kind[doc["kind"]], cls=jsonschema.Draft202012Validator)
                    elif f.suffix == ".pgm":
                        check_pgm(f)
                    elif f.suffix == ".csv":
                        check_csv(f)
                    else:
                        continue
                    seen.append(f.name)
                except Exception as e:  # report every bad file, not just the first
                    print(f"FAIL {name}/{f.name}: {e}")
                    failures += 1
            print(f"ok   {name}: {len(seen)} files checked")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
