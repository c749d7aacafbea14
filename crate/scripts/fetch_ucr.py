#!/usr/bin/env python3
"""Fetch the UCR datasets used by the desk-scale acceptance checks.

Writes data/ucr/<Name>.tsv (one sample per line: label, then values,
tab-separated) for: Coffee, GunPoint, ECG200, Trace. Train and test
partitions are concatenated; the pipeline makes its own stratified split.

Sources, in order of preference:
  1. locally installed python packages that bundle the data
     (pyts: Coffee, GunPoint; tslearn: Trace)
  2. the per-dataset zip archives of timeseriesclassification.com

Usage: python3 scripts/fetch_ucr.py [output_dir]
"""

import io
import os
import sys
import urllib.request
import zipfile

DATASETS = ["Coffee", "GunPoint", "ECG200", "Trace"]
ARCHIVE_URL = "https://www.timeseriesclassification.com/aeon-toolkit/{name}.zip"


def fmt_label(label):
    # UCR text files often carry labels as floats ("1.0000000e+00")
    try:
        f = float(label)
        if f == int(f):
            return str(int(f))
    except (TypeError, ValueError):
        pass
    return str(label)


def write_tsv(path, rows):
    with open(path, "w") as fh:
        for label, values in rows:
            fh.write(fmt_label(label))
            for v in values:
                fh.write("\t" + repr(float(v)))
            fh.write("\n")
    print(f"wrote {path} ({len(rows)} samples)")


def rows_from_arrays(xs, ys):
    return [(y, list(x)) for x, y in zip(xs, ys)]


def try_packages(name):
    try:
        if name in ("Coffee", "GunPoint"):
            import pyts.datasets as pd

            load = pd.load_coffee if name == "Coffee" else pd.load_gunpoint
            xtr, xte, ytr, yte = load(return_X_y=True)
            return rows_from_arrays(xtr, ytr) + rows_from_arrays(xte, yte)
        if name == "Trace":
            from tslearn.datasets import CachedDatasets

            xtr, ytr, xte, yte = CachedDatasets().load_dataset("Trace")
            xtr = xtr.reshape(len(xtr), -1)
            xte = xte.reshape(len(xte), -1)
            return rows_from_arrays(xtr, ytr) + rows_from_arrays(xte, yte)
    except ImportError:
        return None
    return None


def parse_ts_member(text):
    rows = []
    in_data = False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.lower() == "@data":
            in_data = True
            continue
        if line.startswith("@"):
            continue
        if in_data:
            body, _, label = line.rpartition(":")
            rows.append((label.strip(), [float(v) for v in body.split(",")]))
    return rows


def parse_txt_member(text):
    rows = []
    for line in text.splitlines():
        fields = line.replace(",", " ").split()
        if len(fields) >= 3:
            rows.append((fields[0], [float(v) for v in fields[1:]]))
    return rows


def try_download(name):
    url = ARCHIVE_URL.format(name=name)
    try:
        with urllib.request.urlopen(url, timeout=60) as resp:
            blob = resp.read()
    except Exception as e:  # noqa: BLE001 - report and fall through
        print(f"  download failed for {name}: {e}")
        return None
    rows = []
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        for suffix, parser in ((".ts", parse_ts_member), (".txt", parse_txt_member)):
            for part in ("TRAIN", "TEST"):
                member = f"{name}_{part}{suffix}"
                if member in zf.namelist():
                    rows.extend(parser(zf.read(member).decode("utf-8")))
            if rows:
                return rows
    return rows or None


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "data/ucr"
    os.makedirs(out_dir, exist_ok=True)
    missing = []
    for name in DATASETS:
        path = os.path.join(out_dir, f"{name}.tsv")
        if os.path.exists(path):
            print(f"{path} already present")
            continue
        rows = try_packages(name) or try_download(name)
        if rows:
            write_tsv(path, rows)
        else:
            missing.append(name)
    if missing:
        print(f"could not obtain: {', '.join(missing)}")
        print("place <Name>.tsv (or <Name>_TRAIN.tsv/<Name>_TEST.tsv) files there manually")
        sys.exit(1)


if __name__ == "__main__":
    main()
