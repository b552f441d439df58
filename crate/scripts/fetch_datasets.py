#!/usr/bin/env python3
"""Fetch the benchmark datasets and write them as headered CSV files.

The UCI repository itself is not always reachable, so the raw files are taken
from Python packages that redistribute them unchanged:

  keel-ds               bupa, heart (statlog), pima, wine, letter, haberman
  imbalanced-databases  glass (original UCI glass.data, id column dropped)
  responsibly           adult.data (Income)

Balance Scale is generated: the UCI file is the full 5^4 factorial design with
the class given by comparing left and right torque.

Bank Marketing (bank-full.csv) has no redistributing package on the index;
place it manually at data/bank.csv (semicolon-separated original is fine, it
is converted if found at data/bank-full.csv).

Usage: python3 scripts/fetch_datasets.py [--out data]
"""

import argparse
import csv
import io
import itertools
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

KEEL = {
    # name: (path inside wheel, feature names, target name)
    "bupa": ("keel_ds/data/balanced/raw/bupa.dat",
             ["mcv", "alkphos", "sgpt", "sgot", "gammagt", "drinks"], "selector"),
    "heart": ("keel_ds/data/balanced/raw/heart.dat",
              ["age", "sex", "chest_pain", "rest_bp", "cholesterol", "fasting_bs", "rest_ecg",
               "max_hr", "exercise_angina", "oldpeak", "slope", "major_vessels", "thal"], "class"),
    "pima": ("keel_ds/data/balanced/raw/pima.dat",
             ["preg", "plas", "pres", "skin", "insu", "mass", "pedi", "age"], "class"),
    "wine": ("keel_ds/data/balanced/raw/wine.dat",
             ["alcohol", "malic_acid", "ash", "alcalinity", "magnesium", "total_phenols",
              "flavanoids", "nonflav_phenols", "proanthocyanins", "color_intensity", "hue",
              "od280_od315", "proline"], "class"),
    "letter": ("keel_ds/data/balanced/raw/letter.dat",
               ["x_box", "y_box", "width", "high", "onpix", "x_bar", "y_bar", "x2bar", "y2bar",
                "xybar", "x2ybr", "xy2br", "x_ege", "xegvy", "y_ege", "yegvx"], "lettr"),
    "survival": ("keel_ds/data/imbalanced/raw/haberman.dat",
                 ["age", "op_year", "positive_nodes"], "survival"),
}

ADULT_COLUMNS = ["age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
                 "occupation", "relationship", "race", "sex", "capital_gain", "capital_loss",
                 "hours_per_week", "native_country", "income"]


def pip_download(package, dest):
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "--only-binary=:all:",
                    "-q", "-d", str(dest), package], check=True)
    wheels = sorted(Path(dest).glob(package.replace("-", "_") + "-*.whl"))
    if not wheels:
        raise SystemExit(f"no wheel for {package}")
    return zipfile.ZipFile(wheels[-1])


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def parse_lines(text, sep=","):
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@") or line.startswith("|"):
            continue
        rows.append([c.strip() for c in line.split(sep)])
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        keel = pip_download("keel-ds", tmp)
        for name, (member, features, target) in KEEL.items():
            rows = parse_lines(keel.read(member).decode())
            write_csv(out / f"{name}.csv", features + [target], rows)

        imb = pip_download("imbalanced-databases", tmp)
        rows = parse_lines(imb.read("imbalanced_databases/data/glass/glass.data.txt").decode())
        glass = ["ri", "na", "mg", "al", "si", "k", "ca", "ba", "fe"]
        write_csv(out / "glass.csv", glass + ["type"], [r[1:] for r in rows])

        resp = pip_download("responsibly", tmp)
        rows = parse_lines(resp.read("responsibly/dataset/adult/adult.data").decode())
        write_csv(out / "income.csv", ADULT_COLUMNS, rows)

    rows = []
    for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
        left, right = lw * ld, rw * rd
        label = "L" if left > right else ("R" if right > left else "B")
        rows.append([lw, ld, rw, rd, label])
    write_csv(out / "balance.csv", ["left_weight", "left_distance", "right_weight",
                                    "right_distance", "class"], rows)

    bank_raw = out / "bank-full.csv"
    if bank_raw.exists():
        reader = csv.reader(io.StringIO(bank_raw.read_text()), delimiter=";")
        header, *rows = list(reader)
        write_csv(out / "bank.csv", header, rows)
    elif not (out / "bank.csv").exists():
        print("bank.csv not available: copy bank-full.csv from the UCI Bank Marketing archive "
              f"into {out}/ and re-run", file=sys.stderr)


if __name__ == "__main__":
    main()
