"""Convert the raw UCI German Credit and Adult files into CSV + schema pairs.

Usage::

    python scripts/prepare_data.py --german german.data \
        --adult-train adult.data --adult-test adult.test --out data/

The raw files are the unmodified UCI distributions (they also ship inside the
``responsibly`` wheel on PyPI under ``responsibly/dataset/``).  Adult rows with
a ``?`` in any column are dropped, which leaves 30,162 train and 15,060 test
rows (45,222 pooled).
"""

import argparse
import csv
from pathlib import Path

GERMAN_COLUMNS = [
    ("checking-status", "categorical", ["A11", "A12", "A13", "A14"]),
    ("duration", "numeric", None),
    ("credit-history", "categorical", ["A30", "A31", "A32", "A33", "A34"]),
    ("purpose", "categorical",
     ["A40", "A41", "A42", "A43", "A44", "A45", "A46", "A47", "A48", "A49", "A410"]),
    ("credit-amount", "numeric", None),
    ("savings-status", "categorical", ["A61", "A62", "A63", "A64", "A65"]),
    ("employment", "categorical", ["A71", "A72", "A73", "A74", "A75"]),
    ("installment-commitment", "numeric", None),
    ("personal-status", "categorical", ["A91", "A92", "A93", "A94", "A95"]),
    ("other-parties", "categorical", ["A101", "A102", "A103"]),
    ("residence-since", "numeric", None),
    ("property-magnitude", "categorical", ["A121", "A122", "A123", "A124"]),
    ("age", "numeric", None),
    ("other-payment-plans", "categorical", ["A141", "A142", "A143"]),
    ("housing", "categorical", ["A151", "A152", "A153"]),
    ("existing-credits", "numeric", None),
    ("job", "categorical", ["A171", "A172", "A173", "A174"]),
    ("num-dependents", "numeric", None),
    ("own-telephone", "categorical", ["A191", "A192"]),
    ("foreign-worker", "categorical", ["A201", "A202"]),
]

ADULT_COLUMNS = [
    ("age", "numeric"),
    ("workclass", "categorical"),
    ("final-weight", "numeric"),
    ("education", "categorical"),
    ("edu-num", "numeric"),
    ("marital-status", "categorical"),
    ("occupation", "categorical"),
    ("relationship", "categorical"),
    ("race", "categorical"),
    ("gender", "categorical"),
    ("capital-gain", "numeric"),
    ("capital-loss", "numeric"),
    ("hours-per-week", "numeric"),
    ("native-country", "categorical"),
]


def write_schema(path, rows, header):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        for name, kind, role, cats in rows:
            line = f"{name},{kind},{role}"
            if cats:
                line += "," + "|".join(cats)
            fh.write(line + "\n")


def prepare_german(src, out):
    label_map = {"1": "good", "2": "bad"}
    records = []
    with open(src, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 21:
                raise ValueError(f"unexpected German row width {len(parts)}")
            records.append(parts[:20] + [label_map[parts[20]]])
    with open(out / "german.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([c[0] for c in GERMAN_COLUMNS] + ["credit"])
        w.writerows(records)
    schema = [
        (name, kind, "protected" if name == "age" else "feature", cats)
        for name, kind, cats in GERMAN_COLUMNS
    ]
    schema.append(("credit", "categorical", "label", ["good", "bad"]))
    write_schema(
        out / "german.schema", schema,
        "# German Credit (UCI Statlog), 1,000 rows.\n"
        "# name,kind,role[,category|category|...]\n",
    )
    return len(records)


def _read_adult(src):
    rows = []
    with open(src, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 15:
                raise ValueError(f"unexpected Adult row width {len(parts)}")
            if "?" in parts:
                continue
            parts[14] = parts[14].rstrip(".")
            rows.append(parts)
    return rows


def prepare_adult(train_src, test_src, out):
    train = _read_adult(train_src)
    test = _read_adult(test_src)
    header = [c[0] for c in ADULT_COLUMNS] + ["income"]
    for name, rows in (("adult_train.csv", train), ("adult_test.csv", test)):
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    # category order: sorted, so both splits share one dictionary
    schema = []
    for j, (name, kind) in enumerate(ADULT_COLUMNS):
        cats = sorted({r[j] for r in train + test}) if kind == "categorical" else None
        role = "protected" if name == "gender" else "feature"
        schema.append((name, kind, role, cats))
    schema.append(("income", "categorical", "label", ["<=50K", ">50K"]))
    write_schema(
        out / "adult.schema", schema,
        "# Adult Income (UCI), rows with missing values removed.\n"
        "# name,kind,role[,category|category|...]\n",
    )
    return len(train), len(test)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--german", type=Path)
    ap.add_argument("--adult-train", type=Path)
    ap.add_argument("--adult-test", type=Path)
    ap.add_argument("--out", type=Path, default=Path("data"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    if args.german:
        print("german rows:", prepare_german(args.german, args.out))
    if args.adult_train and args.adult_test:
        n_train, n_test = prepare_adult(args.adult_train, args.adult_test, args.out)
        print(f"adult rows: train={n_train} test={n_test} total={n_train + n_test}")


if __name__ == "__main__":
    main()
