"""Convert the raw UCI downloads into the CSV layout the loader expects
(feature columns, then a ``label`` column, with a header row).

    python prepare_uci_data.py gas  <dir with batch1.dat..batch10.dat> gassensor.csv
    python prepare_uci_data.py shuttle <dir with shuttle.trn, shuttle.tst> shuttle.csv

Gas sensor drift batches are sparse "label;concentration idx:value ..." rows
with 128 features; the label is the gas id 1..6.  Shuttle rows are nine
space-separated attributes followed by the class 1..7; the train and test
files are concatenated.
"""

import csv
import sys
from pathlib import Path


def gas_rows(folder):
    for i in range(1, 11):
        for line in (Path(folder) / f"batch{i}.dat").read_text().splitlines():
            if not line.strip():
                continue
            head, *pairs = line.split()
            label = head.split(";")[0]
            values = [0.0] * 128
            for pair in pairs:
                idx, val = pair.split(":")
                values[int(idx) - 1] = float(val)
            yield values, label


def shuttle_rows(folder):
    for name in ("shuttle.trn", "shuttle.tst"):
        for line in (Path(folder) / name).read_text().splitlines():
            if line.strip():
                *values, label = line.split()
                yield values, label


def main(kind, folder, out):
    rows, width = {"gas": (gas_rows, 128), "shuttle": (shuttle_rows, 9)}[kind]
    count = 0
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(width)] + ["label"])
        for values, label in rows(folder):
            writer.writerow([*values, label])
            count += 1
    print(f"wrote {count} rows to {out}")


if __name__ == "__main__":
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    main(*sys.argv[1:])
