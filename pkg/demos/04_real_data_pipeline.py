"""End-to-end pipeline on real HMD and death-toll data, via the CLI.

Real inputs cannot ship with the repository (HMD requires registered
accounts), so this demo documents and drives the exact command sequence.
It expects MORTALIS_REAL_DATA to point at a directory laid out as in the
README:

    $MORTALIS_REAL_DATA/
      DEU/lt_1x1.txt        HMD 1x1 period life table file
      DEU/lt_5x1.txt        HMD 5x1 period life table file
      DEU/population.txt    HMD population file
      ...                   more countries, same shape
      deaths.csv            country,year,deaths for 2015-2021

Without that variable the demo prints the commands it would run and exits.

Run:  python demos/04_real_data_pipeline.py
"""

import os
import sys
import tempfile
from pathlib import Path

from mortalis.cli import main

COMMANDS = """\
mortalis ingest --kind lifetable --country DEU DEU/lt_1x1.txt DEU/lt_5x1.txt
mortalis ingest --kind population --country DEU DEU/population.txt
mortalis ingest --kind deaths deaths.csv
mortalis compute --countries DEU --reference 2015-2019 --targets 2020,2021 \\
    --pooling both --output-dir out
mortalis compute --countries DEU --reference 2017-2019 --targets 2020,2021 \\
    --pooling pooled --output-dir out3y
"""

source = os.environ.get("MORTALIS_REAL_DATA")
if not source:
    print("MORTALIS_REAL_DATA is not set. With real data in place, the")
    print("pipeline is the following (cache path via MORTALIS_DATA_DIR):\n")
    print(COMMANDS)
    sys.exit(0)

root = Path(source)
countries = sorted(p.name for p in root.iterdir()
                   if p.is_dir() and (p / "lt_5x1.txt").exists())
if not countries or not (root / "deaths.csv").exists():
    sys.exit(f"{root} does not match the documented layout")

with tempfile.TemporaryDirectory() as scratch:
    cache = str(Path(scratch) / "cache")
    for code in countries:
        base = root / code
        main(["ingest", "--kind", "lifetable", "--country", code,
              "--data-dir", cache, str(base / "lt_1x1.txt"),
              str(base / "lt_5x1.txt")])
        main(["ingest", "--kind", "population", "--country", code,
              "--data-dir", cache, str(base / "population.txt")])
    main(["ingest", "--kind", "deaths", "--data-dir", cache,
          str(root / "deaths.csv")])
    print()
    code = main(["compute", "--data-dir", cache, "--output-dir", "demo_out/real",
                 "--countries", ",".join(countries), "--pooling", "both",
                 "--lenient"])
    print(f"\ncompute exit code: {code}; outputs under demo_out/real/")
