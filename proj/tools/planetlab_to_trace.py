#!/usr/bin/env python3
"""Convert a PlanetLab CPU-utilisation directory into the simulator's trace CSV.

Each input file holds one VM: one integer CPU percentage per line, one line per
300 s interval. Each VM with a nonzero sample becomes a task. Consecutive VMs (in sorted file
order) are grouped into jobs of 2 to 10 tasks, and a job arrives at the first
nonzero sample of any of its VMs.
"""

import argparse
import csv
import random
import sys
from pathlib import Path

HEADER = ["task_id", "job_id", "arrival_interval", "cpu_mips", "ram_mb", "disk_mb", "bw_kbps", "length_mi",
          "deadline_driven"]


def read_vm(path: Path) -> list[float]:
    out = []
    for line in path.read_text().split():
        out.append(max(0.0, min(100.0, float(line))))
    return out


def convert(vm_files: list[Path], *, seed: int, host_mips: float, interval_seconds: float,
            deadline_fraction: float, max_intervals: int | None) -> list[list]:
    rng = random.Random(seed)
    rows = []
    task_id = 0
    job_id = 0
    files = list(vm_files)
    while files:
        size = min(len(files), rng.randint(2, 10))
        group, files = files[:size], files[size:]
        deadline = int(rng.random() < deadline_fraction)
        tasks = []
        for path in group:
            samples = read_vm(path)
            if max_intervals is not None:
                samples = samples[:max_intervals]
            active = [i for i, s in enumerate(samples) if s > 0]
            if active:
                tasks.append((active[0], samples[active[0]:active[-1] + 1]))
        if not tasks:
            continue
        arrival = min(first for first, _ in tasks)
        for _, span in tasks:
            cpu = host_mips * (sum(span) / len(span)) / 100.0
            length = host_mips * sum(span) / 100.0 * interval_seconds
            rows.append([task_id, job_id, arrival, f"{cpu:.6g}", rng.randint(64, 512), rng.randint(100, 1000),
                         f"{rng.uniform(0.05, 0.5):.4g}", f"{length:.6g}", deadline])
            task_id += 1
        job_id += 1
    rows.sort(key=lambda r: (r[2], r[0]))
    return rows


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("input_dir", type=Path, help="directory with one file per VM")
    p.add_argument("output", type=Path, help="trace CSV to write")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--host-mips", type=float, default=2000.0, help="capacity a 100%% sample stands for")
    p.add_argument("--interval-seconds", type=float, default=300.0)
    p.add_argument("--deadline-fraction", type=float, default=0.5)
    p.add_argument("--max-intervals", type=int, default=None)
    args = p.parse_args(argv)

    files = sorted(f for f in args.input_dir.iterdir() if f.is_file())
    if not files:
        print(f"no VM files in {args.input_dir}", file=sys.stderr)
        return 1
    rows = convert(files, seed=args.seed, host_mips=args.host_mips, interval_seconds=args.interval_seconds,
                   deadline_fraction=args.deadline_fraction, max_intervals=args.max_intervals)
    with args.output.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)
    print(f"wrote {len(rows)} tasks to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
