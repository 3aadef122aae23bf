"""``qgft`` command-line driver.

Every subcommand writes ``<out>/<subcommand>.csv`` and ``<out>/summary.json``.
CSV columns: backend, q, trunc_n, tower_l, seed, z, p, n, label, metric,
value, tolerance, pass. The first line is a ``# generated`` timestamp
comment; everything after it is deterministic for a fixed config and seed.

Exit status: 0 when every toleranced metric passes, 1 on a numerical
failure, 2 on an invalid configuration.
"""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from .backend import ConsistencyError, TruncationError
from .config import ConfigError, ExperimentConfig, format_complex, load_config
from .experiments import EXPERIMENTS, Row, make_backend

CSV_HELP = (
    "Writes OUT/<subcommand>.csv with columns backend, q, trunc_n, tower_l, seed, "
    "z, p, n, label, metric, value, tolerance, pass (one row per parameter tuple and "
    "metric, sorted), and OUT/summary.json. Flags override values from --config. "
    "QGFT_THREADS caps the worker threads."
)

COLUMNS = ["backend", "q", "trunc_n", "tower_l", "seed", "z", "p", "n", "label", "metric", "value", "tolerance", "pass"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, complex):
        return format_complex(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _sort_key(row: Row):
    z = row.z if row.z is not None else complex(float("-inf"))
    return (z.real, z.imag, row.p if row.p is not None else -1.0, row.n if row.n is not None else -1, row.label, row.metric)


def render_csv(cfg: ExperimentConfig, rows: list[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in sorted(rows, key=_sort_key):
        writer.writerow(
            [
                _fmt(x)
                for x in (
                    cfg.backend, cfg.q, cfg.trunc_n, str(cfg.tower_l), cfg.seed,
                    r.z, r.p, r.n, r.label, r.metric, float(r.value), r.tolerance, r.passed,
                )
            ]
        )
    return buf.getvalue()


def run_experiment(name: str, cfg: ExperimentConfig, out: Path) -> tuple[bool, list[Row]]:
    """Run ``name``, write the CSV and JSON summary, return (passed, rows)."""
    start = time.perf_counter()
    backend = make_backend(cfg)
    rows = EXPERIMENTS[name](cfg, backend)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    failures = [r for r in rows if r.passed is False]
    out.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    (out / f"{name}.csv").write_text(f"# generated {stamp}\n" + render_csv(cfg, rows))
    checked = [r for r in rows if r.tolerance is not None]
    summary = {
        "experiment": name,
        "params": cfg.echo(),
        "metrics": {_key(r): r.value for r in sorted(checked, key=_sort_key)},
        "pass": not failures,
        "tolerance": {_key(r): r.tolerance for r in sorted(checked, key=_sort_key)},
        "runtime_ms": round(runtime_ms, 3),
    }
    if failures:
        summary["failed"] = sorted({_key(r) for r in failures})
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return not failures, rows


def _key(r: Row) -> str:
    parts = [r.label, r.metric]
    if r.z is not None:
        parts.insert(0, f"z={format_complex(r.z)}")
    return "/".join(parts)


def _options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON config file."),
        click.option("--backend", default=None, help="suq2, s3 or cyclic(N)."),
        click.option("--q", "q", type=float, default=None, help="Deformation parameter in (0, 1)."),
        click.option("--trunc-n", type=int, default=None, help="Truncation N of l^2(N)."),
        click.option("--tower-l", type=float, default=None, help="Highest corepresentation level L."),
        click.option("--z", "z_grid", default=None, help='Comma list of complex z, e.g. "-0.5+0i,0+0i".'),
        click.option("--p", "p_grid", default=None, help='Comma list of exponents in [1, 2], e.g. "1,1.3333,1.5,2".'),
        click.option("--n", "n_range", default=None, help='Integer range "1..5" or list "1,2,3".'),
        click.option("--seed", type=int, default=None),
        click.option("--samples", type=int, default=None, help="Random samples per check."),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), default="qgft-out", show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """L^p Fourier experiments on SU_q(2) and finite groups."""


def _make_command(name: str):
    @main.command(name=name, help=f"Run the {name} experiment.\n\n{CSV_HELP}")
    @_options
    def command(config_path, out_dir, **flags):
        overrides = {k: v for k, v in flags.items()}
        try:
            cfg = load_config(config_path, overrides)
            passed, rows = run_experiment(name, cfg, Path(out_dir))
        except (ConfigError, TruncationError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except ConsistencyError as exc:
            click.echo(f"FAILED {name}: {exc}", err=True)
            sys.exit(1)
        for r in rows:
            if r.passed is False:
                click.echo(f"FAILED {name}: {_key(r)} = {r.value:.3e} > {r.tolerance:.3e}", err=True)
        click.echo(f"{name}: {'pass' if passed else 'FAIL'} ({Path(out_dir) / (name + '.csv')})")
        sys.exit(0 if passed else 1)

    return command


for _name in EXPERIMENTS:
    _make_command(_name)


if __name__ == "__main__":
    main()
