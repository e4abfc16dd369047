"""
Run logging utilities.

Sets up diagnostic logging for the command line and records every run as
three artifacts next to each other:
- <out>.csv: the experiment table
- <out>.manifest.json: subcommand, resolved config, outputs, seed, duration
- <out>_summary.txt: human-readable run summary

Author: DuplexSched Project
"""

import json
import logging
import platform
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import psutil

LOG_FORMAT = "%(levelname)s - %(module)s - %(message)s"
HANDLER_NAME = "duplexsched"

# Full round-trip precision so reruns can be compared byte for byte.
CSV_FLOAT_FORMAT = "%.17g"


def configure_logging(level: int = logging.INFO) -> logging.Logger:
    """
    Install one stream handler on the root logger.

    Calling it again replaces the handler instead of stacking a second one.

    Args:
        level (int): Logging level for the root logger

    Returns:
        logging.Logger: The root logger
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        if handler.get_name() == HANDLER_NAME:
            root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.set_name(HANDLER_NAME)
    root.addHandler(handler)
    root.setLevel(level)
    return root


def write_table_csv(rows: pd.DataFrame, path: Path) -> Path:
    """Write a result table as UTF-8 CSV with full float precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n",
                encoding="utf-8")
    return path


def host_info() -> Dict[str, Any]:
    """Machine description for the manifest; never affects results."""
    return {
        'python': platform.python_version(),
        'platform': platform.platform(),
        'physical_cores': psutil.cpu_count(logical=False),
        'logical_cores': psutil.cpu_count(logical=True),
        'memory_gb': round(psutil.virtual_memory().total / 2 ** 30, 1),
    }


class RunLogger:
    """Writes the table, manifest and summary of one command-line run."""

    def __init__(self, out: str, subcommand: str):
        """
        Initialize run logger.

        Args:
            out (str): Output prefix; files are <out>.csv, <out>.manifest.json, <out>_summary.txt
            subcommand (str): Name of the experiment being run
        """
        self.out = Path(out)
        self.subcommand = subcommand
        self.start_time = datetime.now()
        self.csv_path = self.out.with_name(self.out.name + ".csv")
        self.manifest_path = self.out.with_name(self.out.name + ".manifest.json")
        self.summary_path = self.out.with_name(self.out.name + "_summary.txt")
        self.outputs: List[str] = []

        self.out.parent.mkdir(parents=True, exist_ok=True)

    def log_table(self, table) -> Path:
        """
        Write an ExperimentTable's rows to <out>.csv.

        Args:
            table (ExperimentTable): Result table

        Returns:
            Path: CSV path
        """
        write_table_csv(table.rows, self.csv_path)
        self.outputs.append(str(self.csv_path))
        return self.csv_path

    def log_run_end(self, config: Dict[str, Any], metadata: Optional[Dict[str, Any]] = None,
                    row_count: int = 0) -> Dict[str, Any]:
        """
        Write the manifest and the summary file.

        Args:
            config (dict): Resolved configuration; rerunning with it reproduces the CSV
            metadata (dict, optional): Table metadata (benchmark mode, version, ...)
            row_count (int): Number of table rows

        Returns:
            dict: The manifest as written
        """
        end_time = datetime.now()
        duration = end_time - self.start_time
        metadata = dict(metadata or {})

        manifest = {
            'subcommand': self.subcommand,
            'config': config,
            'seed': config.get('seed'),
            'workers': config.get('workers'),
            'outputs': self.outputs + [str(self.manifest_path), str(self.summary_path)],
            'started': self.start_time.isoformat(),
            'duration_seconds': duration.total_seconds(),
            'version': metadata.get('version'),
            'metadata': metadata,
            'host': host_info(),
        }
        with open(self.manifest_path, 'w', encoding='utf-8') as f:
            json.dump(manifest, f, indent=2, sort_keys=True, default=str)

        with open(self.summary_path, 'w', encoding='utf-8') as f:
            f.write(f"Run Start: {self.start_time.isoformat()}\n")
            f.write(f"Run End: {end_time.isoformat()}\n")
            f.write(f"Duration: {duration}\n")
            f.write(f"Subcommand: {self.subcommand}\n")
            f.write(f"Rows: {row_count}\n")
            f.write("=" * 50 + "\n")
            f.write("Configuration:\n")
            for key, value in sorted(config.items()):
                f.write(f"  {key}: {value}\n")
            if metadata:
                f.write("=" * 50 + "\n")
                f.write("Metadata:\n")
                for key, value in sorted(metadata.items()):
                    f.write(f"  {key}: {value}\n")
        return manifest
