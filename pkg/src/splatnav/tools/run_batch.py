#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
run_batch.py - Runs seeded trials of one strategy and reports SR, SPC, NE and NS.

Usage:
    splatnav-batch --difficulty Medium --strategy BEINGS --seed 0 --trials 50 --workers 4 \
        --csv medium.csv --log medium.jsonl
"""

import logging
import sys
# Suppress all logging output at the earliest possible stage to ensure pure JSON stderr on error.
logging.disable(logging.CRITICAL)

from pathlib import Path

try:
    from splatnav.config import load_episode_config
    from splatnav.harness import belief_grid, resolve_task, run_batch, trial_seeds
    from splatnav.io_utils import (
        GracefulArgumentParser,
        add_log_level_argument,
        print_json_stdout,
        report_error,
    )
    from splatnav.utils import add_episode_arguments, overrides_from_args, write_batch_csv, write_episode_log
except ImportError:
    sys.stderr.write('{"status": "error", "message": "The \'splatnav\' package is required. Please install it."}\n')
    sys.exit(1)

# --- Tool Characteristics ---
logger = logging.getLogger(__name__)


def main() -> None:
    """Main entry point."""
    logging.disable(logging.NOTSET)

    parser = GracefulArgumentParser(description="Run a batch of seeded navigation trials and summarize metrics.")
    add_episode_arguments(parser, batch=True)
    parser.add_argument("--csv", help="Write the one-row metrics table to this CSV path.")
    parser.add_argument("--log", help="Write the episode logs of all trials to this line-delimited file.")
    parser.add_argument("--svg-dir", help="Write one top-down SVG per trial into this directory.")
    add_log_level_argument(parser)

    try:
        args = parser.parse_args()
        logging.basicConfig(
            level=getattr(logging, args.log_level),
            format='%(asctime)s - %(levelname)s - %(message)s',
            stream=sys.stderr
        )

        cfg = load_episode_config(args.config, overrides_from_args(args))
        batch = run_batch(cfg)

        output = {
            "status": "success",
            "strategy": cfg.strategy,
            "difficulty": cfg.difficulty if cfg.scene_path is None else None,
            "scene": cfg.scene_path,
            "seed": cfg.seed,
            "summary": batch.summary,
            "trials": [r.summary() for r in batch.results],
        }
        if args.csv:
            extra = {"strategy": cfg.strategy, "difficulty": output["difficulty"] or cfg.scene_path}
            output["csv_path"] = str(write_batch_csv(args.csv, batch.summary, extra))
        if args.log:
            output["log_path"] = str(write_episode_log(args.log, batch.results))
        if args.svg_dir:
            from splatnav.visualize import plot_episode
            svg_paths = []
            for result in batch.results:
                scene, _ = resolve_task(cfg, trial_seeds(cfg.seed, result.trial)[0])
                svg_path = Path(args.svg_dir) / f"trial_{result.trial:03d}.svg"
                svg_paths.append(str(plot_episode(scene, result, belief_grid(scene, cfg.cell_size), svg_path)))
            output["svg_paths"] = svg_paths
        print_json_stdout(output)

    except KeyboardInterrupt:
        logger.info("Process interrupted.")
        sys.exit(1)
    except Exception as e:
        logger.debug("Batch failed.", exc_info=True)
        report_error(e)
        sys.exit(1)


if __name__ == "__main__":
    main()
