#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
run_episode.py - Runs a single image-goal navigation episode.

Resolves the episode configuration (bundled defaults, optional --config TOML,
then flags), runs one trial and reports its outcome as JSON. Optionally writes
the line-delimited episode log and a top-down SVG.

Usage:
    splatnav-run --difficulty Easy --seed 3 --log run.jsonl --svg run.svg
"""

import logging
import sys
# Suppress all logging output at the earliest possible stage to ensure pure JSON stderr on error.
logging.disable(logging.CRITICAL)

try:
    from splatnav.config import load_episode_config
    from splatnav.harness import belief_grid, resolve_task, run_episode, trial_seeds
    from splatnav.io_utils import (
        GracefulArgumentParser,
        add_log_level_argument,
        print_json_stdout,
        report_error,
    )
    from splatnav.utils import add_episode_arguments, overrides_from_args, write_episode_log
except ImportError:
    sys.stderr.write('{"status": "error", "message": "The \'splatnav\' package is required. Please install it."}\n')
    sys.exit(1)

# --- Tool Characteristics ---
logger = logging.getLogger(__name__)


def main() -> None:
    """Main entry point."""
    logging.disable(logging.NOTSET)

    parser = GracefulArgumentParser(description="Run one image-goal navigation episode.")
    add_episode_arguments(parser)
    parser.add_argument("--trial", type=int, default=0, help="Trial index used to derive the per-trial seeds.")
    parser.add_argument("--log", help="Write the line-delimited episode log to this path.")
    parser.add_argument("--svg", help="Write a top-down SVG of the episode to this path.")
    add_log_level_argument(parser)

    try:
        args = parser.parse_args()
        logging.basicConfig(
            level=getattr(logging, args.log_level),
            format='%(asctime)s - %(levelname)s - %(message)s',
            stream=sys.stderr
        )

        cfg = load_episode_config(args.config, overrides_from_args(args))
        scene, start = resolve_task(cfg, trial_seeds(cfg.seed, args.trial)[0])
        result = run_episode(cfg, args.trial, scene, start)

        output = {
            "status": "success",
            "result": result.summary(),
            "dissimilarities": result.dissimilarities,
            "trajectory": [p.to_list() for p in result.trajectory],
        }
        if args.log:
            output["log_path"] = str(write_episode_log(args.log, [result]))
        if args.svg:
            from splatnav.visualize import plot_episode
            output["svg_path"] = str(plot_episode(scene, result, belief_grid(scene, cfg.cell_size), args.svg))
        print_json_stdout(output)

    except KeyboardInterrupt:
        logger.info("Process interrupted.")
        sys.exit(1)
    except Exception as e:
        logger.debug("Episode failed.", exc_info=True)
        report_error(e)
        sys.exit(1)


if __name__ == "__main__":
    main()
